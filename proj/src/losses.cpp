#include "gpmvc/losses.hpp"

#include <algorithm>
#include <cmath>

namespace gpmvc {

using nlohmann::json;

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError(std::string(what) + ": shape mismatch");
}

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

bool clamped(double p) { return p < kProbEpsilon || p > 1.0 - kProbEpsilon; }

void check_probs(const Vector& p) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0 && p(i) <= 1.0)) throw ValidationError("probability outside [0, 1]");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(adversarial >= 0.0 && fusion >= 0.0 && clustering >= 0.0)) {
    throw ValidationError("loss weights must be nonnegative");
  }
}

json to_json(const LossWeights& w) {
  return json{{"lambda1", w.adversarial}, {"lambda2", w.fusion}, {"lambda3", w.clustering}};
}

LossWeights loss_weights_from_json(const json& j) {
  LossWeights w;
  w.adversarial = j.value("lambda1", w.adversarial);
  w.fusion = j.value("lambda2", w.fusion);
  w.clustering = j.value("lambda3", w.clustering);
  w.validate();
  return w;
}

double autoencoder_loss(std::span<const Matrix> inputs, std::span<const Matrix> reconstructions) {
  if (inputs.size() != reconstructions.size()) throw ValidationError("autoencoder loss: view count mismatch");
  double total = 0.0;
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    same_shape(inputs[v], reconstructions[v], "autoencoder loss");
    if (inputs[v].rows() == 0) continue;
    total += (inputs[v] - reconstructions[v]).squaredNorm() / static_cast<double>(inputs[v].rows());
  }
  return total;
}

Matrix autoencoder_loss_grad(const Matrix& input, const Matrix& reconstruction) {
  same_shape(input, reconstruction, "autoencoder loss");
  return (2.0 / static_cast<double>(input.rows())) * (reconstruction - input);
}

GanLosses gan_losses(const Vector& real_probs, const Vector& fake_probs) {
  check_probs(real_probs);
  check_probs(fake_probs);
  if (real_probs.size() == 0 || fake_probs.size() == 0) throw ValidationError("empty GAN batch");
  GanLosses out;
  double real_term = 0.0;
  for (Eigen::Index i = 0; i < real_probs.size(); ++i) real_term -= std::log(clamp_prob(real_probs(i)));
  double fake_term = 0.0;
  double gen_term = 0.0;
  for (Eigen::Index i = 0; i < fake_probs.size(); ++i) {
    const double p = clamp_prob(fake_probs(i));
    fake_term -= std::log(1.0 - p);
    gen_term -= std::log(p);
  }
  out.d_loss = real_term / static_cast<double>(real_probs.size()) +
               fake_term / static_cast<double>(fake_probs.size());
  out.g_loss = gen_term / static_cast<double>(fake_probs.size());
  return out;
}

GanGradients discriminator_loss_grad(const Vector& real_probs, const Vector& fake_probs) {
  GanGradients g;
  const double nr = static_cast<double>(real_probs.size());
  const double nf = static_cast<double>(fake_probs.size());
  g.d_real = Vector::Zero(real_probs.size());
  g.d_fake = Vector::Zero(fake_probs.size());
  for (Eigen::Index i = 0; i < real_probs.size(); ++i) {
    if (!clamped(real_probs(i))) g.d_real(i) = -1.0 / (nr * real_probs(i));
  }
  for (Eigen::Index i = 0; i < fake_probs.size(); ++i) {
    if (!clamped(fake_probs(i))) g.d_fake(i) = 1.0 / (nf * (1.0 - fake_probs(i)));
  }
  return g;
}

Vector generator_loss_grad(const Vector& fake_probs) {
  const double nf = static_cast<double>(fake_probs.size());
  Vector g = Vector::Zero(fake_probs.size());
  for (Eigen::Index i = 0; i < fake_probs.size(); ++i) {
    if (!clamped(fake_probs(i))) g(i) = -1.0 / (nf * fake_probs(i));
  }
  return g;
}

double cycle_loss(const Matrix& input, const Matrix& cycle_reconstruction) {
  same_shape(input, cycle_reconstruction, "cycle loss");
  if (input.rows() == 0) return 0.0;
  return (input - cycle_reconstruction).cwiseAbs().sum() / static_cast<double>(input.rows());
}

Matrix cycle_loss_grad(const Matrix& input, const Matrix& cycle_reconstruction) {
  same_shape(input, cycle_reconstruction, "cycle loss");
  return (cycle_reconstruction - input).array().sign().matrix() / static_cast<double>(input.rows());
}

double adversarial_training_loss(std::span<const double> gan_terms, std::span<const double> cycle_terms,
                                 double lambda_cyc) {
  double total = 0.0;
  for (double g : gan_terms) total += g;
  double cyc = 0.0;
  for (double c : cycle_terms) cyc += c;
  return total + lambda_cyc * cyc;
}

double total_objective(double autoencoder, double adversarial, double fusion, double clustering,
                       const LossWeights& weights) {
  weights.validate();
  if (!std::isfinite(autoencoder) || !std::isfinite(adversarial) || !std::isfinite(fusion) ||
      !std::isfinite(clustering)) {
    throw ValidationError("non-finite loss component");
  }
  return autoencoder + weights.adversarial * adversarial + weights.fusion * fusion +
         weights.clustering * clustering;
}

}  // namespace gpmvc
