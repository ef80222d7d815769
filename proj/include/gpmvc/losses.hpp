#pragma once

#include "gpmvc/types.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace gpmvc {

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-7;

/// Weights of the adversarial, fusion and clustering terms in the overall
/// objective L = L_AE + l1 L_AT + l2 L_FU + l3 L_KL.
struct LossWeights {
  double adversarial = 1.0;  // l1
  double fusion = 1.0;       // l2
  double clustering = 1.0;   // l3

  void validate() const;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);

// All reconstruction-type losses are reduced as a sum over features and views
// and a mean over samples, so weights do not depend on batch size.

/// sum_v ||X_v - R_v||_F^2 / N.
double autoencoder_loss(std::span<const Matrix> inputs, std::span<const Matrix> reconstructions);
/// dL/dR for one view of autoencoder_loss: 2 (R - X) / N.
Matrix autoencoder_loss_grad(const Matrix& input, const Matrix& reconstruction);

struct GanLosses {
  double d_loss = 0.0;  // -mean log D(real) - mean log(1 - D(fake))
  double g_loss = 0.0;  // -mean log D(fake), the non-saturating generator loss
};

/// Both sides of one view's adversarial game.
GanLosses gan_losses(const Vector& real_probs, const Vector& fake_probs);

/// Gradients of d_loss with respect to the (unclamped) probabilities.
struct GanGradients {
  Vector d_real;
  Vector d_fake;
};
GanGradients discriminator_loss_grad(const Vector& real_probs, const Vector& fake_probs);
/// d g_loss / d fake_probs.
Vector generator_loss_grad(const Vector& fake_probs);

/// ||X - C||_1 / N: mean over samples of the summed absolute error.
double cycle_loss(const Matrix& input, const Matrix& cycle_reconstruction);
/// dL/dC: sign(C - X) / N (0 where equal).
Matrix cycle_loss_grad(const Matrix& input, const Matrix& cycle_reconstruction);

/// sum of per-view GAN terms + lambda_cyc * sum of cycle terms.
double adversarial_training_loss(std::span<const double> gan_terms, std::span<const double> cycle_terms,
                                 double lambda_cyc = 10.0);

/// L_AE + l1 L_AT + l2 L_FU + l3 L_KL. Throws ValidationError on non-finite
/// components.
double total_objective(double autoencoder, double adversarial, double fusion, double clustering,
                       const LossWeights& weights);

}  // namespace gpmvc
