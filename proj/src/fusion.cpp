#include "gpmvc/fusion.hpp"

#include <cmath>

namespace gpmvc {

namespace {

void check_latents(std::span<const Matrix> latents, const FusionParams& params) {
  if (latents.empty()) throw ValidationError("fusion needs at least one latent matrix");
  if (static_cast<int>(latents.size()) != params.num_views) {
    throw ValidationError("fusion expects " + std::to_string(params.num_views) + " latents");
  }
  for (const auto& z : latents) {
    if (z.rows() != latents[0].rows() || z.cols() != latents[0].cols()) {
      throw ValidationError("shape mismatch among latents");
    }
  }
  if (latents[0].cols() != params.latent_dim) throw ValidationError("latent width does not match fusion");
}

Matrix concat(std::span<const Matrix> latents) {
  const Eigen::Index m = latents[0].cols();
  Matrix c(latents[0].rows(), m * static_cast<Eigen::Index>(latents.size()));
  for (std::size_t v = 0; v < latents.size(); ++v) {
    c.middleCols(static_cast<Eigen::Index>(v) * m, m) = latents[v];
  }
  return c;
}

Matrix project(std::span<const Matrix> latents, const FusionParams& params) {
  Matrix z = concat(latents) * params.projection.value;
  z.rowwise() += params.projection_bias.value.row(0);
  return z;
}

// d raw = J_softmax^T d beta
void beta_backward(FusionParams& params, const Vector& grad_beta) {
  const Vector b = params.beta();
  const double dot = b.dot(grad_beta);
  for (int v = 0; v < params.num_views; ++v) {
    params.raw_weights.grad(0, v) += b(v) * (grad_beta(v) - dot);
  }
}

void weighted_sum_backward(std::span<const Matrix> latents, FusionParams& params, const Matrix& grad_sum,
                           std::span<Matrix> grad_latents) {
  const Vector b = params.beta();
  Vector grad_beta(params.num_views);
  for (int v = 0; v < params.num_views; ++v) {
    grad_beta(v) = (grad_sum.array() * latents[static_cast<std::size_t>(v)].array()).sum();
    grad_latents[static_cast<std::size_t>(v)] += b(v) * grad_sum;
  }
  beta_backward(params, grad_beta);
}

}  // namespace

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "weighted_sum") return FusionMode::WeightedSum;
  if (name == "projected") return FusionMode::Projected;
  throw ValidationError("unknown fusion mode '" + name + "'");
}

std::string to_string(FusionMode m) {
  return m == FusionMode::WeightedSum ? "weighted_sum" : "projected";
}

FusionParams FusionParams::make(int num_views, int latent_dim, FusionMode mode) {
  FusionParams p;
  p.mode = mode;
  p.num_views = num_views;
  p.latent_dim = latent_dim;
  p.raw_weights = Parameter(1, num_views);
  p.projection = Parameter(static_cast<Eigen::Index>(num_views) * latent_dim, latent_dim);
  p.projection_bias = Parameter(1, latent_dim);
  p.reset_projection_to_weighted_sum();
  return p;
}

Vector softmax(const Vector& raw) {
  const double mx = raw.maxCoeff();
  Vector e = (raw.array() - mx).exp();
  return e / e.sum();
}

Vector FusionParams::beta() const { return softmax(raw_weights.value.row(0).transpose()); }

void FusionParams::reset_projection_to_weighted_sum() {
  const Vector b = beta();
  projection.value.setZero();
  for (int v = 0; v < num_views; ++v) {
    for (int c = 0; c < latent_dim; ++c) projection.value(v * latent_dim + c, c) = b(v);
  }
  projection_bias.value.setZero();
}

void FusionParams::zero_grad() {
  raw_weights.zero_grad();
  projection.zero_grad();
  projection_bias.zero_grad();
}

Matrix weighted_sum(std::span<const Matrix> latents, const FusionParams& params) {
  check_latents(latents, params);
  const Vector b = params.beta();
  Matrix z = b(0) * latents[0];
  for (std::size_t v = 1; v < latents.size(); ++v) z += b(static_cast<Eigen::Index>(v)) * latents[v];
  return z;
}

Matrix fuse(std::span<const Matrix> latents, const FusionParams& params) {
  check_latents(latents, params);
  if (params.mode == FusionMode::WeightedSum) return weighted_sum(latents, params);
  return project(latents, params);
}

Matrix fuse_observed(std::span<const Matrix> latents, const Eigen::MatrixXi& observed,
                     const FusionParams& params) {
  check_latents(latents, params);
  const Eigen::Index n = latents[0].rows();
  if (observed.rows() != n || observed.cols() != params.num_views) {
    throw ValidationError("observation mask has the wrong shape");
  }
  const Vector b = params.beta();
  Matrix z = Matrix::Zero(n, params.latent_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (int v = 0; v < params.num_views; ++v) {
      if (observed(i, v)) total += b(v);
    }
    if (total <= 0.0) throw ValidationError("sample observes no view");
    for (int v = 0; v < params.num_views; ++v) {
      if (observed(i, v)) z.row(i) += (b(v) / total) * latents[static_cast<std::size_t>(v)].row(i);
    }
  }
  return z;
}

double fusion_gap_loss(const Matrix& projected, const Matrix& weighted) {
  if (projected.rows() != weighted.rows() || projected.cols() != weighted.cols()) {
    throw ValidationError("shape mismatch in fusion loss");
  }
  if (projected.rows() == 0) return 0.0;
  return (projected - weighted).squaredNorm() / static_cast<double>(projected.rows());
}

double fusion_loss(std::span<const Matrix> latents, const FusionParams& params) {
  check_latents(latents, params);
  if (params.mode == FusionMode::WeightedSum) return 0.0;
  return fusion_gap_loss(project(latents, params), weighted_sum(latents, params));
}

void fuse_backward(std::span<const Matrix> latents, FusionParams& params, const Matrix& grad_fused,
                   std::span<Matrix> grad_latents) {
  if (params.mode == FusionMode::WeightedSum) {
    weighted_sum_backward(latents, params, grad_fused, grad_latents);
    return;
  }
  const Matrix c = concat(latents);
  params.projection.grad.noalias() += c.transpose() * grad_fused;
  params.projection_bias.grad += grad_fused.colwise().sum();
  const Matrix grad_c = grad_fused * params.projection.value.transpose();
  const Eigen::Index m = params.latent_dim;
  for (std::size_t v = 0; v < latents.size(); ++v) {
    grad_latents[v] += grad_c.middleCols(static_cast<Eigen::Index>(v) * m, m);
  }
}

void fusion_loss_backward(std::span<const Matrix> latents, FusionParams& params, double scale,
                          std::span<Matrix> grad_latents) {
  if (params.mode == FusionMode::WeightedSum || scale == 0.0) return;
  const Matrix projected = project(latents, params);
  const Matrix weighted = weighted_sum(latents, params);
  const Matrix gap_grad = (2.0 * scale / static_cast<double>(projected.rows())) * (projected - weighted);
  fuse_backward(latents, params, gap_grad, grad_latents);
  weighted_sum_backward(latents, params, -gap_grad, grad_latents);
}

}  // namespace gpmvc
