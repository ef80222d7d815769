#pragma once

#include "gpmvc/parameter.hpp"
#include "gpmvc/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace gpmvc {

enum class FusionMode {
  WeightedSum,  // Z = sum_v beta_v Z_v
  Projected,    // Z = [Z_1 ... Z_V] W + b, regularized toward the weighted sum
};

FusionMode parse_fusion_mode(const std::string& name);
std::string to_string(FusionMode m);

/// Learnable fusion of V latent matrices into one common representation.
///
/// beta = softmax(raw_weights). In Projected mode the common representation is
/// an affine map of the concatenated latents.
struct FusionParams {
  FusionMode mode = FusionMode::Projected;
  int num_views = 0;
  int latent_dim = 0;
  Parameter raw_weights;      // 1 x V
  Parameter projection;       // (V*m) x m
  Parameter projection_bias;  // 1 x m

  static FusionParams make(int num_views, int latent_dim, FusionMode mode);

  Vector beta() const;
  /// Projection that reproduces the current weighted sum exactly.
  void reset_projection_to_weighted_sum();
  void zero_grad();
};

/// Numerically safe softmax.
Vector softmax(const Vector& raw);

/// Common representation of V latents of equal shape N x m.
Matrix fuse(std::span<const Matrix> latents, const FusionParams& params);

/// sum_v beta_v Z_v.
Matrix weighted_sum(std::span<const Matrix> latents, const FusionParams& params);

/// Weighted sum over the views each sample observes, with beta renormalized
/// over that subset. observed(i, v) != 0 marks an observed view. Rows of
/// unobserved latents are ignored.
Matrix fuse_observed(std::span<const Matrix> latents, const Eigen::MatrixXi& observed,
                     const FusionParams& params);

/// Mean-per-sample squared Frobenius gap between the projection output and the
/// weighted sum: ||f(Z; beta) - sum_v beta_v Z_v||_F^2 / N. Zero in
/// WeightedSum mode.
double fusion_loss(std::span<const Matrix> latents, const FusionParams& params);

/// Squared Frobenius norm of a gap matrix, divided by its row count.
double fusion_gap_loss(const Matrix& projected, const Matrix& weighted);

/// Backward of fuse: accumulates parameter gradients into `params` and adds
/// dL/dZ_v into grad_latents[v].
void fuse_backward(std::span<const Matrix> latents, FusionParams& params, const Matrix& grad_fused,
                   std::span<Matrix> grad_latents);

/// Backward of `scale * fusion_loss`.
void fusion_loss_backward(std::span<const Matrix> latents, FusionParams& params, double scale,
                          std::span<Matrix> grad_latents);

}  // namespace gpmvc
