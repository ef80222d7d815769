#pragma once

#include "gpmvc/dataio.hpp"
#include "gpmvc/parameter.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gpmvc::testing {

/// Central-difference step and denominator floor used by every gradient check.
inline constexpr double kFdStep = 1e-6;
inline constexpr double kFdFloor = 1e-5;

/// |a - n| / max(|a|, |n|, kFdFloor).
double relative_error(double analytic, double numeric);

/// Compares the gradients accumulated by `analytic` (called once on zeroed
/// gradients) with central differences of `loss` in every parameter entry.
/// Returns the largest relative error.
double max_fd_error(std::span<Parameter* const> params, const std::function<double()>& loss,
                    const std::function<void()>& analytic);

std::size_t scalar_count(std::span<Parameter* const> params);

struct GradCheck {
  std::string name;
  std::size_t parameters = 0;
  double max_error = 0.0;
};

/// Toy 16-parameter models with freshly drawn parameters and inputs.
GradCheck check_autoencoder_gradient(std::uint64_t draw);
GradCheck check_discriminator_gradient(std::uint64_t draw);
GradCheck check_generator_gradient(std::uint64_t draw);
GradCheck check_cycle_gradient(std::uint64_t draw);
GradCheck check_fusion_gradient(std::uint64_t draw);
GradCheck check_clustering_gradient(std::uint64_t draw);

/// All six checks for draws 0..draws-1; one entry per loss with the worst draw.
std::vector<GradCheck> run_gradient_checks(int draws);

/// Best label agreement over every bijection, by enumeration.
double brute_force_accuracy(std::span<const int> pred, std::span<const int> truth);

/// V views of k Gaussian clusters. View v of a sample in class c is
/// centers[v][c] + noise * N(0, I), min-max scaled. Classes are balanced.
MultiViewDataset gaussian_views(std::size_t n, const std::vector<int>& dims, int k, double noise,
                                std::uint64_t seed);

/// Linear multi-view data whose views are all copies of one d-dim signal, so
/// an encoder-decoder pair of width d reproduces it exactly.
MultiViewDataset linear_copies(std::size_t n, int d, int views, int k, std::uint64_t seed);

/// Two image views (side x side pixels) of k blob classes.
MultiViewDataset image_views(std::size_t n, int side, int k, std::uint64_t seed);

/// Fresh empty directory below the system temp directory.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace gpmvc::testing
