#pragma once

#include "gpmvc/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpmvc {

/// Deep-embedded clustering head state.
struct ClusterState {
  Matrix centroids;  // k x m
  double alpha = 1.0;
  Matrix q;          // N x k soft assignment
  Matrix p;          // N x k target distribution
};

/// Student's-t soft assignment:
///   q_ij = (1 + |z_i - mu_j|^2 / alpha)^(-(alpha+1)/2), rows normalized.
Matrix soft_assign(const Matrix& z, const Matrix& centroids, double alpha = 1.0);

/// Sharpened target: p_ij proportional to q_ij^2 / f_j with f_j = sum_i q_ij.
/// Throws ValidationError when some cluster has zero frequency.
Matrix target_distribution(const Matrix& q);

/// KL(P || Q) = sum_ij p_ij log(p_ij / q_ij), with 0 log 0 = 0.
double kl_clustering_loss(const Matrix& p, const Matrix& q);

struct KlGradients {
  double loss = 0.0;
  Matrix grad_z;          // N x m
  Matrix grad_centroids;  // k x m
};

/// KL(P || Q(Z, mu)) and its gradients with P held constant.
KlGradients kl_clustering_gradients(const Matrix& z, const Matrix& centroids, const Matrix& p,
                                    double alpha = 1.0);

/// argmax per row; ties go to the smallest index.
std::vector<int> assign_clusters(const Matrix& q);

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-4;  // relative to the mean per-feature variance
  int restarts = 10;        // k-means++ seedings; the lowest inertia wins
};

struct KMeansResult {
  Matrix centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd iterations from given centroids.
KMeansResult lloyd(const Matrix& z, Matrix centroids, const KMeansOptions& options);

/// Seeded k-means with greedy k-means++ seeding.
KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Cluster centroids for the DEC head: kmeans(z, k, seed).centroids.
Matrix init_centroids(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Replaces every centroid whose soft frequency is below `min_frequency` by
/// the sample with the lowest max_j q_ij (distinct samples per centroid).
/// Returns the number of centroids re-seeded.
int reseed_empty_clusters(const Matrix& z, Matrix& centroids, const Matrix& q, double min_frequency = 1e-12);

}  // namespace gpmvc
