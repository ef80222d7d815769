#include "gpmvc/clustering.hpp"

#include "gpmvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gpmvc {

namespace {

Matrix squared_distances(const Matrix& z, const Matrix& centroids) {
  const Vector zn = z.rowwise().squaredNorm();
  const Vector cn = centroids.rowwise().squaredNorm();
  Matrix d = -2.0 * z * centroids.transpose();
  d.colwise() += zn;
  d.rowwise() += cn.transpose();
  return d.cwiseMax(0.0);
}

void check_cluster_inputs(const Matrix& z, const Matrix& centroids, double alpha) {
  if (centroids.rows() < 2) throw ValidationError("soft assignment needs k >= 2");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (z.cols() != centroids.cols()) throw ValidationError("latent and centroid widths differ");
  if (!z.allFinite() || !centroids.allFinite()) throw ValidationError("non-finite input to soft assignment");
}

}  // namespace

Matrix soft_assign(const Matrix& z, const Matrix& centroids, double alpha) {
  check_cluster_inputs(z, centroids, alpha);
  const double power = -(alpha + 1.0) / 2.0;
  Matrix q = squared_distances(z, centroids);
  q = ((q.array() / alpha + 1.0).pow(power)).matrix();
  const Vector sums = q.rowwise().sum();
  for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= sums(i);
  return q;
}

Matrix target_distribution(const Matrix& q) {
  const RowVector f = q.colwise().sum();
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (!(f(j) > 0.0)) {
      throw ValidationError("cluster " + std::to_string(j) + " has zero soft frequency");
    }
  }
  Matrix p = q.cwiseAbs2();
  for (Eigen::Index j = 0; j < p.cols(); ++j) p.col(j) /= f(j);
  const Vector sums = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= sums(i);
  return p;
}

double kl_clustering_loss(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ValidationError("P and Q shapes differ");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij <= 0.0) continue;
      if (q(i, j) <= 0.0) throw ValidationError("KL undefined: p > 0 where q = 0");
      total += pij * std::log(pij / q(i, j));
    }
  }
  return total;
}

KlGradients kl_clustering_gradients(const Matrix& z, const Matrix& centroids, const Matrix& p, double alpha) {
  check_cluster_inputs(z, centroids, alpha);
  const Matrix q = soft_assign(z, centroids, alpha);
  KlGradients out;
  out.loss = kl_clustering_loss(p, q);
  // dL/dz_i = (alpha+1)/alpha * sum_j (p_ij - q_ij) (z_i - mu_j) / (1 + d_ij/alpha)
  const Matrix d = squared_distances(z, centroids);
  const Matrix w = ((alpha + 1.0) / alpha) * ((p - q).array() / (1.0 + d.array() / alpha)).matrix();
  out.grad_z = w.rowwise().sum().asDiagonal() * z - w * centroids;
  out.grad_centroids = -(w.transpose() * z - w.colwise().sum().transpose().asDiagonal() * centroids);
  return out;
}

std::vector<int> assign_clusters(const Matrix& q) {
  std::vector<int> labels(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < q.cols(); ++j) {
      if (q(i, j) > q(i, best)) best = j;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// k-means

KMeansResult lloyd(const Matrix& z, Matrix centroids, const KMeansOptions& options) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = centroids.rows();
  const RowVector mean = z.colwise().mean();
  const double variance = (z.rowwise() - mean).squaredNorm() / static_cast<double>(n * z.cols());
  const double tol = options.tolerance * variance;

  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix d = squared_distances(z, centroids);
    Matrix sums = Matrix::Zero(k, z.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    std::vector<double> best_d(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < k; ++j) {
        if (d(i, j) < d(i, best)) best = j;
      }
      r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
      best_d[static_cast<std::size_t>(i)] = d(i, best);
      sums.row(best) += z.row(i);
      ++counts[static_cast<std::size_t>(best)];
    }
    Matrix next = centroids;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        next.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      } else {
        // empty cluster: move it to the point farthest from its centroid
        const auto far = std::max_element(best_d.begin(), best_d.end()) - best_d.begin();
        next.row(j) = z.row(far);
        best_d[static_cast<std::size_t>(far)] = 0.0;
      }
    }
    const double shift = (next - centroids).squaredNorm();
    centroids = std::move(next);
    r.iterations = it + 1;
    if (shift <= tol) break;
  }
  const Matrix d = squared_distances(z, centroids);
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < k; ++j) {
      if (d(i, j) < d(i, best)) best = j;
    }
    r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    r.inertia += d(i, best);
  }
  r.centroids = std::move(centroids);
  return r;
}

namespace {

Eigen::Index sample_by_weight(const Vector& w, double total, Rng& rng) {
  const Eigen::Index n = w.size();
  if (total <= 0.0) return static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  const double target = rng.uniform01() * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += w(i);
    if (acc > target) return i;
  }
  return n - 1;
}

// Greedy k-means++: each new centroid is the best of 2 + floor(ln k) candidates
// drawn by D^2 weighting, judged by the resulting potential.
Matrix kmeanspp_seed(const Matrix& z, int k, Rng& rng) {
  const Eigen::Index n = z.rows();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  Matrix c(k, z.cols());
  const auto first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  c.row(0) = z.row(first);
  Vector closest = (z.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = closest.sum();
    Eigen::Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Vector best_closest;
    for (int t = 0; t < trials; ++t) {
      const Eigen::Index cand = sample_by_weight(closest, total, rng);
      Vector next = closest.cwiseMin((z.rowwise() - z.row(cand)).rowwise().squaredNorm());
      const double potential = next.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best = cand;
        best_closest = std::move(next);
      }
    }
    c.row(j) = z.row(best);
    closest = std::move(best_closest);
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1) throw ValidationError("k must be positive");
  if (z.rows() < k) throw ValidationError("k-means needs at least k samples");
  if (!z.allFinite()) throw ValidationError("non-finite input to k-means");
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    KMeansResult res = lloyd(z, kmeanspp_seed(z, k, rng), options);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

Matrix init_centroids(const Matrix& z, int k, std::uint64_t seed, const KMeansOptions& options) {
  return kmeans(z, k, seed, options).centroids;
}

int reseed_empty_clusters(const Matrix& z, Matrix& centroids, const Matrix& q, double min_frequency) {
  const RowVector f = q.colwise().sum();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(q.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector confidence = q.rowwise().maxCoeff();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return confidence(a) < confidence(b); });
  int reseeded = 0;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (f(j) < min_frequency && static_cast<std::size_t>(reseeded) < order.size()) {
      centroids.row(j) = z.row(order[static_cast<std::size_t>(reseeded)]);
      ++reseeded;
    }
  }
  return reseeded;
}

}  // namespace gpmvc
