#include "gpmvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace gpmvc {

std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ValidationError("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] > 0) assignment[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  }
  return assignment;
}

namespace {

void check_lengths(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ValidationError("label vectors differ in length");
  if (pred.empty()) throw ValidationError("empty label vectors");
}

std::map<int, int> dense_ids(std::span<const int> labels) {
  std::map<int, int> ids;
  for (int y : labels) ids.emplace(y, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  return ids;
}

double entropy(const Eigen::VectorXd& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0.0) {
      const double p = counts(i) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

Eigen::MatrixXd contingency_table(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth);
  const auto pid = dense_ids(pred);
  const auto tid = dense_ids(truth);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pid.size()),
                                            static_cast<Eigen::Index>(tid.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) c(pid.at(pred[i]), tid.at(truth[i])) += 1.0;
  return c;
}

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth) {
  const Eigen::MatrixXd c = contingency_table(pred, truth);
  const Eigen::Index n = std::max(c.rows(), c.cols());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  const double top = c.maxCoeff();
  cost.topLeftCorner(c.rows(), c.cols()) = (top - c.array()).matrix();
  // padding rows/cols carry zero agreement
  if (c.rows() < n) cost.bottomRows(n - c.rows()).setConstant(top);
  if (c.cols() < n) cost.rightCols(n - c.cols()).setConstant(top);
  const auto assignment = hungarian_min_cost(cost);
  double hits = 0.0;
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    const int col = assignment[static_cast<std::size_t>(r)];
    if (col < c.cols()) hits += c(r, col);
  }
  return hits / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  const Eigen::MatrixXd c = contingency_table(pred, truth);
  const double n = static_cast<double>(pred.size());
  const Eigen::VectorXd rows = c.rowwise().sum();
  const Eigen::VectorXd cols = c.colwise().sum().transpose();
  const double hp = entropy(rows, n);
  const double ht = entropy(cols, n);
  if (hp <= 0.0 && ht <= 0.0) return 1.0;
  if (hp <= 0.0 || ht <= 0.0) return 0.0;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (c(i, j) > 0.0) mi += (c(i, j) / n) * std::log(n * c(i, j) / (rows(i) * cols(j)));
    }
  }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

double purity(std::span<const int> pred, std::span<const int> truth) {
  const Eigen::MatrixXd c = contingency_table(pred, truth);
  return c.rowwise().maxCoeff().sum() / static_cast<double>(pred.size());
}

}  // namespace gpmvc
