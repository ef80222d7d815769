#pragma once

#include "gpmvc/types.hpp"

#include <span>
#include <vector>

namespace gpmvc {

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns assignment[row] = column.
std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost);

/// Contingency table between two labelings: rows index the distinct predicted
/// labels, columns the distinct true labels (both in ascending order).
Eigen::MatrixXd contingency_table(std::span<const int> pred, std::span<const int> truth);

/// Best one-to-one mapping accuracy between predicted clusters and classes.
double clustering_accuracy(std::span<const int> pred, std::span<const int> truth);

/// I(pred; truth) / sqrt(H(pred) H(truth)), natural logs; 1 when both
/// entropies vanish, 0 when exactly one does.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Sum over clusters of the majority class count, divided by N.
double purity(std::span<const int> pred, std::span<const int> truth);

}  // namespace gpmvc
