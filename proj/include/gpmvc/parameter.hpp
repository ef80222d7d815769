#pragma once

#include "gpmvc/types.hpp"

namespace gpmvc {

/// A trainable tensor and its accumulated gradient (same shape).
struct Parameter {
  Matrix value;
  Matrix grad;

  explicit Parameter(Eigen::Index rows = 0, Eigen::Index cols = 0)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
  explicit Parameter(Matrix init) : value(std::move(init)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(); }
};

}  // namespace gpmvc
