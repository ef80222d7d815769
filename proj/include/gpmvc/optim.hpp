#pragma once

#include "gpmvc/parameter.hpp"

#include <vector>

namespace gpmvc {

/// Adam over a fixed list of parameters (default moment coefficients).
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(std::vector<Parameter*> params, Options options);

  /// Applies one update from the accumulated gradients.
  void step();
  void zero_grad();
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  Options options_;
  long t_ = 0;
};

}  // namespace gpmvc
