#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/dynamics.hpp"
#include "shipid/rollout.hpp"

#include <cstdint>

namespace shipid {

// A small randomized identification problem for checking gradients.
struct GradientCheckInstance {
  WindowDataset windows;
  DynamicModel model;
  ErrorWeights weights;
  double lambda = 0.0;
};

// Hidden layers of `hidden_width` units (4 of them), windows of `steps`
// samples cut from a short truth-plant trajectory, random standardizer.
GradientCheckInstance make_gradient_check_instance(std::uint64_t seed, int hidden_width = 4,
                                                   std::size_t steps = 8,
                                                   std::size_t num_windows = 2);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

// Compares gradient() with central differences of objective(); the relative
// error of each entry is |a - n| / max(|a|, |n|, 1).
GradientCheckResult check_gradient(const GradientCheckInstance& instance, double step = 1e-6);

}  // namespace shipid
