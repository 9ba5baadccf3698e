#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/dynamics.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace shipid {

struct ErrorWeights {
  Vector6d w = Vector6d::Zero();

  // (0, 100, 0, 100, 0, 10): position and heading errors ignored.
  static ErrorWeights standard();
  void validate() const;
};

// Any state-derivative source: the identified model, the truth plant, or an
// injected test system.
using DerivativeFn =
    std::function<Vector6d(const ShipState&, const ActuatorState&, const WindState&)>;

DerivativeFn model_derivative(const DynamicModel& model);

struct RolloutResult {
  std::vector<ShipState> states;  // simulated, states[0] is the measured initial state
  std::vector<double> errors;     // d at every sample
  double loss = 0.0;              // trapezoidal integral of errors
};

// d = || w . (x_sim - x) ||^2
double state_error(const ShipState& simulated, const ShipState& measured,
                   const ErrorWeights& weights);

// sum_i (d_{i+1} + d_i) / 2 * (t_{i+1} - t_i)
double trapezoid(std::span<const double> values, std::span<const Sample> samples);

// Forward Euler from the measured initial state with measured controls and
// wind held over each step. Throws DivergenceError naming the step on a
// non-finite state.
RolloutResult euler_rollout(const Window& window, const DerivativeFn& derivative,
                            const ErrorWeights& weights);
RolloutResult euler_rollout(const Window& window, const DynamicModel& model,
                            const ErrorWeights& weights);

double window_loss(const RolloutResult& result, const Window& window, const ErrorWeights& weights);

// Mean window loss; windows are reduced in dataset order.
double dataset_loss(const WindowDataset& dataset, const DerivativeFn& derivative,
                    const ErrorWeights& weights);
double dataset_loss(const WindowDataset& dataset, const DynamicModel& model,
                    const ErrorWeights& weights);

// dataset_loss + lambda * ||theta||^2
double objective(const WindowDataset& dataset, const DynamicModel& model,
                 const ErrorWeights& weights, double lambda);

// CSV: window_id,step,t,d,u_meas,u_sim,vm_meas,vm_sim,r_meas,r_sim
// (r columns in deg/s, matching the trajectory files).
inline constexpr const char* kErrorExportHeader =
    "window_id,step,t,d,u_meas,u_sim,vm_meas,vm_sim,r_meas,r_sim";
void write_error_export(std::ostream& out, std::span<const Window> windows,
                        std::span<const RolloutResult> results);

}  // namespace shipid
