#include "shipid/rollout.hpp"

#include "shipid/error.hpp"

#include <cstdio>
#include <ostream>

namespace shipid {

ErrorWeights ErrorWeights::standard() {
  ErrorWeights e;
  e.w << 0.0, 100.0, 0.0, 100.0, 0.0, 10.0;
  return e;
}

void ErrorWeights::validate() const {
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw ConfigError("error weights must be finite and non-negative");
  }
}

DerivativeFn model_derivative(const DynamicModel& model) {
  return [&model](const ShipState& x, const ActuatorState& a, const WindState& w) {
    return full_derivative(x, a, w, model);
  };
}

double state_error(const ShipState& simulated, const ShipState& measured,
                   const ErrorWeights& weights) {
  return (weights.w.cwiseProduct(simulated.vector() - measured.vector())).squaredNorm();
}

double trapezoid(std::span<const double> values, std::span<const Sample> samples) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    sum += 0.5 * (values[i + 1] + values[i]) * (samples[i + 1].t - samples[i].t);
  }
  return sum;
}

RolloutResult euler_rollout(const Window& window, const DerivativeFn& derivative,
                            const ErrorWeights& weights) {
  const auto& s = window.samples;
  if (s.size() < 2) throw DataError("rollout needs a window of at least 2 samples");
  RolloutResult result;
  result.states.reserve(s.size());
  result.errors.reserve(s.size());
  result.states.push_back(s.front().ship);
  result.errors.push_back(0.0);
  Vector6d x = s.front().ship.vector();
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double dt = s[i + 1].t - s[i].t;
    x += dt * derivative(ShipState::from_vector(x), s[i].actuator, s[i].wind);
    if (!x.allFinite()) {
      throw DivergenceError("rollout diverged at step " + std::to_string(i + 1) + " of window '" +
                            window.source_id + "@" + std::to_string(window.start_index) + "'");
    }
    result.states.push_back(ShipState::from_vector(x));
    result.errors.push_back(state_error(result.states.back(), s[i + 1].ship, weights));
  }
  result.loss = trapezoid(result.errors, s);
  return result;
}

RolloutResult euler_rollout(const Window& window, const DynamicModel& model,
                            const ErrorWeights& weights) {
  return euler_rollout(window, model_derivative(model), weights);
}

double window_loss(const RolloutResult& result, const Window& window, const ErrorWeights& weights) {
  if (window.length() < 2 || result.states.size() != window.length()) {
    throw DataError("rollout result does not match window");
  }
  std::vector<double> d(window.length());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = state_error(result.states[i], window.samples[i].ship, weights);
  }
  return trapezoid(d, window.samples);
}

double dataset_loss(const WindowDataset& dataset, const DerivativeFn& derivative,
                    const ErrorWeights& weights) {
  if (dataset.empty()) throw DataError("dataset loss of an empty dataset");
  double sum = 0.0;
  for (const Window& w : dataset.windows) sum += euler_rollout(w, derivative, weights).loss;
  return sum / static_cast<double>(dataset.size());
}

double dataset_loss(const WindowDataset& dataset, const DynamicModel& model,
                    const ErrorWeights& weights) {
  return dataset_loss(dataset, model_derivative(model), weights);
}

double objective(const WindowDataset& dataset, const DynamicModel& model,
                 const ErrorWeights& weights, double lambda) {
  if (lambda < 0.0) throw ConfigError("regularization weight must be non-negative");
  return dataset_loss(dataset, model, weights) + lambda * model.net.squared_norm();
}

void write_error_export(std::ostream& out, std::span<const Window> windows,
                        std::span<const RolloutResult> results) {
  out << kErrorExportHeader << '\n';
  char buf[512];
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const Window& w = windows[k];
    const RolloutResult& res = results[k];
    for (std::size_t i = 0; i < w.length(); ++i) {
      const ShipState& m = w.samples[i].ship;
      const ShipState& s = res.states[i];
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k,
                    i, w.samples[i].t, res.errors[i], m.u, s.u, m.vm, s.vm, rad_to_deg(m.r),
                    rad_to_deg(s.r));
      out << buf;
    }
  }
}

}  // namespace shipid
