#include "shipid/gradcheck.hpp"

#include "shipid/random.hpp"
#include "shipid/training.hpp"
#include "shipid/truth.hpp"

#include <cmath>

namespace shipid {

GradientCheckInstance make_gradient_check_instance(std::uint64_t seed, int hidden_width,
                                                   std::size_t steps, std::size_t num_windows) {
  SplitMix rng(derive_seed(seed, 10));
  const double duration = static_cast<double>(steps * num_windows) + 30.0;
  GenerationOptions opt;
  opt.initial.u = rng.uniform(0.0, 1.0);
  opt.initial.vm = rng.uniform(-0.2, 0.2);
  opt.initial.r = rng.uniform(-0.1, 0.1);
  opt.initial.psi = rng.uniform(-3.0, 3.0);
  const Trajectory traj = generate_trajectory("gradcheck", TruthModelConfig{},
                                              random_maneuver(duration, derive_seed(seed, 11)),
                                              derive_seed(seed, 12), duration, opt);
  WindowDataset ds = slice(traj, steps, steps + 3);
  ds.windows.resize(std::min(num_windows, ds.windows.size()));

  Standardizer st;
  st.mu_nu = {rng.uniform(0.0, 0.5), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05)};
  st.sigma_nu = {rng.uniform(0.2, 0.6), rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2)};
  st.mu_act = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(4.0, 8.0)};
  st.sigma_act = {rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(2.0, 5.0)};
  st.mu_wind = {rng.uniform(1.0, 3.0), rng.uniform(2.0, 4.0)};
  st.sigma_wind = {rng.uniform(0.5, 1.5), rng.uniform(1.0, 2.0)};
  st.mu_acc = {rng.uniform(-0.02, 0.02), rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
  st.sigma_acc = {rng.uniform(0.02, 0.1), rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05)};

  DynamicModel model = make_model(architecture(hidden_width, 4), st, derive_seed(seed, 13));
  // Scale up weights so every layer contributes a visible nonlinearity.
  model.net.parameters() *= 1.5;
  for (int k = 0; k < model.net.num_layers(); ++k) {
    auto b = model.net.bias(k);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.3, 0.3);
  }
  ErrorWeights w = ErrorWeights::standard();
  // Non-zero position and heading weights exercise the kinematic adjoint.
  w.w[channel::x0] = rng.uniform(0.5, 2.0);
  w.w[channel::y0] = rng.uniform(0.5, 2.0);
  w.w[channel::psi] = rng.uniform(1.0, 5.0);
  return {std::move(ds), std::move(model), w, rng.uniform(1e-3, 1e-2)};
}

GradientCheckResult check_gradient(const GradientCheckInstance& inst, double step) {
  GradientCheckResult res;
  res.analytic = gradient(inst.windows, inst.model, inst.weights, inst.lambda).gradient;
  DynamicModel probe = inst.model;
  auto& theta = probe.net.parameters();
  res.numeric.resize(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const double plus = objective(inst.windows, probe, inst.weights, inst.lambda);
    theta[i] = saved - step;
    const double minus = objective(inst.windows, probe, inst.weights, inst.lambda);
    theta[i] = saved;
    res.numeric[i] = (plus - minus) / (2.0 * step);
    const double a = res.analytic[i], n = res.numeric[i];
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1.0});
    if (res.worst_index < 0 || rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_index = i;
    }
  }
  return res;
}

}  // namespace shipid
