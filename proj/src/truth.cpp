#include "shipid/truth.hpp"

#include "shipid/error.hpp"
#include "shipid/random.hpp"
#include "shipid/timeseries.hpp"

#include <algorithm>
#include <cmath>

namespace shipid {

void TruthModelConfig::validate() const {
  if (!(m_x > 0 && m_y > 0 && I_z > 0)) throw ConfigError("truth inertias must be positive");
  for (double d : {X_u, X_uu, Y_v, Y_vv, N_r, N_rr}) {
    if (d < 0) throw ConfigError("truth damping coefficients must be non-negative");
  }
}

bool ActuatorLimits::contains(const ActuatorState& a) const {
  return a.n_p >= n_p_min && a.n_p <= n_p_max && a.delta_s >= delta_s_min &&
         a.delta_s <= delta_s_max && a.delta_p >= delta_p_min && a.delta_p <= delta_p_max;
}

ActuatorState ManeuverScript::at(double t) const {
  if (steps.empty()) return {};
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](double value, const ManeuverStep& s) { return value < s.start; });
  if (it == steps.begin()) return steps.front().value;
  return std::prev(it)->value;
}

Vector6d truth_derivative(const ShipState& x, const ActuatorState& act, const WindState& wind,
                          const TruthModelConfig& c) {
  const double u = x.u, v = x.vm, r = x.r;
  const double n2 = act.n_p * act.n_p;
  const double ss = std::sin(act.delta_s), cs = std::cos(act.delta_s);
  const double sp = std::sin(act.delta_p), cp = std::cos(act.delta_p);
  const double ua2 = wind.speed * wind.speed;
  const double g = wind.direction;
  const double lift = c.k_ry * n2 * (ss * cs + sp * cp);

  const double du = (-c.X_u * u - c.X_uu * u * std::abs(u) + c.k_t * act.n_p * std::abs(act.n_p) -
                     c.k_rx * n2 * (ss * ss + sp * sp) + c.c_x * ua2 * (-std::cos(g))) /
                    c.m_x;
  const double dv =
      (-c.Y_v * v - c.Y_vv * v * std::abs(v) - c.Y_r * r - lift + c.c_y * ua2 * std::sin(g)) /
      c.m_y;
  const double dr = (-c.N_r * r - c.N_rr * r * std::abs(r) - c.N_v * v - c.x_r * lift +
                     c.c_n * ua2 * std::sin(2.0 * g) / 2.0) /
                    c.I_z;

  const double cpsi = std::cos(x.psi), spsi = std::sin(x.psi);
  Vector6d xdot;
  xdot << u * cpsi - v * spsi, du, u * spsi + v * cpsi, dv, r, dr;
  return xdot;
}

WindState apparent_wind(const ShipState& x, const TrueWind& wind) {
  const double cpsi = std::cos(x.psi), spsi = std::sin(x.psi);
  // Earth-frame air velocity relative to the ship.
  const double rel_n = -wind.speed * std::cos(wind.direction) - (x.u * cpsi - x.vm * spsi);
  const double rel_e = -wind.speed * std::sin(wind.direction) - (x.u * spsi + x.vm * cpsi);
  // Rotate into the ship frame.
  const double bx = cpsi * rel_n + spsi * rel_e;
  const double by = -spsi * rel_n + cpsi * rel_e;
  WindState out;
  out.speed = std::hypot(bx, by);
  out.direction = out.speed > 0.0 ? wrap_two_pi(std::atan2(-by, -bx)) : 0.0;
  return out;
}

ManeuverScript random_maneuver(double duration, std::uint64_t seed, const ActuatorLimits& limits) {
  if (!(duration > 0.0)) throw ConfigError("maneuver duration must be positive");
  struct Change {
    double start;
    int channel;
    double value;
  };
  std::vector<Change> changes;
  const double lo[3] = {limits.delta_p_min, limits.delta_s_min, limits.n_p_min};
  const double hi[3] = {limits.delta_p_max, limits.delta_s_max, limits.n_p_max};
  for (int ch = 0; ch < 3; ++ch) {
    SplitMix rng(derive_seed(seed, static_cast<std::uint64_t>(ch)));
    for (double t = 0.0; t < duration;) {
      changes.push_back({t, ch, rng.uniform(lo[ch], hi[ch])});
      t += rng.uniform(limits.hold_min, limits.hold_max);
    }
  }
  std::stable_sort(changes.begin(), changes.end(),
                   [](const Change& a, const Change& b) { return a.start < b.start; });
  ManeuverScript script;
  ActuatorState current;
  for (const Change& c : changes) {
    if (c.channel == 0) current.delta_p = c.value;
    if (c.channel == 1) current.delta_s = c.value;
    if (c.channel == 2) current.n_p = c.value;
    if (!script.steps.empty() && script.steps.back().start == c.start) {
      script.steps.back().value = current;
    } else {
      script.steps.push_back({c.start, current});
    }
  }
  return script;
}

namespace {

Vector6d rk4_step(const Vector6d& x, double h, const ActuatorState& act, const TrueWind& tw,
                  const TruthModelConfig& cfg) {
  const auto f = [&](const Vector6d& s) {
    const ShipState st = ShipState::from_vector(s);
    return truth_derivative(st, act, apparent_wind(st, tw), cfg);
  };
  const Vector6d k1 = f(x);
  const Vector6d k2 = f(x + 0.5 * h * k1);
  const Vector6d k3 = f(x + 0.5 * h * k2);
  const Vector6d k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::size_t integer_ratio(double a, double b, const char* what) {
  const double ratio = a / b;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * ratio) {
    throw ConfigError(std::string(what) + " must be an integer multiple");
  }
  return static_cast<std::size_t>(k);
}

}  // namespace

Trajectory generate_trajectory(const std::string& id, const TruthModelConfig& cfg,
                               const ManeuverScript& script, std::uint64_t wind_seed,
                               double duration, const GenerationOptions& opt) {
  cfg.validate();
  if (!(duration > 0.0)) throw ConfigError("trajectory duration must be positive");
  const std::size_t sub =
      integer_ratio(opt.input_period, opt.integration_step, "input_period / integration_step");
  const std::size_t rec =
      integer_ratio(opt.record_period, opt.input_period, "record_period / input_period");
  // Number of input cells; small tolerance so 500.5 / 0.1 counts 5005 cells.
  const auto cells = static_cast<std::size_t>(std::floor(duration / opt.input_period + 1e-9));

  SplitMix wind_rng(wind_seed);
  const WindProcessConfig& wp = opt.wind;
  TrueWind tw{wp.mean_speed, wind_rng.uniform(0.0, 2.0 * std::numbers::pi)};

  std::vector<Sample> raw;
  raw.reserve(cells / rec + 1);
  Vector6d x = opt.initial.vector();
  const double h = opt.input_period / static_cast<double>(sub);
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * opt.input_period;
    const ActuatorState act = script.at(t);
    if (k % rec == 0) {
      const ShipState st = ShipState::from_vector(x);
      raw.push_back({t, st, act, apparent_wind(st, tw)});
    }
    if (k == cells) break;
    for (std::size_t j = 0; j < sub; ++j) x = rk4_step(x, h, act, tw, cfg);
    if (!x.allFinite()) {
      throw DivergenceError("truth simulation diverged at t = " + std::to_string(t));
    }
    // Wind advances on the input grid, independent of the integration step.
    const double dt = opt.input_period;
    double speed = tw.speed + wp.reversion_rate * (wp.mean_speed - tw.speed) * dt +
                   wp.speed_volatility * std::sqrt(dt) * wind_rng.normal();
    tw.speed = std::abs(speed);
    tw.direction =
        wrap_two_pi(tw.direction + wp.direction_volatility * std::sqrt(dt) * wind_rng.normal());
  }
  Trajectory traj = downsample(Trajectory(id, std::move(raw)), opt.output_period);
  if (!opt.observation_sigma) return traj;

  std::vector<Sample> noisy = traj.samples();
  SplitMix noise_rng(opt.noise_seed);
  for (Sample& s : noisy) {
    Vector6d v = s.ship.vector();
    for (int c = 0; c < 6; ++c) {
      const double z = noise_rng.normal();
      v[c] += (*opt.observation_sigma)[c] * z;
    }
    s.ship = ShipState::from_vector(v);
  }
  return Trajectory(id, std::move(noisy));
}

}  // namespace shipid
