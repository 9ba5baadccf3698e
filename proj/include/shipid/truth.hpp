#pragma once

#include "shipid/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace shipid {

// Coefficients of the synthetic 3-DOF plant used as ground truth. Defaults
// describe a roughly 3 m model ship reaching about 1 m/s at full propeller
// revolutions. This is a stand-in plant, not a hydrodynamic model.
struct TruthModelConfig {
  double m_x = 120.0;  // kg, surge inertia including added mass
  double m_y = 200.0;  // kg
  double I_z = 80.0;   // kg m^2
  double X_u = 15.0;
  double X_uu = 35.0;
  double Y_v = 40.0;
  double Y_vv = 80.0;
  double Y_r = 4.0;
  double N_v = 3.0;
  double N_r = 40.0;
  double N_rr = 60.0;
  double k_t = 0.32;   // thrust per n_p^2
  double k_rx = 0.05;  // rudder drag per n_p^2
  double k_ry = 0.08;  // rudder lift per n_p^2
  double x_r = -1.2;   // m, rudder lever arm from midship
  double c_x = 0.1;    // wind force gains per U_A^2
  double c_y = 0.3;
  double c_n = 0.4;

  void validate() const;
};

// Seeded true-wind process: mean-reverting speed reflected at zero and a
// random-walk direction.
struct WindProcessConfig {
  double mean_speed = 2.0;             // m/s
  double reversion_rate = 0.01;        // 1/s
  double speed_volatility = 0.14;      // m/s per sqrt(s)
  double direction_volatility = 0.02;  // rad per sqrt(s)
};

struct TrueWind {
  double speed = 0.0;      // U_T, m/s
  double direction = 0.0;  // gamma_T, rad, earth frame, direction the wind comes from
};

struct ActuatorLimits {
  double n_p_min = 0.0, n_p_max = 12.5;
  double delta_s_min = deg_to_rad(-35.0), delta_s_max = deg_to_rad(105.0);
  double delta_p_min = deg_to_rad(-105.0), delta_p_max = deg_to_rad(35.0);
  double hold_min = 5.0, hold_max = 30.0;  // s

  bool contains(const ActuatorState& a) const;
};

struct ManeuverStep {
  double start = 0.0;
  ActuatorState value;
};

// Piecewise-constant actuator schedule, sorted by start time, first entry at 0.
struct ManeuverScript {
  std::vector<ManeuverStep> steps;

  ActuatorState at(double t) const;
};

// 3-DOF truth dynamics in ShipState order.
Vector6d truth_derivative(const ShipState& x, const ActuatorState& act, const WindState& wind,
                          const TruthModelConfig& cfg);

WindState apparent_wind(const ShipState& x, const TrueWind& wind);

// Each channel independently holds a uniform value within its limits for a
// uniform duration in [hold_min, hold_max], until `duration` is covered.
ManeuverScript random_maneuver(double duration, std::uint64_t seed,
                               const ActuatorLimits& limits = {});

struct GenerationOptions {
  double integration_step = 0.1;  // s, RK4 step
  double input_period = 0.1;      // s, zero-order hold grid for controls and wind
  double record_period = 0.1;     // s, raw recording rate before downsampling
  double output_period = 1.0;     // s
  WindProcessConfig wind;
  // Additive Gaussian noise on recorded ship states, standard deviations.
  std::optional<Vector6d> observation_sigma;
  std::uint64_t noise_seed = 0;
  ShipState initial;
};

// Integrates the truth plant with RK4 under the script and a seeded wind
// process, records at `record_period`, then downsamples to `output_period`.
// Samples are at t = 0, output_period, ... <= duration.
Trajectory generate_trajectory(const std::string& id, const TruthModelConfig& cfg,
                               const ManeuverScript& script, std::uint64_t wind_seed,
                               double duration, const GenerationOptions& options = {});

}  // namespace shipid
