#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace shipid {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector8d = Eigen::Matrix<double, 8, 1>;

// Positions of each channel inside a 6-vector ship state. Every 6-vector in
// the library (states, derivatives, weights, noise sigmas) uses this order.
namespace channel {
inline constexpr int x0 = 0;
inline constexpr int u = 1;
inline constexpr int y0 = 2;
inline constexpr int vm = 3;
inline constexpr int psi = 4;
inline constexpr int r = 5;
}  // namespace channel

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Wraps an angle into [0, 2*pi).
double wrap_two_pi(double angle);

struct ShipState {
  double x0 = 0.0;   // m
  double u = 0.0;    // m/s
  double y0 = 0.0;   // m
  double vm = 0.0;   // m/s, sway at midship
  double psi = 0.0;  // rad, unwrapped
  double r = 0.0;    // rad/s

  Vector6d vector() const {
    Vector6d v;
    v << x0, u, y0, vm, psi, r;
    return v;
  }
  static ShipState from_vector(const Vector6d& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
  Eigen::Vector3d nu() const { return {u, vm, r}; }
  Eigen::Vector3d eta() const { return {x0, y0, psi}; }
  bool finite() const { return vector().allFinite(); }

  friend bool operator==(const ShipState&, const ShipState&) = default;
};

struct ActuatorState {
  double delta_p = 0.0;  // rad, port rudder
  double delta_s = 0.0;  // rad, starboard rudder
  double n_p = 0.0;      // 1/s, propeller revolutions

  Eigen::Vector3d vector() const { return {delta_p, delta_s, n_p}; }
  bool finite() const { return vector().allFinite(); }

  friend bool operator==(const ActuatorState&, const ActuatorState&) = default;
};

// Apparent wind. Direction is where the wind comes from, measured from the
// bow, clockwise seen from above, in [0, 2*pi).
struct WindState {
  double speed = 0.0;      // U_A, m/s
  double direction = 0.0;  // gamma_A, rad

  Eigen::Vector2d vector() const { return {speed, direction}; }
  bool finite() const { return std::isfinite(speed) && std::isfinite(direction); }

  friend bool operator==(const WindState&, const WindState&) = default;
};

struct Sample {
  double t = 0.0;
  ShipState ship;
  ActuatorState actuator;
  WindState wind;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Validated, immutable time series of samples with strictly increasing
// timestamps and at least two samples.
class Trajectory {
 public:
  Trajectory(std::string id, std::vector<Sample> samples);

  const std::string& id() const { return id_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  double duration() const { return samples_.back().t - samples_.front().t; }

 private:
  std::string id_;
  std::vector<Sample> samples_;
};

// Per-sample (du/dt, dvm/dt, dr/dt), aligned with the source trajectory.
using AccelerationSeries = std::vector<Eigen::Vector3d>;

}  // namespace shipid
