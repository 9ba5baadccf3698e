#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/mlp.hpp"
#include "shipid/types.hpp"

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

namespace shipid {

// Architecture used for identification: 8 inputs, four tanh layers of 256,
// three linear outputs.
std::vector<int> default_architecture();
std::vector<int> architecture(int hidden_width, int hidden_layers);

// Training-set statistics for network inputs (nu, actuators, wind) and for
// the acceleration targets. Population standard deviations.
struct Standardizer {
  Eigen::Vector3d mu_nu = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_nu = Eigen::Vector3d::Ones();
  Eigen::Vector3d mu_act = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_act = Eigen::Vector3d::Ones();
  Eigen::Vector2d mu_wind = Eigen::Vector2d::Zero();
  Eigen::Vector2d sigma_wind = Eigen::Vector2d::Ones();
  Eigen::Vector3d mu_acc = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_acc = Eigen::Vector3d::Ones();

  void validate() const;

  Vector8d input_mean() const;
  Vector8d input_scale() const;
};

// Input statistics from every sample of every window. Acceleration
// statistics come from numerical_acceleration of each window's source
// trajectory, restricted to the samples the windows cover. Throws DataError
// on a zero standard deviation or a missing source.
Standardizer fit_standardizer(const WindowDataset& dataset, std::span<const Trajectory> sources);

Vector8d standardize_input(const Eigen::Vector3d& nu, const Eigen::Vector3d& act,
                           const Eigen::Vector2d& wind, const Standardizer& stats);
Eigen::Vector3d destandardize_output(const Eigen::Vector3d& y, const Standardizer& stats);
Eigen::Vector3d standardize_output(const Eigen::Vector3d& nu_dot, const Standardizer& stats);

// eta_dot = R(psi) * nu.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> kinematics(Scalar psi, const Eigen::Matrix<Scalar, 3, 1>& nu) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(psi);
  const Scalar s = sin(psi);
  return {nu[0] * c - nu[1] * s, nu[0] * s + nu[1] * c, nu[2]};
}

struct DynamicModel {
  Mlp<double> net;
  Standardizer stats;

  // Throws ConfigError unless the network maps 8 inputs to 3 outputs, its
  // parameters are finite and the standardizer is valid.
  void validate() const;
};

DynamicModel make_model(const std::vector<int>& dims, const Standardizer& stats,
                        std::uint64_t seed);

Eigen::Vector3d predict_acceleration(const Eigen::Vector3d& nu, const ActuatorState& act,
                                     const WindState& wind, const DynamicModel& model);

// Full state derivative in ShipState order.
Vector6d full_derivative(const ShipState& x, const ActuatorState& act, const WindState& wind,
                         const DynamicModel& model);

// JSON checkpoint with 17 significant digits per value.
void save_checkpoint(const DynamicModel& model, const std::filesystem::path& path);
DynamicModel load_checkpoint(const std::filesystem::path& path);

}  // namespace shipid
