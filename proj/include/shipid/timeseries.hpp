#pragma once

#include "shipid/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace shipid {

// Exact header of the trajectory CSV. Angles are degrees, r is deg/s.
inline constexpr const char* kTrajectoryCsvHeader =
    "t,x0,u,y0,vm,psi_deg,r_deg,delta_p_deg,delta_s_deg,n_p,U_A,gamma_A_deg";

// Parses a trajectory CSV. Throws DataError naming the offending data row
// (1-based, header excluded).
Trajectory read_trajectory_csv(std::istream& in, std::string id);
Trajectory load_trajectory(const std::filesystem::path& path);

// Writes with 17 significant digits so that a reload reproduces the values
// up to the degree/radian conversion.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);

// Keeps every k-th sample starting at the first, k = target_period / source
// period. The source period is taken from the first step.
Trajectory downsample(const Trajectory& traj, double target_period);

// Central differences of (u, vm, r) at interior samples, one-sided first
// differences at both ends.
AccelerationSeries numerical_acceleration(const Trajectory& traj);

}  // namespace shipid
