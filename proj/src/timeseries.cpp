#include "shipid/timeseries.hpp"

#include "shipid/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace shipid {

double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  // fmod of a tiny negative value can round up to exactly 2*pi.
  if (wrapped >= two_pi) wrapped = 0.0;
  return wrapped;
}

Trajectory::Trajectory(std::string id, std::vector<Sample> samples)
    : id_(std::move(id)), samples_(std::move(samples)) {
  if (samples_.size() < 2) {
    throw DataError("trajectory '" + id_ + "' needs at least 2 samples");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    const std::string row = std::to_string(i + 1);
    if (!std::isfinite(s.t) || !s.ship.finite() || !s.actuator.finite() || !s.wind.finite()) {
      throw DataError("non-finite value at row " + row);
    }
    if (s.wind.speed < 0.0) throw DataError("negative apparent wind speed at row " + row);
    if (i > 0 && !(s.t > samples_[i - 1].t)) {
      throw DataError("non-monotonic timestamp at row " + row);
    }
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t row) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  if (end == begin || (end && *end != '\0')) {
    throw DataError("unparsable value '" + text + "' at row " + std::to_string(row));
  }
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in, std::string id) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trajectory file");
  line = strip_cr(line);
  // Tolerate a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kTrajectoryCsvHeader) {
    throw DataError("malformed header: expected '" + std::string(kTrajectoryCsvHeader) + "'");
  }
  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const auto f = split_fields(line);
    if (f.size() != 12) {
      throw DataError("expected 12 fields at row " + std::to_string(row) + ", got " +
                      std::to_string(f.size()));
    }
    double v[12];
    for (int k = 0; k < 12; ++k) {
      v[k] = parse_number(f[static_cast<std::size_t>(k)], row);
      if (!std::isfinite(v[k])) throw DataError("non-finite value at row " + std::to_string(row));
    }
    if (!samples.empty() && !(v[0] > samples.back().t)) {
      throw DataError("non-monotonic timestamp at row " + std::to_string(row));
    }
    Sample s;
    s.t = v[0];
    s.ship = {v[1], v[2], v[3], v[4], deg_to_rad(v[5]), deg_to_rad(v[6])};
    s.actuator = {deg_to_rad(v[7]), deg_to_rad(v[8]), v[9]};
    if (v[10] < 0.0) throw DataError("negative apparent wind speed at row " + std::to_string(row));
    s.wind = {v[10], wrap_two_pi(deg_to_rad(v[11]))};
    samples.push_back(s);
  }
  return Trajectory(std::move(id), std::move(samples));
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  try {
    return read_trajectory_csv(in, path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryCsvHeader << '\n';
  char buf[512];
  for (const Sample& s : traj.samples()) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                  s.ship.x0, s.ship.u, s.ship.y0, s.ship.vm, rad_to_deg(s.ship.psi),
                  rad_to_deg(s.ship.r), rad_to_deg(s.actuator.delta_p),
                  rad_to_deg(s.actuator.delta_s), s.actuator.n_p, s.wind.speed,
                  rad_to_deg(s.wind.direction));
    out << buf;
  }
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file " + path.string());
  write_trajectory_csv(out, traj);
  if (!out) throw DataError("failed writing " + path.string());
}

Trajectory downsample(const Trajectory& traj, double target_period) {
  const double source_period = traj[1].t - traj[0].t;
  if (!(target_period > 0.0)) throw ConfigError("downsample period must be positive");
  const double ratio = target_period / source_period;
  const double k_rounded = std::round(ratio);
  if (k_rounded < 1.0 || std::abs(ratio - k_rounded) > 1e-9 * ratio) {
    throw ConfigError("downsample period " + std::to_string(target_period) +
                      " is not an integer multiple of the sampling period " +
                      std::to_string(source_period));
  }
  const auto k = static_cast<std::size_t>(k_rounded);
  std::vector<Sample> kept;
  kept.reserve(traj.size() / k + 1);
  for (std::size_t i = 0; i < traj.size(); i += k) kept.push_back(traj[i]);
  return Trajectory(traj.id(), std::move(kept));
}

AccelerationSeries numerical_acceleration(const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 3) throw DataError("numerical differentiation needs at least 3 samples");
  AccelerationSeries acc(n);
  const auto nu = [&](std::size_t i) { return traj[i].ship.nu(); };
  acc[0] = (nu(1) - nu(0)) / (traj[1].t - traj[0].t);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    acc[i] = (nu(i + 1) - nu(i - 1)) / (traj[i + 1].t - traj[i - 1].t);
  }
  acc[n - 1] = (nu(n - 1) - nu(n - 2)) / (traj[n - 1].t - traj[n - 2].t);
  return acc;
}

}  // namespace shipid
