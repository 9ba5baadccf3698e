#include "shipid/dynamics.hpp"

#include "shipid/error.hpp"
#include "shipid/timeseries.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace shipid {

std::vector<int> default_architecture() { return architecture(256, 4); }

std::vector<int> architecture(int hidden_width, int hidden_layers) {
  if (hidden_width < 1 || hidden_layers < 0) throw ConfigError("invalid network architecture");
  std::vector<int> dims{8};
  for (int k = 0; k < hidden_layers; ++k) dims.push_back(hidden_width);
  dims.push_back(3);
  return dims;
}

void Standardizer::validate() const {
  const bool positive = (sigma_nu.array() > 0).all() && (sigma_act.array() > 0).all() &&
                        (sigma_wind.array() > 0).all() && (sigma_acc.array() > 0).all();
  const bool finite = mu_nu.allFinite() && sigma_nu.allFinite() && mu_act.allFinite() &&
                      sigma_act.allFinite() && mu_wind.allFinite() && sigma_wind.allFinite() &&
                      mu_acc.allFinite() && sigma_acc.allFinite();
  if (!positive || !finite) throw ConfigError("standardizer needs finite, positive deviations");
}

Vector8d Standardizer::input_mean() const {
  Vector8d m;
  m << mu_nu, mu_act, mu_wind;
  return m;
}

Vector8d Standardizer::input_scale() const {
  Vector8d s;
  s << sigma_nu, sigma_act, sigma_wind;
  return s;
}

namespace {

// Mean and population deviation of the columns' rows.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

Moments moments(const std::vector<Eigen::VectorXd>& values) {
  const Eigen::Index dim = values.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& v : values) mean += v;
  mean /= static_cast<double>(values.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& v : values) var += (v - mean).cwiseAbs2();
  var /= static_cast<double>(values.size());
  return {mean, var.cwiseSqrt()};
}

void require_spread(const Eigen::VectorXd& sigma, const char* group) {
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    if (!(sigma[j] > 0.0)) {
      throw DataError(std::string("degenerate channel: ") + group + "[" + std::to_string(j) +
                      "] has zero standard deviation");
    }
  }
}

}  // namespace

Standardizer fit_standardizer(const WindowDataset& dataset, std::span<const Trajectory> sources) {
  if (dataset.empty()) throw DataError("cannot fit standardizer on an empty dataset");
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> accels;
  std::map<std::string, AccelerationSeries> acc_by_source;
  for (const Trajectory& t : sources) acc_by_source.emplace(t.id(), numerical_acceleration(t));

  for (const Window& w : dataset.windows) {
    for (const Sample& s : w.samples) {
      Eigen::VectorXd v(8);
      v << s.ship.nu(), s.actuator.vector(), s.wind.vector();
      inputs.push_back(v);
    }
    const auto it = acc_by_source.find(w.source_id);
    if (it == acc_by_source.end()) {
      throw DataError("no source trajectory '" + w.source_id + "' for acceleration statistics");
    }
    if (w.start_index + w.length() > it->second.size()) {
      throw DataError("window exceeds source trajectory '" + w.source_id + "'");
    }
    for (std::size_t i = 0; i < w.length(); ++i) accels.emplace_back(it->second[w.start_index + i]);
  }

  const Moments in = moments(inputs);
  const Moments acc = moments(accels);
  require_spread(in.stddev, "input");
  require_spread(acc.stddev, "acceleration");

  Standardizer st;
  st.mu_nu = in.mean.segment<3>(0);
  st.sigma_nu = in.stddev.segment<3>(0);
  st.mu_act = in.mean.segment<3>(3);
  st.sigma_act = in.stddev.segment<3>(3);
  st.mu_wind = in.mean.segment<2>(6);
  st.sigma_wind = in.stddev.segment<2>(6);
  st.mu_acc = acc.mean;
  st.sigma_acc = acc.stddev;
  return st;
}

Vector8d standardize_input(const Eigen::Vector3d& nu, const Eigen::Vector3d& act,
                           const Eigen::Vector2d& wind, const Standardizer& stats) {
  Vector8d s;
  s << (nu - stats.mu_nu).cwiseQuotient(stats.sigma_nu),
      (act - stats.mu_act).cwiseQuotient(stats.sigma_act),
      (wind - stats.mu_wind).cwiseQuotient(stats.sigma_wind);
  return s;
}

Eigen::Vector3d destandardize_output(const Eigen::Vector3d& y, const Standardizer& stats) {
  return stats.sigma_acc.cwiseProduct(y) + stats.mu_acc;
}

Eigen::Vector3d standardize_output(const Eigen::Vector3d& nu_dot, const Standardizer& stats) {
  return (nu_dot - stats.mu_acc).cwiseQuotient(stats.sigma_acc);
}

void DynamicModel::validate() const {
  if (net.input_dim() != 8 || net.output_dim() != 3) {
    throw ConfigError("dynamic model network must map 8 inputs to 3 outputs");
  }
  if (!net.finite()) throw ConfigError("dynamic model has non-finite parameters");
  stats.validate();
}

DynamicModel make_model(const std::vector<int>& dims, const Standardizer& stats,
                        std::uint64_t seed) {
  DynamicModel model{Mlp<double>::uniform_init(dims, seed), stats};
  model.validate();
  return model;
}

Eigen::Vector3d predict_acceleration(const Eigen::Vector3d& nu, const ActuatorState& act,
                                     const WindState& wind, const DynamicModel& model) {
  const Vector8d s = standardize_input(nu, act.vector(), wind.vector(), model.stats);
  const Eigen::VectorXd y = model.net.forward(s);
  return destandardize_output(y.head<3>(), model.stats);
}

Vector6d full_derivative(const ShipState& x, const ActuatorState& act, const WindState& wind,
                         const DynamicModel& model) {
  const Eigen::Vector3d nu = x.nu();
  const Eigen::Vector3d nu_dot = predict_acceleration(nu, act, wind, model);
  const Eigen::Vector3d eta_dot = kinematics(x.psi, nu);
  Vector6d xdot;
  xdot << eta_dot[0], nu_dot[0], eta_dot[1], nu_dot[1], eta_dot[2], nu_dot[2];
  return xdot;
}

namespace {

constexpr int kCheckpointVersion = 1;

void write_array(std::ostream& out, const double* data, Eigen::Index n) {
  char buf[40];
  out << '[';
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data[i]);
    if (i) out << ',';
    out << buf;
  }
  out << ']';
}

template <typename Vec>
void write_vec(std::ostream& out, const char* key, const Vec& v, bool last = false) {
  out << "    \"" << key << "\": ";
  write_array(out, v.data(), v.size());
  out << (last ? "\n" : ",\n");
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const nlohmann::json& j, const char* key) {
  const auto values = j.at(key).get<std::vector<double>>();
  if (values.size() != N)
    throw DataError(std::string("checkpoint field '") + key + "' has wrong size");
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(values.data());
}

}  // namespace

void save_checkpoint(const DynamicModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const auto& st = model.stats;
  out << "{\n  \"format_version\": " << kCheckpointVersion << ",\n  \"architecture\": [";
  for (std::size_t k = 0; k < model.net.dims().size(); ++k) {
    out << (k ? "," : "") << model.net.dims()[k];
  }
  out << "],\n  \"activation\": \"tanh\",\n  \"standardizer\": {\n";
  write_vec(out, "mu_nu", st.mu_nu);
  write_vec(out, "sigma_nu", st.sigma_nu);
  write_vec(out, "mu_act", st.mu_act);
  write_vec(out, "sigma_act", st.sigma_act);
  write_vec(out, "mu_wind", st.mu_wind);
  write_vec(out, "sigma_wind", st.sigma_wind);
  write_vec(out, "mu_acc", st.mu_acc);
  write_vec(out, "sigma_acc", st.sigma_acc, true);
  out << "  },\n  \"layers\": [\n";
  for (int k = 0; k < model.net.num_layers(); ++k) {
    const auto w = model.net.weight(k);
    const auto b = model.net.bias(k);
    out << "    {\"weights\": ";
    write_array(out, w.data(), w.size());  // row-major storage
    out << ", \"bias\": ";
    write_array(out, b.data(), b.size());
    out << (k + 1 < model.net.num_layers() ? "},\n" : "}\n");
  }
  out << "  ]\n}\n";
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

DynamicModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version in " + path.string());
    }
    const auto dims = j.at("architecture").get<std::vector<int>>();
    DynamicModel model{Mlp<double>(dims), {}};
    const auto& st = j.at("standardizer");
    model.stats.mu_nu = read_vec<3>(st, "mu_nu");
    model.stats.sigma_nu = read_vec<3>(st, "sigma_nu");
    model.stats.mu_act = read_vec<3>(st, "mu_act");
    model.stats.sigma_act = read_vec<3>(st, "sigma_act");
    model.stats.mu_wind = read_vec<2>(st, "mu_wind");
    model.stats.sigma_wind = read_vec<2>(st, "sigma_wind");
    model.stats.mu_acc = read_vec<3>(st, "mu_acc");
    model.stats.sigma_acc = read_vec<3>(st, "sigma_acc");
    const auto& layers = j.at("layers");
    if (static_cast<int>(layers.size()) != model.net.num_layers()) {
      throw DataError("checkpoint layer count does not match architecture");
    }
    for (int k = 0; k < model.net.num_layers(); ++k) {
      const auto w = layers[static_cast<std::size_t>(k)].at("weights").get<std::vector<double>>();
      const auto b = layers[static_cast<std::size_t>(k)].at("bias").get<std::vector<double>>();
      auto wm = model.net.weight(k);
      auto bm = model.net.bias(k);
      if (static_cast<Eigen::Index>(w.size()) != wm.size() ||
          static_cast<Eigen::Index>(b.size()) != bm.size()) {
        throw DataError("checkpoint layer " + std::to_string(k) + " has wrong shape");
      }
      std::copy(w.begin(), w.end(), wm.data());
      std::copy(b.begin(), b.end(), bm.data());
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid checkpoint " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("invalid checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace shipid
