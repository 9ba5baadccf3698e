#include "shipid/config.hpp"

#include "shipid/error.hpp"

#include <fstream>
#include <set>

namespace shipid {

namespace {

using json = nlohmann::json;

// Reads optional keys from one JSON object and rejects the ones nobody asked
// for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void get6(const char* key, Vector6d& out) {
    std::vector<double> v;
    get(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 6) throw ConfigError(path_ + "." + key + " must have 6 entries");
    out = Eigen::Map<const Vector6d>(v.data());
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  Section sub(const char* key) { return Section(j_.at(key), path_ + "." + key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + path_ + "." + item.key());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_train(Section s, TrainConfig& t) {
  s.get("learning_rate", t.learning_rate);
  s.get("lambda", t.lambda);
  s.get6("weights", t.weights.w);
  s.get6("noise_variance", t.noise_variance);
  s.get("window_length", t.window_length);
  s.get("ema_alpha", t.ema_alpha);
  s.get("min_epochs", t.min_epochs);
  s.get("max_epochs", t.max_epochs);
  s.get("stop_factor", t.stop_factor);
  s.get("num_subsets", t.num_subsets);
  s.get("hidden_width", t.hidden_width);
  s.get("hidden_layers", t.hidden_layers);
  s.get("seed", t.seed);
  s.finish();
}

void read_truth(Section s, TruthModelConfig& c) {
  s.get("m_x", c.m_x);
  s.get("m_y", c.m_y);
  s.get("I_z", c.I_z);
  s.get("X_u", c.X_u);
  s.get("X_uu", c.X_uu);
  s.get("Y_v", c.Y_v);
  s.get("Y_vv", c.Y_vv);
  s.get("Y_r", c.Y_r);
  s.get("N_v", c.N_v);
  s.get("N_r", c.N_r);
  s.get("N_rr", c.N_rr);
  s.get("k_t", c.k_t);
  s.get("k_rx", c.k_rx);
  s.get("k_ry", c.k_ry);
  s.get("x_r", c.x_r);
  s.get("c_x", c.c_x);
  s.get("c_y", c.c_y);
  s.get("c_n", c.c_n);
  s.finish();
}

void read_wind(Section s, WindProcessConfig& w) {
  s.get("mean_speed", w.mean_speed);
  s.get("reversion_rate", w.reversion_rate);
  s.get("speed_volatility", w.speed_volatility);
  s.get("direction_volatility", w.direction_volatility);
  s.finish();
}

void read_datasets(Section s, DatasetSettings& d) {
  s.get("train", d.train);
  s.get("extra", d.extra);
  s.get("validation", d.validation);
  s.get("test", d.test);
  s.get("small_stride", d.small_stride);
  s.get("large_stride", d.large_stride);
  s.get("small_replicates", d.small_replicates);
  s.get("large_replicates", d.large_replicates);
  s.get("jitter_seed", d.jitter_seed);
  s.finish();
}

void read_study(Section s, StudySettings& st) {
  s.get("recipes", st.recipes);
  s.get("seeds", st.seeds);
  s.get("threads", st.threads);
  s.finish();
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  truth.validate();
  if (generate.trajectories.empty()) throw ConfigError("generate.trajectories is empty");
  std::set<std::string> ids;
  for (const auto& t : generate.trajectories) {
    if (t.id.empty()) throw ConfigError("trajectory id must not be empty");
    if (!(t.duration > 0.0))
      throw ConfigError("trajectory '" + t.id + "' needs a positive duration");
    if (!ids.insert(t.id).second) throw ConfigError("duplicate trajectory id '" + t.id + "'");
  }
  if ((generate.observation_sigma.array() < 0.0).any()) {
    throw ConfigError("observation_sigma must be non-negative");
  }
  if (datasets.train.empty() || datasets.validation.empty() || datasets.test.empty()) {
    throw ConfigError("datasets.train, validation and test must be non-empty");
  }
  if (datasets.small_stride < 1 || datasets.large_stride < 1) {
    throw ConfigError("strides must be at least 1");
  }
  if (datasets.small_replicates < 1 || datasets.large_replicates < 1) {
    throw ConfigError("replicate counts must be at least 1");
  }
  if (study.seeds.empty()) throw ConfigError("study.seeds is empty");
  if (study.threads < 1) throw ConfigError("study.threads must be at least 1");
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  Section root(j, "config");
  if (root.has("train")) read_train(root.sub("train"), cfg.train);
  if (root.has("truth")) read_truth(root.sub("truth"), cfg.truth);
  if (root.has("generate")) {
    Section g = root.sub("generate");
    if (g.has("trajectories")) {
      const json& arr = j.at("generate").at("trajectories");
      if (!arr.is_array()) throw ConfigError("generate.trajectories must be an array");
      cfg.generate.trajectories.clear();
      for (std::size_t k = 0; k < arr.size(); ++k) {
        Section t(arr[k], "generate.trajectories[" + std::to_string(k) + "]");
        TrajectorySpec spec;
        t.get("id", spec.id);
        t.get("duration", spec.duration);
        t.get("seed", spec.seed);
        t.finish();
        cfg.generate.trajectories.push_back(spec);
      }
    }
    g.get("observation_noise", cfg.generate.observation_noise);
    g.get6("observation_sigma", cfg.generate.observation_sigma);
    g.get("integration_step", cfg.generate.integration_step);
    g.get("record_period", cfg.generate.record_period);
    g.get("output_period", cfg.generate.output_period);
    if (g.has("wind")) read_wind(g.sub("wind"), cfg.generate.wind);
    g.finish();
  }
  if (root.has("datasets")) read_datasets(root.sub("datasets"), cfg.datasets);
  if (root.has("study")) read_study(root.sub("study"), cfg.study);
  root.get("output_dir", cfg.output_dir);
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  const auto vec6 = [](const Vector6d& v) { return std::vector<double>(v.data(), v.data() + 6); };
  nlohmann::ordered_json j;
  const TrainConfig& t = cfg.train;
  j["train"] = {{"learning_rate", t.learning_rate},
                {"lambda", t.lambda},
                {"weights", vec6(t.weights.w)},
                {"noise_variance", vec6(t.noise_variance)},
                {"window_length", t.window_length},
                {"ema_alpha", t.ema_alpha},
                {"min_epochs", t.min_epochs},
                {"max_epochs", t.max_epochs},
                {"stop_factor", t.stop_factor},
                {"num_subsets", t.num_subsets},
                {"hidden_width", t.hidden_width},
                {"hidden_layers", t.hidden_layers},
                {"seed", t.seed}};
  const TruthModelConfig& c = cfg.truth;
  j["truth"] = {{"m_x", c.m_x},   {"m_y", c.m_y},   {"I_z", c.I_z},   {"X_u", c.X_u},
                {"X_uu", c.X_uu}, {"Y_v", c.Y_v},   {"Y_vv", c.Y_vv}, {"Y_r", c.Y_r},
                {"N_v", c.N_v},   {"N_r", c.N_r},   {"N_rr", c.N_rr}, {"k_t", c.k_t},
                {"k_rx", c.k_rx}, {"k_ry", c.k_ry}, {"x_r", c.x_r},   {"c_x", c.c_x},
                {"c_y", c.c_y},   {"c_n", c.c_n}};
  const GenerateSettings& g = cfg.generate;
  auto trajs = nlohmann::ordered_json::array();
  for (const auto& s : g.trajectories) {
    trajs.push_back({{"id", s.id}, {"duration", s.duration}, {"seed", s.seed}});
  }
  j["generate"] = {{"trajectories", trajs},
                   {"observation_noise", g.observation_noise},
                   {"observation_sigma", vec6(g.observation_sigma)},
                   {"integration_step", g.integration_step},
                   {"record_period", g.record_period},
                   {"output_period", g.output_period},
                   {"wind",
                    {{"mean_speed", g.wind.mean_speed},
                     {"reversion_rate", g.wind.reversion_rate},
                     {"speed_volatility", g.wind.speed_volatility},
                     {"direction_volatility", g.wind.direction_volatility}}}};
  const DatasetSettings& d = cfg.datasets;
  j["datasets"] = {{"train", d.train},
                   {"extra", d.extra},
                   {"validation", d.validation},
                   {"test", d.test},
                   {"small_stride", d.small_stride},
                   {"large_stride", d.large_stride},
                   {"small_replicates", d.small_replicates},
                   {"large_replicates", d.large_replicates},
                   {"jitter_seed", d.jitter_seed}};
  j["study"] = {
      {"recipes", cfg.study.recipes}, {"seeds", cfg.study.seeds}, {"threads", cfg.study.threads}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace shipid
