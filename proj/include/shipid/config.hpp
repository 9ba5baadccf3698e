#pragma once

#include "shipid/training.hpp"
#include "shipid/truth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shipid {

struct TrajectorySpec {
  std::string id;
  double duration = 0.0;  // s
  std::uint64_t seed = 0;
};

struct GenerateSettings {
  // Six free-running records; durations follow the reference campaign.
  std::vector<TrajectorySpec> trajectories{{"No1", 500.5, 1},  {"No2", 1801.8, 2},
                                           {"No3", 500.5, 3},  {"No4", 1801.8, 4},
                                           {"No5", 1201.2, 5}, {"No6", 1201.2, 6}};
  bool observation_noise = true;
  Vector6d observation_sigma = (Vector6d() << 0.0, 0.01, 0.0, 0.01, 0.0, 0.1).finished();
  double integration_step = 0.1;
  double record_period = 0.1;
  double output_period = 1.0;
  WindProcessConfig wind;
};

struct DatasetSettings {
  std::vector<std::string> train{"No1", "No2"};
  std::vector<std::string> extra{"No3", "No4"};  // added for d-ref
  std::vector<std::string> validation{"No5"};
  std::vector<std::string> test{"No6"};
  std::size_t small_stride = 50;
  std::size_t large_stride = 10;
  int small_replicates = 2;
  int large_replicates = 10;
  std::uint64_t jitter_seed = 7;
};

struct StudySettings {
  std::vector<std::string> recipes{"ref",   "sli2",      "sli10",       "jit2",
                                   "jit10", "sli2xjit2", "sli10xjit10", "d-ref"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int threads = 1;
};

// Everything an experiment needs. Loaded from JSON; every section and key is
// optional, unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  TruthModelConfig truth;
  GenerateSettings generate;
  DatasetSettings datasets;
  StudySettings study;
  std::string output_dir = "out";

  void validate() const;
};

// Throws ConfigError on schema violations.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace shipid
