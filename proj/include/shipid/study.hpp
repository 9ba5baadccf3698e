#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/config.hpp"
#include "shipid/evaluation.hpp"
#include "shipid/training.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace shipid {

// Trajectories addressed by id.
class TrajectoryStore {
 public:
  void add(Trajectory traj);
  const Trajectory& get(const std::string& id) const;
  std::vector<Trajectory> select(const std::vector<std::string>& ids) const;
  std::size_t size() const { return trajs_.size(); }

  // Loads every *.csv in dir; the file stem is the id. Throws DataError when
  // the directory holds no trajectories.
  static TrajectoryStore load_dir(const std::filesystem::path& dir);

 private:
  std::map<std::string, Trajectory> trajs_;
};

// Synthesizes every configured trajectory from the truth plant.
TrajectoryStore generate_trajectories(const RunConfig& cfg);

// Writes <id>.csv per trajectory and generation_manifest.json.
void write_generation(const TrajectoryStore& store, const RunConfig& cfg,
                      const std::filesystem::path& dir);

struct Recipe {
  std::string name;
  AugmentationMethod method = AugmentationMethod::reference;
  bool doubled = false;  // uses train + extra trajectories
  std::size_t stride = 0;
  int replicates = 0;
};

// ref, sli2, sli10, jit2, jit10, sli2xjit2, sli10xjit10, d-ref ("×" and
// "x" are both accepted in the combined names). Throws ConfigError otherwise.
Recipe parse_recipe(const std::string& name, const DatasetSettings& settings);

WindowDataset build_recipe(const Recipe& recipe, const RunConfig& cfg,
                           const TrajectoryStore& store);
WindowDataset build_validation(const RunConfig& cfg, const TrajectoryStore& store);
WindowDataset build_test(const RunConfig& cfg, const TrajectoryStore& store);

// Statistics from the reference split of the training trajectories; shared by
// every recipe.
Standardizer reference_standardizer(const RunConfig& cfg, const TrajectoryStore& store);

struct CellResult {
  std::string recipe;
  std::uint64_t seed = 0;
  std::size_t train_windows = 0;
  double init_test_loss = 0.0;
  double opt_test_loss = 0.0;
  TrainingRecord record;
  DynamicModel initial;
  DynamicModel best;
};

struct StudyResult {
  std::vector<CellResult> cells;  // recipe-major, seeds ascending as configured
  ComparisonTable comparison;
};

using ProgressFn = std::function<void(const CellResult&)>;

// Trains and evaluates every (recipe, seed) cell. Cells run on
// cfg.study.threads workers; results do not depend on the thread count.
StudyResult run_study(const RunConfig& cfg, const TrajectoryStore& store,
                      const ProgressFn& progress = {});

// comparison.csv and cells.csv.
void write_study(const StudyResult& result, const std::filesystem::path& dir);

}  // namespace shipid
