#include "shipid/study.hpp"

#include "shipid/error.hpp"
#include "shipid/random.hpp"
#include "shipid/timeseries.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace shipid {

void TrajectoryStore::add(Trajectory traj) {
  const std::string id = traj.id();
  if (!trajs_.emplace(id, std::move(traj)).second) {
    throw DataError("duplicate trajectory id '" + id + "'");
  }
}

const Trajectory& TrajectoryStore::get(const std::string& id) const {
  const auto it = trajs_.find(id);
  if (it == trajs_.end()) throw DataError("trajectory '" + id + "' not found");
  return it->second;
}

std::vector<Trajectory> TrajectoryStore::select(const std::vector<std::string>& ids) const {
  std::vector<Trajectory> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(get(id));
  return out;
}

TrajectoryStore TrajectoryStore::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("trajectory directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("no trajectory CSV files in " + dir.string());
  std::sort(files.begin(), files.end());
  TrajectoryStore store;
  for (const auto& f : files) store.add(load_trajectory(f));
  return store;
}

TrajectoryStore generate_trajectories(const RunConfig& cfg) {
  TrajectoryStore store;
  for (const TrajectorySpec& spec : cfg.generate.trajectories) {
    const ManeuverScript script = random_maneuver(spec.duration, derive_seed(spec.seed, 0));
    GenerationOptions opt;
    opt.integration_step = cfg.generate.integration_step;
    opt.input_period = cfg.generate.integration_step;
    opt.record_period = cfg.generate.record_period;
    opt.output_period = cfg.generate.output_period;
    opt.wind = cfg.generate.wind;
    if (cfg.generate.observation_noise) opt.observation_sigma = cfg.generate.observation_sigma;
    opt.noise_seed = derive_seed(spec.seed, 2);
    store.add(generate_trajectory(spec.id, cfg.truth, script, derive_seed(spec.seed, 1),
                                  spec.duration, opt));
  }
  return store;
}

void write_generation(const TrajectoryStore& store, const RunConfig& cfg,
                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json manifest;
  manifest["format_version"] = 1;
  auto& files = manifest["trajectories"] = nlohmann::ordered_json::array();
  for (const TrajectorySpec& spec : cfg.generate.trajectories) {
    const Trajectory& t = store.get(spec.id);
    save_trajectory(t, dir / (spec.id + ".csv"));
    files.push_back({{"id", spec.id},
                     {"file", spec.id + ".csv"},
                     {"duration", spec.duration},
                     {"samples", t.size()},
                     {"seed", spec.seed},
                     {"maneuver_seed", derive_seed(spec.seed, 0)},
                     {"wind_seed", derive_seed(spec.seed, 1)},
                     {"noise_seed", derive_seed(spec.seed, 2)}});
  }
  const auto full = to_json(cfg);
  manifest["truth"] = full["truth"];
  manifest["generate"] = full["generate"];
  std::ofstream out(dir / "generation_manifest.json");
  if (!out) throw DataError("cannot write generation manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Recipe parse_recipe(const std::string& raw, const DatasetSettings& s) {
  std::string name = raw;
  const std::string times = "\xC3\x97";  // U+00D7
  for (auto pos = name.find(times); pos != std::string::npos; pos = name.find(times)) {
    name.replace(pos, times.size(), "x");
  }
  Recipe r;
  r.name = name;
  if (name == "ref") {
    r.method = AugmentationMethod::reference;
  } else if (name == "d-ref") {
    r.method = AugmentationMethod::reference;
    r.doubled = true;
  } else if (name == "sli2" || name == "sli10") {
    r.method = AugmentationMethod::slicing;
    r.stride = name == "sli2" ? s.small_stride : s.large_stride;
  } else if (name == "jit2" || name == "jit10") {
    r.method = AugmentationMethod::jittering;
    r.replicates = name == "jit2" ? s.small_replicates : s.large_replicates;
  } else if (name == "sli2xjit2" || name == "sli10xjit10") {
    r.method = AugmentationMethod::slicing_jittering;
    const bool small = name == "sli2xjit2";
    r.stride = small ? s.small_stride : s.large_stride;
    r.replicates = small ? s.small_replicates : s.large_replicates;
  } else {
    throw ConfigError("unknown recipe '" + raw + "'");
  }
  return r;
}

WindowDataset build_recipe(const Recipe& recipe, const RunConfig& cfg,
                           const TrajectoryStore& store) {
  std::vector<std::string> ids = cfg.datasets.train;
  if (recipe.doubled) ids.insert(ids.end(), cfg.datasets.extra.begin(), cfg.datasets.extra.end());
  const auto trajs = store.select(ids);
  const std::size_t len = cfg.train.window_length;
  const NoiseSpec noise =
      NoiseSpec::from_variance(cfg.train.noise_variance, cfg.datasets.jitter_seed);
  switch (recipe.method) {
    case AugmentationMethod::reference:
      return split_reference(trajs, len);
    case AugmentationMethod::slicing:
      return slice(trajs, len, recipe.stride);
    case AugmentationMethod::jittering:
      return jitter(split_reference(trajs, len), noise, recipe.replicates);
    case AugmentationMethod::slicing_jittering:
      return slice_jitter(trajs, len, recipe.stride, noise, recipe.replicates);
  }
  throw ConfigError("unhandled recipe method");
}

WindowDataset build_validation(const RunConfig& cfg, const TrajectoryStore& store) {
  return split_reference(store.select(cfg.datasets.validation), cfg.train.window_length);
}

WindowDataset build_test(const RunConfig& cfg, const TrajectoryStore& store) {
  return split_reference(store.select(cfg.datasets.test), cfg.train.window_length);
}

Standardizer reference_standardizer(const RunConfig& cfg, const TrajectoryStore& store) {
  const auto trajs = store.select(cfg.datasets.train);
  return fit_standardizer(split_reference(trajs, cfg.train.window_length), trajs);
}

StudyResult run_study(const RunConfig& cfg, const TrajectoryStore& store,
                      const ProgressFn& progress) {
  cfg.validate();
  const Standardizer stats = reference_standardizer(cfg, store);
  const WindowDataset valid = build_validation(cfg, store);
  const WindowDataset test = build_test(cfg, store);

  std::vector<Recipe> recipes;
  std::vector<WindowDataset> datasets;
  for (const auto& name : cfg.study.recipes) {
    recipes.push_back(parse_recipe(name, cfg.datasets));
    datasets.push_back(build_recipe(recipes.back(), cfg, store));
  }

  struct Job {
    std::size_t recipe;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < recipes.size(); ++r) {
    for (auto seed : cfg.study.seeds) jobs.push_back({r, seed});
  }

  StudyResult result;
  result.cells.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  const auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const Job& job = jobs[k];
        TrainConfig tc = cfg.train;
        tc.seed = job.seed;
        TrainResult tr = train(datasets[job.recipe], valid, stats, tc);
        CellResult& cell = result.cells[k];
        cell.recipe = recipes[job.recipe].name;
        cell.seed = job.seed;
        cell.train_windows = datasets[job.recipe].size();
        cell.init_test_loss = evaluate(tr.initial, test, tc.weights).mean_loss;
        cell.opt_test_loss = evaluate(tr.best, test, tc.weights).mean_loss;
        cell.record = std::move(tr.record);
        cell.initial = std::move(tr.initial);
        cell.best = std::move(tr.best);
        if (progress) {
          std::lock_guard lock(report_mutex);
          progress(cell);
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.study.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<EvaluationReport> reports;
  for (const CellResult& c : result.cells) {
    EvaluationReport rep;
    rep.dataset = c.recipe;
    rep.method = "theta_opt";
    rep.seed = c.seed;
    rep.mean_loss = c.opt_test_loss;
    reports.push_back(std::move(rep));
  }
  result.comparison = compare_runs(reports);
  return result;
}

namespace {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::stopping_rule:
      return "stopping_rule";
    case StopReason::max_epochs:
      return "max_epochs";
    case StopReason::diverged:
      return "diverged";
  }
  return "unknown";
}

}  // namespace

void write_study(const StudyResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "comparison.csv");
    if (!out) throw DataError("cannot write comparison.csv in " + dir.string());
    write_comparison_csv(out, result.comparison);
  }
  std::ofstream out(dir / "cells.csv");
  if (!out) throw DataError("cannot write cells.csv in " + dir.string());
  out << "dataset,seed,train_windows,init_test_loss,opt_test_loss,init_valid_loss,min_valid_loss,"
         "min_epoch,stop_epoch,stop_reason\n";
  char buf[512];
  for (const CellResult& c : result.cells) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%zu,%.17g,%.17g,%.17g,%.17g,%d,%d,%s\n",
                  c.recipe.c_str(), static_cast<unsigned long long>(c.seed), c.train_windows,
                  c.init_test_loss, c.opt_test_loss, c.record.init_valid_loss,
                  c.record.min_valid_loss, c.record.min_epoch, c.record.stop_epoch,
                  stop_reason_name(c.record.stop_reason));
    out << buf;
  }
}

}  // namespace shipid
