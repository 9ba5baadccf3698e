// Command-line driver: generate, augment, train, evaluate, gradcheck, study.

#include "shipid/config.hpp"
#include "shipid/error.hpp"
#include "shipid/evaluation.hpp"
#include "shipid/gradcheck.hpp"
#include "shipid/study.hpp"
#include "shipid/timeseries.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace shipid;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kDivergence = 4 };

struct Options {
  std::string config;
  std::string out;
  std::string in;
  std::string model;
  std::string recipe;
  std::optional<std::uint64_t> seed;
  std::optional<int> min_epochs;
  std::optional<int> max_epochs;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.min_epochs) cfg.train.min_epochs = *o.min_epochs;
  if (o.max_epochs) cfg.train.max_epochs = *o.max_epochs;
  if (o.seed) cfg.train.seed = *o.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Options& o, const RunConfig& cfg, const char* fallback) {
  return o.out.empty() ? fs::path(cfg.output_dir) / fallback : fs::path(o.out);
}

fs::path in_dir(const Options& o, const RunConfig& cfg) {
  return o.in.empty() ? fs::path(cfg.output_dir) / "trajectories" : fs::path(o.in);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

int cmd_generate(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path dir = out_dir(o, cfg, "trajectories");
  const TrajectoryStore store = generate_trajectories(cfg);
  write_generation(store, cfg, dir);
  for (const auto& spec : cfg.generate.trajectories) {
    std::printf("%s: %zu samples\n", spec.id.c_str(), store.get(spec.id).size());
  }
  return kOk;
}

int cmd_augment(const Options& o) {
  const RunConfig cfg = load_config(o);
  if (o.recipe.empty()) throw ConfigError("augment needs --recipe");
  const TrajectoryStore store = TrajectoryStore::load_dir(in_dir(o, cfg));
  const Recipe recipe = parse_recipe(o.recipe, cfg.datasets);
  const WindowDataset ds = build_recipe(recipe, cfg, store);
  const fs::path dir = out_dir(o, cfg, ("datasets/" + recipe.name).c_str());
  save_dataset(ds, dir);
  std::printf("%s: %zu windows of %zu samples -> %s\n", recipe.name.c_str(), ds.size(),
              ds.window_length(), dir.string().c_str());
  return kOk;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = load_config(o);
  const TrajectoryStore store = TrajectoryStore::load_dir(in_dir(o, cfg));
  const Recipe recipe = parse_recipe(o.recipe.empty() ? "ref" : o.recipe, cfg.datasets);
  const WindowDataset train_ds = build_recipe(recipe, cfg, store);
  const WindowDataset valid = build_validation(cfg, store);
  const Standardizer stats = reference_standardizer(cfg, store);
  const fs::path dir = out_dir(o, cfg, ("runs/" + recipe.name).c_str());
  ensure_dir(dir);

  const TrainResult res = train(train_ds, valid, stats, cfg.train);
  save_checkpoint(res.initial, dir / "theta_init.json");
  save_checkpoint(res.best, dir / "theta_min.json");
  save_checkpoint(res.best, dir / "theta_opt.json");
  auto log = open_out(dir / "train_log.csv");
  write_training_log(log, res.record);
  std::printf("%s: %zu windows, %d epochs, init valid %.6g, best valid %.6g at epoch %d\n",
              recipe.name.c_str(), train_ds.size(), res.record.stop_epoch,
              res.record.init_valid_loss, res.record.min_valid_loss, res.record.min_epoch);
  if (res.record.stop_reason == StopReason::diverged) {
    std::fprintf(stderr, "training diverged: %s\n", res.record.message.c_str());
    return kDivergence;
  }
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const RunConfig cfg = load_config(o);
  const TrajectoryStore store = TrajectoryStore::load_dir(in_dir(o, cfg));
  if (o.model.empty()) throw ConfigError("evaluate needs --model <checkpoint>");
  const DynamicModel model = load_checkpoint(o.model);
  const WindowDataset test = build_test(cfg, store);
  const EvaluationReport rep = evaluate(model, test, cfg.train.weights);
  const fs::path dir = out_dir(o, cfg, "evaluation");
  ensure_dir(dir);
  auto summary = open_out(dir / "evaluation.csv");
  summary << "window_id,source_id,start_index,t_start,loss\n";
  char buf[256];
  for (std::size_t k = 0; k < test.size(); ++k) {
    const Window& w = test.windows[k];
    std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%.17g,%.17g\n", k, w.source_id.c_str(),
                  w.start_index, w.samples.front().t, rep.window_losses[k]);
    summary << buf;
    auto err = open_out(dir / ("errors_" + std::to_string(k) + ".csv"));
    write_error_export(err, std::span<const Window>(&w, 1),
                       std::span<const RolloutResult>(&rep.rollouts[k], 1));
  }
  std::printf("mean test loss %.17g over %zu windows\n", rep.mean_loss, test.size());
  return kOk;
}

int cmd_gradcheck(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(1);
  const GradientCheckInstance inst = make_gradient_check_instance(seed);
  const GradientCheckResult res = check_gradient(inst);
  std::printf("parameters %td, max relative error %.3e (entry %td)\n", res.analytic.size(),
              res.max_relative_error, res.worst_index);
  return res.max_relative_error < 1e-5 ? kOk : kDivergence;
}

int cmd_study(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
  TrajectoryStore store;
  if (o.in.empty()) {
    store = generate_trajectories(cfg);
    write_generation(store, cfg, dir / "trajectories");
  } else {
    store = TrajectoryStore::load_dir(o.in);
  }
  const StudyResult res = run_study(cfg, store, [](const CellResult& c) {
    std::fprintf(stderr, "%-12s seed %-4llu windows %-5zu epochs %-6d test init %.4g opt %.4g\n",
                 c.recipe.c_str(), static_cast<unsigned long long>(c.seed), c.train_windows,
                 c.record.stop_epoch, c.init_test_loss, c.opt_test_loss);
  });
  write_study(res, dir);
  for (const CellResult& c : res.cells) {
    const fs::path cell = dir / "cells" / (c.recipe + "_seed" + std::to_string(c.seed));
    ensure_dir(cell);
    save_checkpoint(c.best, cell / "theta_opt.json");
    auto log = open_out(cell / "train_log.csv");
    write_training_log(log, c.record);
  }
  std::ifstream table(dir / "comparison.csv");
  std::cout << table.rdbuf();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network ship maneuvering model identification toolkit"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Run configuration (JSON)");
    cmd->add_option("--out", o.out, "Output directory");
  };

  auto* gen = app.add_subcommand("generate", "Synthesize trajectories from the truth plant");
  add_common(gen);

  auto* aug = app.add_subcommand("augment", "Materialize a training dataset recipe");
  add_common(aug);
  aug->add_option("--in", o.in, "Trajectory directory");
  aug->add_option("--recipe", o.recipe,
                  "ref, sli2, sli10, jit2, jit10, sli2xjit2, sli10xjit10, d-ref");

  auto* tr = app.add_subcommand("train", "Identify a model on one recipe");
  add_common(tr);
  tr->add_option("--in", o.in, "Trajectory directory");
  tr->add_option("--recipe", o.recipe, "Training recipe (default ref)");
  tr->add_option("--seed", o.seed, "Initialization and minibatch seed");
  tr->add_option("--min-epochs", o.min_epochs, "Override train.min_epochs");
  tr->add_option("--max-epochs", o.max_epochs, "Override train.max_epochs (0 = no cap)");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test trajectories");
  add_common(ev);
  ev->add_option("--in", o.in, "Trajectory directory");
  ev->add_option("--model", o.model, "Checkpoint file");

  auto* gc =
      app.add_subcommand("gradcheck", "Compare reverse-mode and finite-difference gradients");
  gc->add_option("--seed", o.seed, "Instance seed");

  auto* st = app.add_subcommand("study", "Train and evaluate every recipe x seed cell");
  add_common(st);
  st->add_option("--in", o.in, "Trajectory directory (generated when omitted)");
  st->add_option("--min-epochs", o.min_epochs, "Override train.min_epochs");
  st->add_option("--max-epochs", o.max_epochs, "Override train.max_epochs (0 = no cap)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (aug->parsed()) return cmd_augment(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_evaluate(o);
    if (gc->parsed()) return cmd_gradcheck(o);
    if (st->parsed()) return cmd_study(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "numeric divergence: %s\n", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kOk;
}
