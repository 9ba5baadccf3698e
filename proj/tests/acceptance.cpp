// Acceptance run: one PASS/FAIL line per criterion.

#include "oracles.hpp"

#include "shipid/config.hpp"
#include "shipid/error.hpp"
#include "shipid/gradcheck.hpp"
#include "shipid/study.hpp"
#include "shipid/training.hpp"
#include "shipid/truth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace shipid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int width = 1 + static_cast<int>(seed % 4);
    const std::size_t steps = 2 + seed % 7;
    const GradientCheckInstance inst =
        make_gradient_check_instance(seed, width, steps, 1 + seed % 3);
    const auto f = [&](const Eigen::VectorXd& t) {
      return oracle::objective(inst.windows.windows, inst.model.net.dims(), t, inst.model.stats,
                               inst.weights.w, inst.lambda);
    };
    const Eigen::VectorXd theta = inst.model.net.parameters();
    const Eigen::VectorXd numeric = oracle::central_differences(f, theta, 1e-6);
    const Eigen::VectorXd analytic =
        gradient(inst.windows, inst.model, inst.weights, inst.lambda).gradient;
    worst = std::max(worst, oracle::max_relative_error(analytic, numeric));
    ++instances;
  }
  const double elapsed = seconds_since(start);
  return {instances >= 20 && worst < 1e-5 && elapsed < 120.0,
          fmt("%d instances, max relative error %.3e (< 1e-5), %.1f s (< 120 s)", instances, worst,
              elapsed)};
}

std::size_t materialized(const std::function<WindowDataset()>& build) {
  try {
    return build().size();
  } catch (const DataError&) {
    return 0;
  }
}

Outcome augmentation_counts() {
  std::size_t cases = 0, mismatches = 0;
  const NoiseSpec noise{(Vector6d() << 0.0, 0.01, 0.0, 0.01, 0.0, 0.1).finished(), 5};
  for (std::size_t n = 2; n <= 50; ++n) {
    const Trajectory t = oracle::wavy_trajectory(n);
    for (std::size_t len = 2; len <= 10; ++len) {
      const std::size_t ref = oracle::reference_offsets(n, len).size();
      const std::size_t ref_built = materialized([&] { return split_reference(t, len); });
      for (std::size_t s = 1; s <= 10; ++s) {
        const std::size_t sli = oracle::slice_offsets(n, len, s).size();
        const std::size_t sli_built = materialized([&] { return slice(t, len, s); });
        for (int m = 1; m <= 5; ++m) {
          ++cases;
          const std::size_t mm = static_cast<std::size_t>(m);
          const std::size_t jit_built =
              ref == 0 ? 0
                       : materialized([&] { return jitter(split_reference(t, len), noise, m); });
          const std::size_t sj_built =
              materialized([&] { return slice_jitter(t, len, s, noise, m); });
          if (reference_window_count(n, len) != ref || ref_built != ref) ++mismatches;
          if (slice_window_count(n, len, s) != sli || sli_built != sli) ++mismatches;
          if (mm * reference_window_count(n, len) != mm * ref || jit_built != mm * ref)
            ++mismatches;
          if (mm * slice_window_count(n, len, s) != mm * sli || sj_built != mm * sli) ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0, fmt("%zu parameter tuples, %zu mismatches", cases, mismatches)};
}

double euler_decay_error(double dt) {
  const std::size_t n = static_cast<std::size_t>(std::lround(1.0 / dt)) + 1;
  Window w;
  w.source_id = "decay";
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i].t = static_cast<double>(i) * dt;
  w.samples[0].ship = ShipState::from_vector(Vector6d::Ones());
  const DerivativeFn decay = [](const ShipState& x, const ActuatorState&, const WindState&) {
    return Vector6d(-x.vector());
  };
  const RolloutResult r = euler_rollout(w, decay, ErrorWeights{});
  return std::abs(r.states.back().u - std::exp(-1.0));
}

Outcome integrator_order() {
  const double ratio = euler_decay_error(0.1) / euler_decay_error(0.05);
  const TruthModelConfig cfg;
  const ManeuverScript script = random_maneuver(100.0, 21);
  GenerationOptions coarse;
  GenerationOptions fine;
  fine.integration_step = 0.05;
  const Trajectory a = generate_trajectory("h", cfg, script, 22, 100.0, coarse);
  const Trajectory b = generate_trajectory("h", cfg, script, 22, 100.0, fine);
  double gap = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    gap = std::max(gap, (a[i].ship.vector() - b[i].ship.vector()).cwiseAbs().maxCoeff());
  }
  return {ratio >= 1.8 && ratio <= 2.2 && gap < 1e-6,
          fmt("Euler error ratio %.4f (in [1.8, 2.2]), RK4 halving discrepancy %.3e (< 1e-6)",
              ratio, gap)};
}

Outcome loss_arithmetic() {
  const ErrorWeights w = ErrorWeights::standard();
  // Simulated states whose squared weighted errors are 0, 2 and 4.
  Window win;
  win.source_id = "arith";
  win.samples.resize(3);
  RolloutResult r;
  r.states.resize(3);
  for (int i = 0; i < 3; ++i) win.samples[i].t = i;
  r.states[1].u = 0.01;
  r.states[1].vm = 0.01;
  r.states[2].u = 0.02;
  const double wl = window_loss(r, win, w);

  ShipState sim;
  sim.x0 = 5.0;
  sim.u = 0.01;
  sim.y0 = -3.0;
  sim.vm = 0.02;
  sim.psi = 1.0;
  sim.r = 0.1;
  const double hand = state_error(sim, ShipState{}, w);

  ShipState pose;
  pose.x0 = 12.0;
  pose.y0 = -40.0;
  pose.psi = 2.5;
  const double pose_only = state_error(pose, ShipState{}, w);
  return {wl == 4.0 && hand == 6.0 && pose_only == 0.0,
          fmt("window_loss %.17g (== 4), state_error %.17g (== 6), pose-only %.17g (== 0)", wl,
              hand, pose_only)};
}

Outcome protocol_mechanics() {
  TrainConfig cfg;
  bool never_early = true;
  for (int epoch = 1; epoch <= 10000; ++epoch) {
    if (early_stop_check(epoch, 1e12, 10.0, 2.0, cfg)) never_early = false;
  }
  const bool threshold = !early_stop_check(10001, 2.8 - 1e-9, 10.0, 2.0, cfg) &&
                         !early_stop_check(10001, 2.8, 10.0, 2.0, cfg) &&
                         early_stop_check(10001, 2.8 + 1e-9, 10.0, 2.0, cfg);
  const double e0 = ema_update(std::nullopt, 10.0, 0.1);
  const double e1 = ema_update(e0, 0.0, 0.1);
  const bool ema = e0 == 10.0 && std::abs(e1 - 9.0) < 1e-12;

  // Real training run; the returned parameters must reproduce the smallest
  // per-epoch validation loss.
  std::vector<Trajectory> trajs;
  for (std::uint64_t s = 0; s < 2; ++s) {
    trajs.push_back(generate_trajectory("p" + std::to_string(s), TruthModelConfig{},
                                        random_maneuver(120.0, 60 + s), 70 + s, 120.0));
  }
  const WindowDataset train_ds = slice(std::span(trajs.data(), 1), 20, 5);
  const WindowDataset valid = split_reference(std::span(trajs.data() + 1, 1), 20);
  const Standardizer stats =
      fit_standardizer(split_reference(std::span(trajs.data(), 1), 20), trajs);
  TrainConfig tc;
  tc.hidden_width = 8;
  tc.hidden_layers = 2;
  tc.window_length = 20;
  tc.min_epochs = 30;
  tc.max_epochs = 60;
  tc.learning_rate = 3e-3;
  tc.seed = 5;
  const TrainResult res = train(train_ds, valid, stats, tc);
  double min_epoch_loss = res.record.init_valid_loss;
  for (const auto& e : res.record.epochs) min_epoch_loss = std::min(min_epoch_loss, e.valid_loss);
  const double best = dataset_loss(valid, res.best, tc.weights);
  const bool checkpoint = res.record.min_epoch > 0 &&
                          std::abs(best - min_epoch_loss) <= 1e-9 * min_epoch_loss &&
                          res.record.min_valid_loss == min_epoch_loss;
  return {
      never_early && threshold && ema && checkpoint,
      fmt("no stop at epochs 1..10000: %s; threshold 2.8: %s; EMA [%g, %g]; theta_opt from epoch "
          "%d reproduces min validation loss %.6g (recomputed %.6g)",
          never_early ? "yes" : "no", threshold ? "yes" : "no", e0, e1, res.record.min_epoch,
          min_epoch_loss, best)};
}

double mean_of(const ComparisonTable& t, const std::string& name) {
  const ComparisonRow* row = t.find(name);
  return row ? row->mean : INFINITY;
}

Outcome synthetic_reproduction(const fs::path& config, const fs::path& work) {
  const auto start = Clock::now();
  RunConfig cfg = load_run_config(config);
  const bool protocol = cfg.train.window_length == 100 && cfg.datasets.large_stride == 10 &&
                        cfg.datasets.large_replicates == 10 && cfg.train.min_epochs == 200 &&
                        cfg.study.seeds.size() == 5 && cfg.generate.observation_noise;
  const TrajectoryStore store = generate_trajectories(cfg);
  const StudyResult res = run_study(cfg, store, [](const CellResult& c) {
    std::printf("  %-6s seed %llu: test loss init %.5g opt %.5g ratio %.4f (%d epochs)\n",
                c.recipe.c_str(), static_cast<unsigned long long>(c.seed), c.init_test_loss,
                c.opt_test_loss, c.opt_test_loss / c.init_test_loss, c.record.stop_epoch);
    std::fflush(stdout);
  });
  write_study(res, work / "study");
  const double elapsed = seconds_since(start);

  double worst_ratio = 0.0;
  for (const CellResult& c : res.cells)
    worst_ratio = std::max(worst_ratio, c.opt_test_loss / c.init_test_loss);
  const bool a = !res.cells.empty() && worst_ratio <= 0.1;

  const double ref = mean_of(res.comparison, "ref");
  const double jit = mean_of(res.comparison, "jit10");
  const double sli = mean_of(res.comparison, "sli10");
  const double dref = mean_of(res.comparison, "d-ref");
  const bool b = jit <= ref && sli <= ref;
  bool c = std::isfinite(dref);
  for (const auto& row : res.comparison.rows) {
    if (row.dataset != "ref" && row.dataset != "d-ref") c = c && dref <= row.mean;
  }
  std::printf("  seed means: ref %.5g, sli10 %.5g, jit10 %.5g, d-ref %.5g\n", ref, sli, jit, dref);
  const bool budget = elapsed <= 1800.0;
  return {protocol && a && b && c && budget,
          fmt("(a) worst opt/init ratio %.4f (<= 0.1): %s; (b) jit10 <= ref and sli10 <= ref: %s; "
              "(c) d-ref <= augmented means: %s; runtime %.0f s (<= 1800 s)%s",
              worst_ratio, a ? "yes" : "no", b ? "yes" : "no", c ? "yes" : "no", elapsed,
              protocol ? "" : "; config does not match the protocol")};
}

Outcome determinism(const fs::path& cli, const fs::path& config, const fs::path& work) {
  std::string first, second;
  bool ran = true;
  for (const char* name : {"run1", "run2"}) {
    const fs::path out = work / "determinism" / name;
    fs::remove_all(out);
    const std::string cmd = "\"" + cli.string() + "\" study --config \"" + config.string() +
                            "\" --out \"" + out.string() + "\" > \"" +
                            (work / "determinism" / (std::string(name) + ".log")).string() +
                            "\" 2>&1";
    fs::create_directories(work / "determinism");
    ran = ran && std::system(cmd.c_str()) == 0;
    (first.empty() ? first : second) = slurp(out / "comparison.csv");
  }
  const bool same = ran && !first.empty() && first == second;
  return {same, fmt("two study runs: %s, comparison.csv %zu bytes, byte-identical: %s",
                    ran ? "ok" : "failed", first.size(), same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path config = fs::path(SHIPID_SOURCE_DIR) / "configs" / "acceptance.json";
  fs::path det_config = fs::path(SHIPID_SOURCE_DIR) / "configs" / "determinism.json";
  fs::path cli;
  fs::path work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--config", config, "Study configuration for criterion 6");
  app.add_option("--determinism-config", det_config, "Study configuration for criterion 7");
  app.add_option("--cli", cli, "shipid executable for criterion 7")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::map<int, std::function<Outcome()>> criteria{
      {1, gradient_oracle},
      {2, augmentation_counts},
      {3, integrator_order},
      {4, loss_arithmetic},
      {5, protocol_mechanics},
      {6, [&] { return synthetic_reproduction(config, work); }},
      {7, [&] { return determinism(cli, det_config, work); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
