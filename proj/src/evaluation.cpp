#include "shipid/evaluation.hpp"

#include "shipid/error.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

namespace shipid {

EvaluationReport evaluate(const DerivativeFn& derivative, const WindowDataset& test_ds,
                          const ErrorWeights& weights) {
  if (test_ds.empty()) throw DataError("evaluation needs a non-empty test dataset");
  EvaluationReport report;
  double sum = 0.0;
  for (const Window& w : test_ds.windows) {
    RolloutResult r = euler_rollout(w, derivative, weights);
    report.window_losses.push_back(r.loss);
    sum += r.loss;
    for (std::size_t i = 0; i < w.length(); ++i) {
      report.times.push_back(w.samples[i].t);
      report.errors.push_back(r.errors[i]);
    }
    report.rollouts.push_back(std::move(r));
  }
  report.mean_loss = sum / static_cast<double>(test_ds.size());
  return report;
}

EvaluationReport evaluate(const DynamicModel& model, const WindowDataset& test_ds,
                          const ErrorWeights& weights) {
  return evaluate(model_derivative(model), test_ds, weights);
}

const std::vector<std::string>& canonical_recipe_order() {
  static const std::vector<std::string> order{"ref",   "sli2",      "sli10",       "jit2",
                                              "jit10", "sli2xjit2", "sli10xjit10", "d-ref"};
  return order;
}

const ComparisonRow* ComparisonTable::find(const std::string& dataset) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset) return &r;
  }
  return nullptr;
}

ComparisonTable compare_runs(const std::vector<EvaluationReport>& reports) {
  std::map<std::string, std::map<std::uint64_t, double>> cells;
  for (const auto& r : reports) cells[r.dataset][r.seed] = r.mean_loss;

  std::vector<std::string> labels;
  for (const auto& name : canonical_recipe_order()) {
    if (cells.count(name)) labels.push_back(name);
  }
  for (const auto& [name, _] : cells) {
    if (std::find(labels.begin(), labels.end(), name) == labels.end()) labels.push_back(name);
  }

  ComparisonTable table;
  for (const auto& name : labels) {
    ComparisonRow row;
    row.dataset = name;
    double sum = 0.0;
    for (const auto& [seed, loss] : cells[name]) {
      row.seeds.push_back(seed);
      row.losses.push_back(loss);
      sum += loss;
    }
    row.mean = sum / static_cast<double>(row.losses.size());
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  std::set<std::uint64_t> all_seeds;
  for (const auto& row : table.rows) all_seeds.insert(row.seeds.begin(), row.seeds.end());
  out << "dataset";
  for (auto s : all_seeds) out << ",seed_" << s;
  out << ",mean\n";
  char buf[64];
  for (const auto& row : table.rows) {
    out << row.dataset;
    for (auto s : all_seeds) {
      out << ',';
      const auto it = std::find(row.seeds.begin(), row.seeds.end(), s);
      if (it != row.seeds.end()) {
        std::snprintf(buf, sizeof buf, "%.17g",
                      row.losses[static_cast<std::size_t>(it - row.seeds.begin())]);
        out << buf;
      }
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", row.mean);
    out << buf;
  }
}

void write_report_errors(std::ostream& out, const EvaluationReport& report,
                         const WindowDataset& test_ds) {
  write_error_export(out, test_ds.windows, report.rollouts);
}

}  // namespace shipid
