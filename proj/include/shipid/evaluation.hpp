#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/dynamics.hpp"
#include "shipid/rollout.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace shipid {

struct EvaluationReport {
  std::string dataset;  // training recipe label
  std::string method;   // e.g. "theta_opt"
  std::uint64_t seed = 0;
  std::vector<double> window_losses;
  double mean_loss = 0.0;
  std::vector<double> times;   // concatenated sample times over all windows
  std::vector<double> errors;  // d at those samples; restarts at 0 every window
  std::vector<RolloutResult> rollouts;
};

// Rolls every test window out from its measured initial state.
EvaluationReport evaluate(const DerivativeFn& derivative, const WindowDataset& test_ds,
                          const ErrorWeights& weights);
EvaluationReport evaluate(const DynamicModel& model, const WindowDataset& test_ds,
                          const ErrorWeights& weights);

// Recipe labels in their canonical reporting order.
const std::vector<std::string>& canonical_recipe_order();

struct ComparisonRow {
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::vector<double> losses;
  double mean = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  const ComparisonRow* find(const std::string& dataset) const;
};

// Groups reports by dataset label (canonical order first, unknown labels
// afterwards alphabetically), seeds ascending within a row.
ComparisonTable compare_runs(const std::vector<EvaluationReport>& reports);

// Header: dataset,seed_<s1>,...,seed_<sk>,mean. Missing cells are left empty.
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);

// CSV of one report: window_id,step,t,d,... as write_error_export.
void write_report_errors(std::ostream& out, const EvaluationReport& report,
                         const WindowDataset& test_ds);

}  // namespace shipid
