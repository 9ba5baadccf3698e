#pragma once

#include "shipid/augmentation.hpp"
#include "shipid/dynamics.hpp"
#include "shipid/rollout.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shipid {

// One entry per network parameter, in Mlp's canonical flat order.
using GradientVector = Eigen::VectorXd;

struct TrainConfig {
  double learning_rate = 1e-4;
  double lambda = 1e-2;
  ErrorWeights weights = ErrorWeights::standard();
  // Diagonal of the jitter covariance, ShipState order.
  Vector6d noise_variance = (Vector6d() << 0.0, 1e-4, 0.0, 1e-4, 0.0, 1e-2).finished();
  std::size_t window_length = 100;
  double ema_alpha = 0.1;
  int min_epochs = 10000;
  // Hard cap on epochs; 0 means none.
  int max_epochs = 0;
  double stop_factor = 0.1;
  int num_subsets = 3;
  int hidden_width = 256;
  int hidden_layers = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossGradient {
  double loss = 0.0;       // mean window loss
  double objective = 0.0;  // loss + lambda * ||theta||^2
  GradientVector gradient;
};

// Exact reverse-mode gradient of objective() over the given windows:
// backpropagation through every Euler step, the kinematics, the output
// scaling and the network, plus 2 * lambda * theta. All windows must share
// one length. Throws DivergenceError on non-finite states or gradients.
LossGradient gradient(std::span<const Window* const> windows, const DynamicModel& model,
                      const ErrorWeights& weights, double lambda);
LossGradient gradient(const WindowDataset& dataset, const DynamicModel& model,
                      const ErrorWeights& weights, double lambda);

// Mean window loss computed by the batched simulator used in training.
double batched_dataset_loss(std::span<const Window* const> windows, const DynamicModel& model,
                            const ErrorWeights& weights);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index size, double learning_rate);
};

// Bias-corrected Adam update of theta in place.
void adam_step(AdamState& state, Eigen::VectorXd& theta, const GradientVector& g);

// Random permutation of [0, n) cut into `parts` contiguous pieces whose sizes
// differ by at most one, larger pieces first.
std::vector<std::vector<std::size_t>> minibatch_split(std::size_t n, std::uint64_t seed,
                                                      int parts = 3);

double ema_update(std::optional<double> previous, double value, double alpha);

// True iff epoch > min_epochs and
// valid_loss > stop_factor * (init_loss - min_loss) + min_loss.
bool early_stop_check(int epoch, double valid_loss, double init_loss, double min_loss,
                      const TrainConfig& cfg);

enum class StopReason { stopping_rule, max_epochs, diverged };

struct EpochRecord {
  int epoch = 0;                 // 1-based count of completed epochs
  long subset_updates = 0;       // cumulative optimizer steps
  double train_objective = 0.0;  // mean over this epoch's subset updates
  double valid_loss = 0.0;
  double valid_ema = 0.0;
  bool is_new_min = false;
};

struct TrainingRecord {
  std::vector<EpochRecord> epochs;
  double init_valid_loss = 0.0;
  double min_valid_loss = 0.0;
  int min_epoch = 0;  // 0 when no epoch improved on the initial parameters
  int stop_epoch = 0;
  StopReason stop_reason = StopReason::stopping_rule;
  std::string message;
};

// Callbacks the epoch loop drives, so that the protocol (EMA, checkpoint
// selection, stopping) can run against any model or a scripted stub.
struct TrainingHooks {
  // Runs one epoch of updates; returns (mean training objective, updates).
  std::function<std::pair<double, int>(int epoch)> run_epoch;
  std::function<double()> validate;
  // Called whenever the validation loss reaches a new minimum.
  std::function<void(int epoch)> snapshot;
};

TrainingRecord run_training_loop(const TrainingHooks& hooks, const TrainConfig& cfg,
                                 double init_valid_loss);

struct TrainResult {
  DynamicModel initial;  // theta_init
  DynamicModel best;     // theta_opt: the minimum-validation-loss snapshot
  TrainingRecord record;
};

// Adam over `num_subsets` random subsets per epoch, validation after every
// epoch (without the regularizer), minimum-validation checkpoint.
TrainResult train(const WindowDataset& train_ds, const WindowDataset& valid_ds,
                  const Standardizer& stats, const TrainConfig& cfg);

// CSV: epoch,subset_updates,train_objective,valid_loss,valid_ema,is_new_min
inline constexpr const char* kTrainingLogHeader =
    "epoch,subset_updates,train_objective,valid_loss,valid_ema,is_new_min";
void write_training_log(std::ostream& out, const TrainingRecord& record);

}  // namespace shipid
