#include "shipid/training.hpp"

#include "shipid/error.hpp"
#include "shipid/random.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace shipid {

void TrainConfig::validate() const {
  weights.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if ((noise_variance.array() < 0.0).any())
    throw ConfigError("noise variance must be non-negative");
  if (window_length < 2) throw ConfigError("window_length must be at least 2");
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) throw ConfigError("ema_alpha must be in (0, 1]");
  if (min_epochs < 0) throw ConfigError("min_epochs must be non-negative");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (!(stop_factor > 0.0 && stop_factor < 1.0)) throw ConfigError("stop_factor must be in (0, 1)");
  if (num_subsets < 1) throw ConfigError("num_subsets must be positive");
  if (hidden_width < 1 || hidden_layers < 0) throw ConfigError("invalid network shape");
}

namespace {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Measured data of a batch of equally long windows, one column per window.
struct Batch {
  Eigen::Index size = 0;
  std::size_t steps = 0;
  std::vector<Matrix> measured;  // steps x (6 x B)
  std::vector<Matrix> controls;  // steps x (5 x B), standardized actuators and wind
  std::vector<RowVector> dt;     // (steps - 1) x (1 x B)
  std::vector<RowVector> quad;   // steps x (1 x B), trapezoid weight of each sample
};

Batch make_batch(std::span<const Window* const> windows, const Standardizer& st) {
  if (windows.empty()) throw DataError("gradient over an empty set of windows");
  Batch b;
  b.size = static_cast<Eigen::Index>(windows.size());
  b.steps = windows.front()->length();
  if (b.steps < 2) throw DataError("windows must have at least 2 samples");
  for (const Window* w : windows) {
    if (w->length() != b.steps) throw DataError("all windows in a batch must share one length");
  }
  b.measured.assign(b.steps, Matrix(6, b.size));
  b.controls.assign(b.steps, Matrix(5, b.size));
  b.dt.assign(b.steps - 1, RowVector(b.size));
  b.quad.assign(b.steps, RowVector::Zero(b.size));
  const Eigen::Vector3d act_mu = st.mu_act, act_sd = st.sigma_act;
  for (Eigen::Index c = 0; c < b.size; ++c) {
    const auto& s = windows[static_cast<std::size_t>(c)]->samples;
    for (std::size_t i = 0; i < b.steps; ++i) {
      b.measured[i].col(c) = s[i].ship.vector();
      b.controls[i].col(c).head<3>() = (s[i].actuator.vector() - act_mu).cwiseQuotient(act_sd);
      b.controls[i].col(c).tail<2>() =
          (s[i].wind.vector() - st.mu_wind).cwiseQuotient(st.sigma_wind);
      if (i + 1 < b.steps) {
        const double dt = s[i + 1].t - s[i].t;
        b.dt[i][c] = dt;
        b.quad[i][c] += 0.5 * dt;
        b.quad[i + 1][c] += 0.5 * dt;
      }
    }
  }
  return b;
}

// dst = m * src. Eigen's matrix-matrix kernel repacks m on every call, which
// dominates for the few-column products of small batches; those go column by
// column through the matrix-vector kernel instead.
template <typename M, typename Src, typename Dst>
void multiply(const M& m, const Src& src, Dst&& dst) {
  if (src.cols() <= 6) {
    for (Eigen::Index c = 0; c < src.cols(); ++c) dst.col(c).noalias() = m * src.col(c);
  } else {
    dst.noalias() = m * src;
  }
}

// Batched Euler simulation that can record the network activations needed
// for the backward pass.
class BatchSimulator {
 public:
  BatchSimulator(const DynamicModel& model, const Batch& batch, bool record)
      : model_(model), batch_(batch), record_(record) {}

  void run() {
    const auto& net = model_.net;
    const auto& st = model_.stats;
    const int layers = net.num_layers();
    const std::size_t steps = batch_.steps;
    const Eigen::Index B = batch_.size;
    states_.assign(steps, Matrix());
    states_[0] = batch_.measured[0];
    // Layer inputs of every step side by side: column block i holds step i.
    const Eigen::Index cols = record_ ? static_cast<Eigen::Index>(steps - 1) * B : B;
    acts_.assign(static_cast<std::size_t>(layers), Matrix());
    for (int k = 0; k < layers; ++k)
      acts_[static_cast<std::size_t>(k)].resize(net.dims()[static_cast<std::size_t>(k)], cols);
    Matrix y;
    for (std::size_t i = 0; i + 1 < steps; ++i) {
      const Eigen::Index c0 = record_ ? static_cast<Eigen::Index>(i) * B : 0;
      const Matrix& x = states_[i];
      auto input = acts_[0].middleCols(c0, B);
      input.row(0) = (x.row(channel::u).array() - st.mu_nu[0]) / st.sigma_nu[0];
      input.row(1) = (x.row(channel::vm).array() - st.mu_nu[1]) / st.sigma_nu[1];
      input.row(2) = (x.row(channel::r).array() - st.mu_nu[2]) / st.sigma_nu[2];
      input.bottomRows(5) = batch_.controls[i];
      for (int k = 0; k + 1 < layers; ++k) {
        auto h = acts_[static_cast<std::size_t>(k + 1)].middleCols(c0, B);
        multiply(net.weight(k), acts_[static_cast<std::size_t>(k)].middleCols(c0, B), h);
        h.colwise() += net.bias(k);
        h = h.array().tanh().matrix();
      }
      y.resize(net.output_dim(), B);
      multiply(net.weight(layers - 1),
               acts_[static_cast<std::size_t>(layers - 1)].middleCols(c0, B), y);
      y.colwise() += net.bias(layers - 1);

      const auto u = x.row(channel::u).array();
      const auto v = x.row(channel::vm).array();
      const auto psi = x.row(channel::psi).array();
      const auto dt = batch_.dt[i].array();
      Matrix next = x;
      next.row(channel::x0).array() += dt * (u * psi.cos() - v * psi.sin());
      next.row(channel::y0).array() += dt * (u * psi.sin() + v * psi.cos());
      next.row(channel::psi).array() += dt * x.row(channel::r).array();
      next.row(channel::u).array() += dt * (st.sigma_acc[0] * y.row(0).array() + st.mu_acc[0]);
      next.row(channel::vm).array() += dt * (st.sigma_acc[1] * y.row(1).array() + st.mu_acc[1]);
      next.row(channel::r).array() += dt * (st.sigma_acc[2] * y.row(2).array() + st.mu_acc[2]);
      if (!next.allFinite()) {
        throw DivergenceError("batched rollout diverged at step " + std::to_string(i + 1));
      }
      states_[i + 1] = std::move(next);
    }
  }

  // Mean over windows of the trapezoidal error integral.
  double loss(const ErrorWeights& weights) const {
    const Eigen::Array<double, 6, 1> w2 = weights.w.array().square();
    double sum = 0.0;
    for (std::size_t i = 0; i < batch_.steps; ++i) {
      const Matrix diff = states_[i] - batch_.measured[i];
      const RowVector d = (diff.array().square().colwise() * w2).colwise().sum().matrix();
      sum += d.dot(batch_.quad[i]);
    }
    return sum / static_cast<double>(batch_.size);
  }

  // Accumulates d(loss)/d(theta) into grad (canonical layout).
  void backward(const ErrorWeights& weights, Eigen::VectorXd& grad) const {
    const auto& net = model_.net;
    const auto& st = model_.stats;
    const int layers = net.num_layers();
    const std::size_t steps = batch_.steps;
    const double scale = 2.0 / static_cast<double>(batch_.size);
    const Eigen::Array<double, 6, 1> w2 = weights.w.array().square();

    // dL/dx at sample i from its own error term.
    const auto direct = [&](std::size_t i) -> Matrix {
      Matrix g = ((states_[i] - batch_.measured[i]).array().colwise() * w2).matrix();
      g.array().rowwise() *= (scale * batch_.quad[i].array());
      return g;
    };

    // Pre-activation adjoints of every layer and step, laid out like acts_,
    // so the weight gradients reduce to one product per layer at the end.
    const Eigen::Index B = batch_.size;
    std::vector<Matrix> deltas(static_cast<std::size_t>(layers));
    for (int k = 0; k < layers; ++k) {
      deltas[static_cast<std::size_t>(k)].resize(net.dims()[static_cast<std::size_t>(k + 1)],
                                                 acts_[0].cols());
    }

    Matrix lambda = direct(steps - 1);
    Matrix a(6, B), delta, prev, dy(3, B);
    for (std::size_t i = steps - 1; i-- > 0;) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(i) * B;
      const Matrix& x = states_[i];
      a = lambda;
      a.array().rowwise() *= batch_.dt[i].array();  // dL/d(xdot_i)

      dy.row(0) = st.sigma_acc[0] * a.row(channel::u);
      dy.row(1) = st.sigma_acc[1] * a.row(channel::vm);
      dy.row(2) = st.sigma_acc[2] * a.row(channel::r);
      delta = dy;
      for (int k = layers - 1; k >= 0; --k) {
        deltas[static_cast<std::size_t>(k)].middleCols(c0, B) = delta;
        prev.resize(net.dims()[static_cast<std::size_t>(k)], B);
        multiply(net.weight(k).transpose(), delta, prev);
        if (k > 0) {
          delta = prev.array() *
                  (1.0 - acts_[static_cast<std::size_t>(k)].middleCols(c0, B).array().square());
        }
      }
      // prev now holds dL/d(network input).
      const auto u = x.row(channel::u).array();
      const auto v = x.row(channel::vm).array();
      const auto c = x.row(channel::psi).array().cos().eval();
      const auto s = x.row(channel::psi).array().sin().eval();
      const auto ax = a.row(channel::x0).array();
      const auto ay = a.row(channel::y0).array();

      Matrix next_lambda = lambda + direct(i);
      next_lambda.row(channel::u).array() += prev.row(0).array() / st.sigma_nu[0] + ax * c + ay * s;
      next_lambda.row(channel::vm).array() +=
          prev.row(1).array() / st.sigma_nu[1] - ax * s + ay * c;
      next_lambda.row(channel::r).array() +=
          prev.row(2).array() / st.sigma_nu[2] + a.row(channel::psi).array();
      next_lambda.row(channel::psi).array() += ax * (-u * s - v * c) + ay * (u * c - v * s);
      lambda = std::move(next_lambda);
    }

    for (int k = 0; k < layers; ++k) {
      const Eigen::Index off = net.layer_offset(k);
      const int out = net.dims()[static_cast<std::size_t>(k + 1)];
      const int in = net.dims()[static_cast<std::size_t>(k)];
      Eigen::Map<Mlp<double>::RowMajorMatrix> gw(grad.data() + off, out, in);
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + Eigen::Index(out) * in, out);
      const Matrix& d = deltas[static_cast<std::size_t>(k)];
      gw.noalias() += d * acts_[static_cast<std::size_t>(k)].transpose();
      gb += d.rowwise().sum();
    }
  }

 private:
  const DynamicModel& model_;
  const Batch& batch_;
  bool record_;
  std::vector<Matrix> states_;
  std::vector<Matrix> acts_;  // per layer: inputs x ((steps - 1) * B)
};

std::vector<const Window*> pointers(const WindowDataset& ds) {
  std::vector<const Window*> out;
  out.reserve(ds.size());
  for (const Window& w : ds.windows) out.push_back(&w);
  return out;
}

}  // namespace

LossGradient gradient(std::span<const Window* const> windows, const DynamicModel& model,
                      const ErrorWeights& weights, double lambda) {
  const Batch batch = make_batch(windows, model.stats);
  BatchSimulator sim(model, batch, true);
  sim.run();
  LossGradient out;
  out.loss = sim.loss(weights);
  out.gradient = Eigen::VectorXd::Zero(model.net.parameter_count());
  sim.backward(weights, out.gradient);
  out.gradient += 2.0 * lambda * model.net.parameters();
  out.objective = out.loss + lambda * model.net.squared_norm();
  if (!out.gradient.allFinite() || !std::isfinite(out.objective)) {
    throw DivergenceError("non-finite gradient");
  }
  return out;
}

LossGradient gradient(const WindowDataset& dataset, const DynamicModel& model,
                      const ErrorWeights& weights, double lambda) {
  const auto ptrs = pointers(dataset);
  return gradient(ptrs, model, weights, lambda);
}

double batched_dataset_loss(std::span<const Window* const> windows, const DynamicModel& model,
                            const ErrorWeights& weights) {
  const Batch batch = make_batch(windows, model.stats);
  BatchSimulator sim(model, batch, false);
  sim.run();
  return sim.loss(weights);
}

AdamState AdamState::zeros(Eigen::Index size, double learning_rate) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(size);
  s.v = Eigen::VectorXd::Zero(size);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& theta, const GradientVector& g) {
  if (g.size() != theta.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size()) {
    throw ConfigError("adam_step: size mismatch");
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  theta.array() -= state.learning_rate * (state.m.array() / bc1) /
                   ((state.v.array() / bc2).sqrt() + state.epsilon);
}

std::vector<std::vector<std::size_t>> minibatch_split(std::size_t n, std::uint64_t seed,
                                                      int parts) {
  if (parts < 1) throw ConfigError("minibatch_split needs at least one part");
  const auto p = static_cast<std::size_t>(parts);
  if (n < p) {
    throw DataError("cannot split " + std::to_string(n) + " windows into " + std::to_string(p) +
                    " subsets");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  std::vector<std::vector<std::size_t>> out(p);
  const std::size_t base = n / p, extra = n % p;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    out[k].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

double ema_update(std::optional<double> previous, double value, double alpha) {
  if (!previous) return value;
  return alpha * value + (1.0 - alpha) * *previous;
}

bool early_stop_check(int epoch, double valid_loss, double init_loss, double min_loss,
                      const TrainConfig& cfg) {
  return epoch > cfg.min_epochs && valid_loss > cfg.stop_factor * (init_loss - min_loss) + min_loss;
}

TrainingRecord run_training_loop(const TrainingHooks& hooks, const TrainConfig& cfg,
                                 double init_valid_loss) {
  TrainingRecord rec;
  rec.init_valid_loss = init_valid_loss;
  rec.min_valid_loss = init_valid_loss;
  std::optional<double> ema;
  long updates = 0;
  for (int epoch = 1;; ++epoch) {
    EpochRecord e;
    e.epoch = epoch;
    try {
      const auto [train_obj, n] = hooks.run_epoch(epoch);
      e.train_objective = train_obj;
      updates += n;
      e.valid_loss = hooks.validate();
    } catch (const DivergenceError& err) {
      rec.stop_reason = StopReason::diverged;
      rec.message = err.what();
      break;
    }
    if (!std::isfinite(e.valid_loss) || !std::isfinite(e.train_objective)) {
      rec.stop_reason = StopReason::diverged;
      rec.message = "non-finite loss at epoch " + std::to_string(epoch);
      break;
    }
    e.subset_updates = updates;
    ema = ema_update(ema, e.valid_loss, cfg.ema_alpha);
    e.valid_ema = *ema;
    if (e.valid_loss < rec.min_valid_loss) {
      e.is_new_min = true;
      rec.min_valid_loss = e.valid_loss;
      rec.min_epoch = epoch;
      hooks.snapshot(epoch);
    }
    rec.epochs.push_back(e);
    rec.stop_epoch = epoch;
    if (early_stop_check(epoch, e.valid_loss, rec.init_valid_loss, rec.min_valid_loss, cfg)) {
      rec.stop_reason = StopReason::stopping_rule;
      break;
    }
    if (cfg.max_epochs > 0 && epoch >= cfg.max_epochs) {
      rec.stop_reason = StopReason::max_epochs;
      break;
    }
  }
  return rec;
}

TrainResult train(const WindowDataset& train_ds, const WindowDataset& valid_ds,
                  const Standardizer& stats, const TrainConfig& cfg) {
  cfg.validate();
  if (train_ds.empty() || valid_ds.empty()) throw DataError("training needs non-empty datasets");
  const auto dims = architecture(cfg.hidden_width, cfg.hidden_layers);
  DynamicModel model = make_model(dims, stats, derive_seed(cfg.seed, 1));
  TrainResult result{model, model, {}};
  AdamState adam = AdamState::zeros(model.net.parameter_count(), cfg.learning_rate);
  const auto all = pointers(train_ds);
  const auto valid = pointers(valid_ds);
  const std::uint64_t split_seed = derive_seed(cfg.seed, 2);

  TrainingHooks hooks;
  hooks.run_epoch = [&](int epoch) {
    const auto subsets = minibatch_split(
        all.size(), derive_seed(split_seed, static_cast<std::uint64_t>(epoch)), cfg.num_subsets);
    double sum = 0.0;
    std::vector<const Window*> members;
    for (const auto& subset : subsets) {
      members.clear();
      for (std::size_t idx : subset) members.push_back(all[idx]);
      const LossGradient lg = gradient(members, model, cfg.weights, cfg.lambda);
      sum += lg.objective;
      adam_step(adam, model.net.parameters(), lg.gradient);
    }
    return std::pair<double, int>{sum / static_cast<double>(subsets.size()),
                                  static_cast<int>(subsets.size())};
  };
  hooks.validate = [&] { return batched_dataset_loss(valid, model, cfg.weights); };
  hooks.snapshot = [&](int) { result.best = model; };

  const double init_loss = batched_dataset_loss(valid, model, cfg.weights);
  if (!std::isfinite(init_loss)) throw DivergenceError("initial validation loss is not finite");
  result.record = run_training_loop(hooks, cfg, init_loss);
  return result;
}

void write_training_log(std::ostream& out, const TrainingRecord& record) {
  out << kTrainingLogHeader << '\n';
  char buf[256];
  for (const EpochRecord& e : record.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%ld,%.17g,%.17g,%.17g,%d\n", e.epoch, e.subset_updates,
                  e.train_objective, e.valid_loss, e.valid_ema, e.is_new_min ? 1 : 0);
    out << buf;
  }
}

}  // namespace shipid
