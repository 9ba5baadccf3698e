#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace shipid {

// Fully connected network with tanh on every hidden layer and a linear
// output layer. All parameters live in one flat vector, layer by layer, each
// layer stored as its weight matrix (row-major, out x in) followed by its
// bias. That flat order is the canonical parameter order used by gradients
// and the optimizer.
template <typename Scalar>
class Mlp {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using WeightMap = Eigen::Map<RowMajorMatrix>;
  using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
  using BiasMap = Eigen::Map<Vector>;
  using ConstBiasMap = Eigen::Map<const Vector>;

  Mlp() = default;

  // dims = {inputs, hidden..., outputs}; all parameters zero.
  explicit Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output dims");
    offsets_.push_back(0);
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
      if (dims_[k] < 1 || dims_[k + 1] < 1)
        throw std::invalid_argument("Mlp dims must be positive");
      offsets_.push_back(offsets_.back() +
                         static_cast<Eigen::Index>(dims_[k + 1]) * (dims_[k] + 1));
    }
    theta_ = Vector::Zero(offsets_.back());
  }

  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static Mlp uniform_init(std::vector<int> dims, std::uint64_t seed) {
    Mlp net(std::move(dims));
    std::mt19937_64 rng(seed);
    for (int k = 0; k < net.num_layers(); ++k) {
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(net.dims_[k]));
      auto w = net.weight(k);
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        // Explicit mapping keeps draws identical across standard libraries.
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        w.data()[i] = static_cast<Scalar>((2.0 * unit - 1.0)) * bound;
      }
    }
    return net;
  }

  const std::vector<int>& dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  Eigen::Index parameter_count() const { return theta_.size(); }

  Vector& parameters() { return theta_; }
  const Vector& parameters() const { return theta_; }

  WeightMap weight(int k) { return WeightMap(theta_.data() + offsets_[k], dims_[k + 1], dims_[k]); }
  ConstWeightMap weight(int k) const {
    return ConstWeightMap(theta_.data() + offsets_[k], dims_[k + 1], dims_[k]);
  }
  BiasMap bias(int k) {
    return BiasMap(theta_.data() + offsets_[k] + Eigen::Index(dims_[k + 1]) * dims_[k],
                   dims_[k + 1]);
  }
  ConstBiasMap bias(int k) const {
    return ConstBiasMap(theta_.data() + offsets_[k] + Eigen::Index(dims_[k + 1]) * dims_[k],
                        dims_[k + 1]);
  }
  // Offset of layer k inside the flat parameter vector.
  Eigen::Index layer_offset(int k) const { return offsets_[k]; }

  Vector forward(const Vector& input) const {
    Vector h = input;
    for (int k = 0; k < num_layers(); ++k) {
      Vector z = weight(k) * h + bias(k);
      h = (k + 1 < num_layers()) ? Vector(z.array().tanh()) : z;
    }
    return h;
  }

  // Column-wise forward pass over a batch.
  Matrix forward_batch(const Matrix& inputs) const {
    Matrix h = inputs;
    for (int k = 0; k < num_layers(); ++k) {
      Matrix z = weight(k) * h;
      z.colwise() += bias(k);
      if (k + 1 < num_layers()) z = z.array().tanh();
      h = std::move(z);
    }
    return h;
  }

  Scalar squared_norm() const { return theta_.squaredNorm(); }
  bool finite() const { return theta_.allFinite(); }

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> offsets_;
  Vector theta_;
};

}  // namespace shipid
