#pragma once

// Fully connected regression network: six ReLU hidden layers, optional inverted
// dropout after chosen hidden layers, identity skip connections between
// equal-width hidden layers, and a linear scalar output.
//
// Samples are stored column-wise: a batch is an input_dim x B matrix.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pvs/errors.hpp"
#include "pvs/seeding.hpp"
#include "pvs/types.hpp"

namespace pvs {

/// Identity residual from the output of hidden layer `from` to hidden layer
/// `to` (1-based). The source output is added to the output of `to`, before
/// the next linear map.
struct SkipSpan {
  int from = 0;
  int to = 0;
  friend bool operator==(const SkipSpan&, const SkipSpan&) = default;
};

inline constexpr int kHiddenLayers = 6;

struct Architecture {
  int input_dim = kNumFeatures;
  std::vector<int> hidden_widths = std::vector<int>(kHiddenLayers, 64);
  double dropout_rate = 0.2;
  std::vector<int> dropout_after = {2, 4};  // 1-based hidden layer indices
  std::vector<SkipSpan> skip_spans = {{1, 3}, {3, 5}};

  /// Throws ConfigError on any structural violation.
  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Sum over all linear layers of (fan_in + 1) * fan_out.
std::size_t param_count(const Architecture& arch);

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // fan_out x fan_in
  Vector<Scalar> bias;    // fan_out
};

/// Weights for the six hidden layers followed by the output layer. Gradients
/// and Adam moments reuse the same shape.
template <typename Scalar>
struct NetworkParams {
  Architecture arch;
  std::vector<DenseLayer<Scalar>> layers;

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& layer : layers) total += layer.weight.size() + layer.bias.size();
    return total;
  }

  template <typename Other>
  NetworkParams<Other> cast() const {
    NetworkParams<Other> out{arch, {}};
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) {
      out.layers.push_back({layer.weight.template cast<Other>(), layer.bias.template cast<Other>()});
    }
    return out;
  }

  bool all_finite() const {
    for (const auto& layer : layers) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
  }

  /// Same architecture and shapes, every value zero.
  NetworkParams zeros_like() const {
    NetworkParams out{arch, {}};
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) {
      out.layers.push_back({Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()),
                            Vector<Scalar>::Zero(layer.bias.size())});
    }
    return out;
  }
};

using NetworkParameters = NetworkParams<double>;

/// Zero-valued parameters with the shapes implied by `arch`.
template <typename Scalar = double>
NetworkParams<Scalar> zero_network(const Architecture& arch) {
  arch.validate();
  NetworkParams<Scalar> params{arch, {}};
  int fan_in = arch.input_dim;
  for (int width : arch.hidden_widths) {
    params.layers.push_back({Matrix<Scalar>::Zero(width, fan_in), Vector<Scalar>::Zero(width)});
    fan_in = width;
  }
  params.layers.push_back({Matrix<Scalar>::Zero(1, fan_in), Vector<Scalar>::Zero(1)});
  return params;
}

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParameters init_network(const Architecture& arch, std::uint64_t seed);

/// Per hidden layer, either an empty matrix (no dropout) or a width x B
/// matrix holding 0 for dropped units and 1/keep for kept ones.
template <typename Scalar>
struct DropoutMasks {
  std::vector<Matrix<Scalar>> layers;
};

DropoutMasks<double> sample_dropout_masks(const Architecture& arch, Eigen::Index batch, Rng& rng);

/// Intermediate values of one forward pass, kept for backpropagation.
template <typename Scalar>
struct ForwardTape {
  std::vector<Matrix<Scalar>> pre;  // linear pre-activation, per hidden layer
  std::vector<Matrix<Scalar>> out;  // out[0] = input, out[l] = output of hidden layer l
  Vector<Scalar> prediction;        // B
};

namespace detail {

/// sources[l] lists the 1-based hidden layers whose output feeds layer l's skip.
inline std::vector<std::vector<int>> skip_sources(const Architecture& arch) {
  std::vector<std::vector<int>> sources(arch.hidden_widths.size() + 1);
  for (const auto& span : arch.skip_spans) sources[span.to].push_back(span.from);
  return sources;
}

}  // namespace detail

/// Forward pass over a batch. `masks == nullptr` is eval mode (no dropout).
template <typename Scalar, typename Derived>
ForwardTape<Scalar> forward_tape(const NetworkParams<Scalar>& params,
                                 const Eigen::MatrixBase<Derived>& inputs,
                                 const DropoutMasks<Scalar>* masks = nullptr) {
  const auto hidden = params.layers.size() - 1;
  if (inputs.rows() != params.arch.input_dim) {
    throw DomainError("input dimension does not match the network");
  }
  if (!inputs.allFinite()) throw DomainError("network input contains non-finite values");

  const auto sources = detail::skip_sources(params.arch);
  ForwardTape<Scalar> tape;
  tape.pre.resize(hidden + 1);
  tape.out.resize(hidden + 1);
  tape.out[0] = inputs;
  for (std::size_t l = 1; l <= hidden; ++l) {
    const auto& layer = params.layers[l - 1];
    tape.pre[l].noalias() = layer.weight * tape.out[l - 1];
    tape.pre[l].colwise() += layer.bias;
    Matrix<Scalar> h = tape.pre[l].cwiseMax(Scalar(0));
    if (masks != nullptr && masks->layers[l - 1].size() != 0) h.array() *= masks->layers[l - 1].array();
    for (int src : sources[l]) h += tape.out[src];
    tape.out[l] = std::move(h);
  }
  const auto& head = params.layers.back();
  tape.prediction = (head.weight * tape.out[hidden]).transpose();
  tape.prediction.array() += head.bias(0);
  return tape;
}

/// Eval-mode predictions for a batch (one sample per column).
template <typename Scalar, typename Derived>
Vector<Scalar> forward_batch(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& inputs) {
  return forward_tape(params, inputs).prediction;
}

/// Eval-mode prediction for one sample. Deterministic.
template <typename Scalar, typename Derived>
Scalar forward(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x) {
  return forward_tape(params, x.derived().template cast<Scalar>().eval()).prediction(0);
}

/// Train-mode prediction for one sample: a fresh dropout mask drawn from `seed`.
double forward_train(const NetworkParameters& params, const VectorXd& x, std::uint64_t seed);

/// Mean absolute error. Throws DomainError on length mismatch or empty input.
template <typename Scalar>
Scalar l1_loss(std::span<const Scalar> pred, std::span<const Scalar> truth) {
  if (pred.size() != truth.size()) throw DomainError("l1_loss: length mismatch");
  if (pred.empty()) throw DomainError("l1_loss: empty input");
  Scalar total(0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    using std::abs;
    total += abs(pred[i] - truth[i]);
  }
  return total / Scalar(pred.size());
}

template <typename Scalar>
Scalar l1_loss(const Vector<Scalar>& pred, const Vector<Scalar>& truth) {
  return l1_loss(std::span<const Scalar>(pred.data(), static_cast<std::size_t>(pred.size())),
                 std::span<const Scalar>(truth.data(), static_cast<std::size_t>(truth.size())));
}

/// Gradient of the mean L1 loss with respect to every parameter, reusing the
/// dropout masks recorded by `forward_tape`. sign(0) is taken as 0.
template <typename Scalar>
NetworkParams<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                               const Vector<Scalar>& targets, const DropoutMasks<Scalar>* masks = nullptr) {
  const auto hidden = params.layers.size() - 1;
  const auto batch = tape.prediction.size();
  if (targets.size() != batch) throw DomainError("backward: target count does not match the batch");
  if (batch == 0) throw DomainError("backward: empty batch");

  const auto sources = detail::skip_sources(params.arch);
  NetworkParams<Scalar> grad{params.arch, std::vector<DenseLayer<Scalar>>(params.layers.size())};

  // d loss / d prediction, one entry per sample, as a 1 x B row.
  Matrix<Scalar> upstream(1, batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const Scalar r = tape.prediction(i) - targets(i);
    upstream(0, i) = (r > Scalar(0) ? Scalar(1) : (r < Scalar(0) ? Scalar(-1) : Scalar(0))) / Scalar(batch);
  }

  grad.layers[hidden].weight = upstream * tape.out[hidden].transpose();
  grad.layers[hidden].bias = upstream.rowwise().sum();

  // d loss / d out[l] for every hidden layer; skips add extra consumers.
  std::vector<Matrix<Scalar>> d_out(hidden + 1);
  d_out[hidden] = params.layers[hidden].weight.transpose() * upstream;
  for (std::size_t l = hidden; l >= 1; --l) {
    for (int src : sources[l]) {
      if (d_out[src].size() == 0) {
        d_out[src] = d_out[l];
      } else {
        d_out[src] += d_out[l];
      }
    }
    Matrix<Scalar> d_pre = d_out[l];
    if (masks != nullptr && masks->layers[l - 1].size() != 0) d_pre.array() *= masks->layers[l - 1].array();
    d_pre.array() *= (tape.pre[l].array() > Scalar(0)).template cast<Scalar>();

    grad.layers[l - 1].weight.noalias() = d_pre * tape.out[l - 1].transpose();
    grad.layers[l - 1].bias = d_pre.rowwise().sum();
    if (l > 1) {
      Matrix<Scalar> through = params.layers[l - 1].weight.transpose() * d_pre;
      if (d_out[l - 1].size() == 0) {
        d_out[l - 1] = std::move(through);
      } else {
        d_out[l - 1] += through;
      }
    }
  }
  return grad;
}

/// Adam with bias correction.
template <typename Scalar>
struct AdamState {
  NetworkParams<Scalar> first_moment;
  NetworkParams<Scalar> second_moment;
  std::uint64_t step = 0;
  Scalar learning_rate = Scalar(0.001);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState for_params(const NetworkParams<Scalar>& params, Scalar lr = Scalar(0.001)) {
    AdamState state{params.zeros_like(), params.zeros_like()};
    state.learning_rate = lr;
    return state;
  }
};

template <typename Scalar>
void adam_step(AdamState<Scalar>& state, NetworkParams<Scalar>& params, const NetworkParams<Scalar>& grads) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size()) {
    throw DomainError("adam_step: parameter structure mismatch");
  }
  ++state.step;
  using std::pow;
  const Scalar correction1 = Scalar(1) - pow(state.beta1, Scalar(state.step));
  const Scalar correction2 = Scalar(1) - pow(state.beta2, Scalar(state.step));

  auto update = [&](auto& value, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseAbs2();
    value.array() -= state.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const auto& g = grads.layers[l];
    if (g.weight.rows() != layer.weight.rows() || g.weight.cols() != layer.weight.cols() ||
        g.bias.size() != layer.bias.size()) {
      throw DomainError("adam_step: gradient shape mismatch");
    }
    update(layer.weight, state.first_moment.layers[l].weight, state.second_moment.layers[l].weight, g.weight);
    update(layer.bias, state.first_moment.layers[l].bias, state.second_moment.layers[l].bias, g.bias);
  }
}

struct TrainConfig {
  int max_epochs = 2000;
  int batch_size = 128;
  int patience = 50;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;  // 0-based
  double best_val_loss = 0.0;
};

struct TrainResult {
  NetworkParameters params;
  TrainHistory history;
};

/// Mini-batch Adam on L1 loss with early stopping on validation L1. Inputs
/// are normalised (one sample per column); returns the best-validation weights.
/// Throws TrainingError on a non-finite loss.
TrainResult train(const Architecture& arch, const MatrixXd& fit_inputs, const VectorXd& fit_targets,
                  const MatrixXd& val_inputs, const VectorXd& val_targets, const TrainConfig& config);

}  // namespace pvs
