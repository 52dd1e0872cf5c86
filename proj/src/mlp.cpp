#include "pvs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pvs {

void Architecture::validate() const {
  if (input_dim <= 0) throw ConfigError("architecture: input_dim must be > 0");
  if (hidden_widths.size() != static_cast<std::size_t>(kHiddenLayers)) {
    throw ConfigError("architecture: exactly 6 hidden layers are required, got " +
                      std::to_string(hidden_widths.size()));
  }
  for (int w : hidden_widths) {
    if (w <= 0) throw ConfigError("architecture: hidden widths must be > 0");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("architecture: dropout_rate must lie in [0, 1)");
  }
  const int hidden = static_cast<int>(hidden_widths.size());
  for (int layer : dropout_after) {
    if (layer < 1 || layer > hidden) throw ConfigError("architecture: dropout layer index out of range");
  }
  for (const auto& span : skip_spans) {
    if (span.from < 1 || span.to > hidden || span.from >= span.to) {
      throw ConfigError("architecture: skip span " + std::to_string(span.from) + "->" + std::to_string(span.to) +
                        " is out of range");
    }
    if (hidden_widths[span.from - 1] != hidden_widths[span.to - 1]) {
      throw ConfigError("architecture: skip span " + std::to_string(span.from) + "->" + std::to_string(span.to) +
                        " connects layers of different width");
    }
  }
}

std::size_t param_count(const Architecture& arch) {
  arch.validate();
  std::size_t total = 0;
  std::size_t fan_in = static_cast<std::size_t>(arch.input_dim);
  for (int width : arch.hidden_widths) {
    total += (fan_in + 1) * static_cast<std::size_t>(width);
    fan_in = static_cast<std::size_t>(width);
  }
  return total + fan_in + 1;
}

NetworkParameters init_network(const Architecture& arch, std::uint64_t seed) {
  auto params = zero_network<double>(arch);
  Rng rng(derive_seed(seed, "xavier"));
  for (auto& layer : params.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
      }
    }
  }
  return params;
}

DropoutMasks<double> sample_dropout_masks(const Architecture& arch, Eigen::Index batch, Rng& rng) {
  DropoutMasks<double> masks;
  masks.layers.resize(arch.hidden_widths.size());
  if (arch.dropout_rate <= 0.0) return masks;
  const double keep = 1.0 - arch.dropout_rate;
  for (int layer : arch.dropout_after) {
    auto& mask = masks.layers[static_cast<std::size_t>(layer - 1)];
    mask.resize(arch.hidden_widths[static_cast<std::size_t>(layer - 1)], batch);
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
    }
  }
  return masks;
}

double forward_train(const NetworkParameters& params, const VectorXd& x, std::uint64_t seed) {
  Rng rng(seed);
  const auto masks = sample_dropout_masks(params.arch, 1, rng);
  return forward_tape(params, x, &masks).prediction(0);
}

void TrainConfig::validate() const {
  if (max_epochs <= 0) throw ConfigError("train config: max_epochs must be > 0");
  if (batch_size <= 0) throw ConfigError("train config: batch_size must be > 0");
  if (patience <= 0) throw ConfigError("train config: patience must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train config: learning_rate must be > 0");
  }
}

TrainResult train(const Architecture& arch, const MatrixXd& fit_inputs, const VectorXd& fit_targets,
                  const MatrixXd& val_inputs, const VectorXd& val_targets, const TrainConfig& config) {
  arch.validate();
  config.validate();
  if (fit_inputs.cols() == 0) throw DomainError("train: empty fitting set");
  if (val_inputs.cols() == 0) throw DomainError("train: empty validation set");
  if (fit_inputs.cols() != fit_targets.size() || val_inputs.cols() != val_targets.size()) {
    throw DomainError("train: input and target counts differ");
  }

  auto params = init_network(arch, derive_seed(config.seed, "init"));
  auto adam = AdamState<double>::for_params(params, config.learning_rate);
  Rng order_rng(derive_seed(config.seed, "batch_order"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));

  const auto n = static_cast<std::size_t>(fit_inputs.cols());
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result{params, {}};
  int since_best = 0;
  MatrixXd batch_x;
  VectorXd batch_y;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const auto count = std::min(batch_size, n - start);
      batch_x.resize(fit_inputs.rows(), static_cast<Eigen::Index>(count));
      batch_y.resize(static_cast<Eigen::Index>(count));
      for (std::size_t j = 0; j < count; ++j) {
        batch_x.col(static_cast<Eigen::Index>(j)) = fit_inputs.col(static_cast<Eigen::Index>(order[start + j]));
        batch_y(static_cast<Eigen::Index>(j)) = fit_targets(static_cast<Eigen::Index>(order[start + j]));
      }
      const auto masks = sample_dropout_masks(arch, static_cast<Eigen::Index>(count), dropout_rng);
      const auto tape = forward_tape(params, batch_x, &masks);
      const double loss = l1_loss(tape.prediction, batch_y);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += loss * static_cast<double>(count);
      const auto grads = backward(params, tape, batch_y, &masks);
      adam_step(adam, params, grads);
    }
    const double val_loss = l1_loss(forward_batch(params, val_inputs), val_targets);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(n));
    result.history.val_loss.push_back(val_loss);

    if (result.history.best_epoch < 0 || val_loss < result.history.best_val_loss) {
      result.history.best_epoch = epoch;
      result.history.best_val_loss = val_loss;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace pvs
