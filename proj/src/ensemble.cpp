#include "pvs/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace pvs {

MemberSplit member_split(const FoldAssignment& folds, std::size_t member, std::uint64_t seed) {
  std::vector<std::size_t> pool;
  if (folds.k <= 1) {
    pool.resize(folds.membership.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  } else {
    pool = folds.complement(member);
  }
  if (pool.size() < 2) throw DomainError("member " + std::to_string(member) + ": too few samples to split");

  Rng rng(derive_seed(seed, "member_split", member));
  shuffle(pool, rng);
  const std::size_t n_fit = std::clamp<std::size_t>(pool.size() * 9 / 10, 1, pool.size() - 1);
  MemberSplit split;
  split.fit.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_fit));
  split.validation.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_fit), pool.end());
  return split;
}

EnsembleModel train_ensemble(const Dataset& train_data, std::size_t k, const Architecture& arch,
                             const TrainConfig& config, TargetTransform transform, unsigned jobs) {
  arch.validate();
  config.validate();
  if (k == 0) throw ConfigError("ensemble size k must be >= 1");
  if (train_data.size() < 10 * k) {
    throw ConfigError("ensemble training needs at least 10*k samples (" + std::to_string(10 * k) + ")");
  }

  EnsembleModel model;
  model.arch = arch;
  model.master_seed = config.seed;
  model.train_config = config;
  model.scaler = fit_scaler(train_data, transform);
  if (k == 1) {
    model.folds = FoldAssignment{1, std::vector<std::size_t>(train_data.size(), 0)};
  } else {
    model.folds = kfold(train_data.size(), k, derive_seed(config.seed, "ensemble_folds"));
  }

  const MatrixXd x = model.scaler.apply(train_data.inputs);
  const VectorXd y = model.scaler.apply_targets(train_data.targets);

  model.members.resize(k);
  model.records.resize(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < k; i = next++) {
      try {
        const auto split = member_split(model.folds, i, config.seed);
        auto gather = [&](const std::vector<std::size_t>& idx, MatrixXd& xs, VectorXd& ys) {
          xs.resize(x.rows(), static_cast<Eigen::Index>(idx.size()));
          ys.resize(static_cast<Eigen::Index>(idx.size()));
          for (std::size_t j = 0; j < idx.size(); ++j) {
            xs.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
            ys(static_cast<Eigen::Index>(j)) = y(static_cast<Eigen::Index>(idx[j]));
          }
        };
        MatrixXd fit_x, val_x;
        VectorXd fit_y, val_y;
        gather(split.fit, fit_x, fit_y);
        gather(split.validation, val_x, val_y);

        TrainConfig member_config = config;
        member_config.seed = derive_seed(config.seed, "member", i);
        auto result = train(arch, fit_x, fit_y, val_x, val_y, member_config);
        model.members[i] = std::move(result.params);
        model.records[i] = {member_config.seed, split.fit.size(), split.validation.size(), std::move(result.history)};
      } catch (const TrainingError& e) {
        errors[i] = std::make_exception_ptr(TrainingError("member " + std::to_string(i) + ": " + e.what()));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, k);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return model;
}

namespace {

// Standardised output of every member (rows) for every design (columns).
// Designs are evaluated one at a time so a prediction never depends on which
// other designs share the call: batched products sum in a different order.
MatrixXd standardized_outputs(const EnsembleModel& model, std::span<const DesignPoint> designs) {
  if (model.members.empty()) throw ModelError("ensemble has no members");
  for (const auto& design : designs) validate(design);
  MatrixXd out(static_cast<Eigen::Index>(model.k()), static_cast<Eigen::Index>(designs.size()));
  for (std::size_t j = 0; j < designs.size(); ++j) {
    const Vector4d x = model.scaler.apply(designs[j]);
    for (std::size_t m = 0; m < model.k(); ++m) {
      const double z = forward(model.members[m], x);
      if (!std::isfinite(z)) throw ModelError("member " + std::to_string(m) + " produced a non-finite output");
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = z;
    }
  }
  return out;
}

}  // namespace

MatrixXd member_predictions(const EnsembleModel& model, std::span<const DesignPoint> designs) {
  return standardized_outputs(model, designs).unaryExpr([&](double z) { return model.scaler.invert_target(z); });
}

VectorXd predict(const EnsembleModel& model, std::span<const DesignPoint> designs) {
  const MatrixXd z = standardized_outputs(model, designs);
  VectorXd out(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index m = 0; m < z.rows(); ++m) sum += z(m, j);
    out(j) = model.scaler.invert_target(sum / static_cast<double>(z.rows()));
  }
  return out;
}

double predict(const EnsembleModel& model, const DesignPoint& design) {
  return predict(model, std::span<const DesignPoint>(&design, 1))(0);
}

}  // namespace pvs
