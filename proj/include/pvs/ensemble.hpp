#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pvs/dataset.hpp"
#include "pvs/mlp.hpp"

namespace pvs {

struct MemberRecord {
  std::uint64_t seed = 0;
  std::size_t fit_size = 0;
  std::size_t val_size = 0;
  TrainHistory history;
};

/// Which rows of the source data file were held out for testing.
struct SplitRecord {
  std::size_t source_size = 0;
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> test_indices;
};

/// k networks sharing one architecture and one scaler; the prediction is the
/// mean of the members' standardised outputs, mapped back to pascals.
struct EnsembleModel {
  Architecture arch;
  Scaler scaler;
  std::vector<NetworkParameters> members;
  std::uint64_t master_seed = 0;
  TrainConfig train_config;
  FoldAssignment folds;
  std::vector<MemberRecord> records;
  std::optional<SplitRecord> split;

  std::size_t k() const { return members.size(); }
};

/// Fraction of each member's training pool used for fitting; the rest is the
/// early-stopping validation set.
inline constexpr double kFitFraction = 0.9;

/// Index sets for member `i`: the k-1 complement folds split 90/10.
struct MemberSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};

MemberSplit member_split(const FoldAssignment& folds, std::size_t member, std::uint64_t seed);

/// Trains one network per fold (k >= 1; k = 1 trains on all data). The scaler
/// is fitted on all of `train_data`. Members run on up to `jobs` threads; the
/// result does not depend on `jobs`.
EnsembleModel train_ensemble(const Dataset& train_data, std::size_t k, const Architecture& arch,
                             const TrainConfig& config, TargetTransform transform = TargetTransform::standard,
                             unsigned jobs = 1);

/// Stress prediction in pascals. Each design gives the same bits whether it is
/// predicted alone or inside a batch.
double predict(const EnsembleModel& model, const DesignPoint& design);
VectorXd predict(const EnsembleModel& model, std::span<const DesignPoint> designs);

/// Per-member predictions in pascals (members x designs).
MatrixXd member_predictions(const EnsembleModel& model, std::span<const DesignPoint> designs);

void save(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace pvs
