#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pvs/physics.hpp"
#include "pvs/types.hpp"

namespace pvs {

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {"depth", "length", "thickness",
                                                                       "radius"};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Per-variable bounds in SI units. Defaults cover 100-6000 m of sea depth.
struct DesignSpace {
  Interval depth{100.0, 6000.0};
  Interval length{0.1, 2.0};
  Interval thickness{0.002, 0.06};
  Interval radius{0.05, 0.5};

  /// Throws ConfigError for inverted or non-finite bounds. lower == upper is allowed.
  void validate() const;
};

enum class SamplingMethod { uniform, latin_hypercube };

SamplingMethod parse_sampling_method(const std::string& name);
std::string to_string(SamplingMethod method);

enum class Provenance { oracle, imported };

struct Dataset {
  std::vector<DesignPoint> inputs;
  std::vector<double> targets;  // Pa
  Provenance provenance = Provenance::oracle;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }

  /// Rows of the listed samples, in order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// n x 4 matrix of raw design variables.
  MatrixXd feature_matrix() const;
};

/// Feature vector (depth, length, thickness, radius).
Vector4d to_features(const DesignPoint& design);

/// Draws n valid designs. Samples with thickness >= radius are rejected and
/// redrawn; a rejection rate above 99% raises ConfigError.
std::vector<DesignPoint> sample_designs(const DesignSpace& space, std::size_t n, std::uint64_t seed,
                                        SamplingMethod method = SamplingMethod::uniform);

/// Evaluates the stress oracle for each design (in order). `jobs` worker threads.
Dataset generate_dataset(std::span<const DesignPoint> designs, const SeaWater& water = {},
                         unsigned jobs = 1);

struct Split {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Random partition with |train| = n_train.
Split split_indices(std::size_t n, std::size_t n_train, std::uint64_t seed);
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t n_train,
                                             std::uint64_t seed);

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> membership;  // fold index per sample

  std::vector<std::size_t> fold(std::size_t i) const;
  /// Every sample outside fold i.
  std::vector<std::size_t> complement(std::size_t i) const;
};

FoldAssignment kfold(std::size_t n, std::size_t k, std::uint64_t seed);
inline FoldAssignment kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
  return kfold(data.size(), k, seed);
}

/// How targets are normalised. Inputs are always min-max scaled.
enum class TargetTransform {
  standard,      // (y - mean) / std
  log_standard,  // (ln y - mean) / std, mean/std taken over ln y
};

TargetTransform parse_target_transform(const std::string& name);
std::string to_string(TargetTransform transform);

/// Min-max input scaling and target standardisation, fitted on training data only.
struct Scaler {
  Vector4d input_min = Vector4d::Zero();
  Vector4d input_max = Vector4d::Ones();
  TargetTransform transform = TargetTransform::standard;
  double target_mean = 0.0;
  double target_std = 1.0;

  /// Inputs map to [0, 1] over the training range. No clamping outside it.
  Vector4d apply(const DesignPoint& design) const;
  /// 4 x n matrix, one normalised sample per column.
  MatrixXd apply(std::span<const DesignPoint> designs) const;
  double apply_target(double stress) const;
  double invert_target(double normalized) const;
  VectorXd apply_targets(std::span<const double> stresses) const;
};

/// Throws ConfigError naming the variable if an input is constant, or if
/// the (transformed) targets have zero spread.
Scaler fit_scaler(const Dataset& train, TargetTransform transform = TargetTransform::standard);

// CSV with header depth_m,length_m,thickness_m,radius_m,max_vm_pa.

inline constexpr std::array<const char*, 5> kCsvColumns = {"depth_m", "length_m", "thickness_m",
                                                           "radius_m", "max_vm_pa"};

/// Maps a foreign file's columns onto the five canonical fields. Each value
/// read is multiplied by the matching scale factor (e.g. 1e6 for MPa).
struct ColumnMap {
  std::array<std::string, 5> names = {"depth_m", "length_m", "thickness_m", "radius_m", "max_vm_pa"};
  std::array<double, 5> scale = {1.0, 1.0, 1.0, 1.0, 1.0};
};

void write_csv(const Dataset& data, const std::filesystem::path& path);
std::string to_csv(const Dataset& data);
Dataset read_csv(const std::filesystem::path& path, const ColumnMap& columns = {});
Dataset parse_csv(const std::string& text, const ColumnMap& columns = {});

/// Design-only CSV (first four columns); used for batch prediction input.
std::vector<DesignPoint> read_designs_csv(const std::filesystem::path& path,
                                          const ColumnMap& columns = {});

}  // namespace pvs
