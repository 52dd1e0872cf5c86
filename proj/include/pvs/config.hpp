#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvs/dataset.hpp"
#include "pvs/mlp.hpp"
#include "pvs/physics.hpp"
#include "pvs/trees.hpp"

namespace pvs {

/// Hyperparameter grid for one baseline family; the cells are the cartesian
/// product of the lists. A depth of 0 means unlimited.
struct TreeGrid {
  std::vector<int> n_trees;
  std::vector<int> max_depths;
  std::vector<int> max_features;
  std::vector<std::string> criteria;
  std::vector<double> shrinkage;
  int min_samples_leaf = 1;

  std::vector<TreeHyperParams> cells() const;
};

TreeGrid default_forest_grid();
TreeGrid default_boost_grid();

/// Everything a run needs. Populated from the command line and an optional
/// config file; validate() runs before any command does work.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  DesignSpace space;
  std::size_t n_samples = 11311;
  SamplingMethod sampling = SamplingMethod::uniform;
  std::size_t n_train = 8000;

  Architecture arch;
  TrainConfig train;  // train.seed is derived from `seed`
  std::size_t ensemble_k = 5;
  TargetTransform target_transform = TargetTransform::standard;

  TreeGrid forest_grid = default_forest_grid();
  TreeGrid boost_grid = default_boost_grid();
  std::size_t grid_folds = 3;

  Material material = al6061_t6();
  double safety_factor = 1.0;
  SeaWater water;
  ColumnMap columns;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

/// Stage seeds, all derived from the master seed by label.
std::uint64_t stage_seed(const RunConfig& config, const char* stage);

}  // namespace pvs
