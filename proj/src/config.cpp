#include "pvs/config.hpp"

#include <cmath>

namespace pvs {

std::vector<TreeHyperParams> TreeGrid::cells() const {
  std::vector<TreeHyperParams> out;
  const std::vector<double> rates = shrinkage.empty() ? std::vector<double>{0.1} : shrinkage;
  const std::vector<int> features = max_features.empty() ? std::vector<int>{kNumFeatures} : max_features;
  const std::vector<std::string> crits = criteria.empty() ? std::vector<std::string>{"variance_reduction"} : criteria;
  for (int trees : n_trees) {
    for (int depth : max_depths) {
      for (int feat : features) {
        for (const auto& crit : crits) {
          for (double rate : rates) {
            TreeHyperParams hp;
            hp.n_trees = trees;
            hp.max_depth = depth == 0 ? kUnlimitedDepth : depth;
            hp.max_features = feat;
            hp.criterion = parse_split_criterion(crit);
            hp.shrinkage = rate;
            hp.min_samples_leaf = min_samples_leaf;
            out.push_back(hp);
          }
        }
      }
    }
  }
  return out;
}

TreeGrid default_forest_grid() {
  TreeGrid grid;
  grid.n_trees = {100};
  grid.max_depths = {0, 12};
  grid.max_features = {4, 2};
  grid.criteria = {"variance_reduction"};
  grid.shrinkage = {1.0};
  return grid;
}

TreeGrid default_boost_grid() {
  TreeGrid grid;
  grid.n_trees = {100, 300};
  grid.max_depths = {3, 5};
  grid.max_features = {4};
  grid.criteria = {"variance_reduction"};
  grid.shrinkage = {0.1};
  return grid;
}

void RunConfig::validate() const {
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  space.validate();
  if (n_samples == 0) throw ConfigError("n-samples must be > 0");
  if (n_train == 0) throw ConfigError("n-train must be > 0");
  arch.validate();
  train.validate();
  if (ensemble_k == 0) throw ConfigError("k must be >= 1");
  if (grid_folds < 2) throw ConfigError("grid-folds must be >= 2");
  for (const auto* grid : {&forest_grid, &boost_grid}) {
    if (grid->n_trees.empty() || grid->max_depths.empty()) throw ConfigError("baseline grids must not be empty");
    for (int d : grid->max_depths) {
      if (d < 0) throw ConfigError("baseline depth must be >= 0 (0 = unlimited)");
    }
    for (const auto& hp : grid->cells()) hp.validate();
  }
  if (!(material.yield_strength > 0.0)) throw ConfigError("yield-strength must be > 0");
  if (!(safety_factor >= 1.0)) throw ConfigError("safety-factor must be >= 1");
  if (!(water.density > 0.0) || !(water.gravity > 0.0)) throw ConfigError("water density and gravity must be > 0");
  for (std::size_t c = 0; c < columns.names.size(); ++c) {
    if (columns.names[c].empty()) throw ConfigError("CSV column names must not be empty");
    if (!std::isfinite(columns.scale[c]) || columns.scale[c] == 0.0) {
      throw ConfigError("CSV column scale factors must be finite and non-zero");
    }
  }
}

std::uint64_t stage_seed(const RunConfig& config, const char* stage) { return derive_seed(config.seed, stage); }

}  // namespace pvs
