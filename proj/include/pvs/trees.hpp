#pragma once

// CART regression trees and the two ensembles built from them.
// Inputs are n x d matrices (one sample per row).

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pvs/dataset.hpp"
#include "pvs/seeding.hpp"
#include "pvs/types.hpp"

namespace pvs {

enum class SplitCriterion { variance_reduction, mae_reduction };

SplitCriterion parse_split_criterion(const std::string& name);
std::string to_string(SplitCriterion criterion);

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

struct TreeHyperParams {
  int max_depth = kUnlimitedDepth;
  int min_samples_leaf = 1;
  SplitCriterion criterion = SplitCriterion::variance_reduction;
  int n_trees = 100;
  int max_features = kNumFeatures;  // forest: features tried per node
  bool bootstrap = true;            // forest
  double shrinkage = 0.1;           // boosting

  void validate() const;
};

/// Flat node storage. feature < 0 marks a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd predict_rows(const MatrixXd& x) const;
  std::size_t leaf_count() const;
  int depth() const;
};

/// Greedy top-down CART. Candidate thresholds are midpoints between
/// consecutive distinct sorted values; x <= threshold goes left. A candidate
/// must beat the best so far by more than 1e-12 of the parent impurity, so
/// ties go to the lowest feature, then the lowest threshold.
RegressionTree fit_cart(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp);

/// Same, restricted to a row subset and a per-node random feature subset of
/// size hp.max_features (drawn from `rng` when smaller than d).
RegressionTree fit_cart(const MatrixXd& x, const VectorXd& y, const std::vector<std::size_t>& rows,
                        const TreeHyperParams& hp, Rng* rng);

struct ForestModel {
  std::vector<RegressionTree> trees;
  std::vector<std::uint64_t> tree_seeds;
  int max_features = kNumFeatures;

  double predict(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd predict_rows(const MatrixXd& x) const;
};

ForestModel fit_random_forest(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp,
                              std::uint64_t seed, unsigned jobs = 1);

struct BoostModel {
  double initial = 0.0;
  double shrinkage = 0.1;
  std::vector<RegressionTree> trees;

  double predict(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd predict_rows(const MatrixXd& x) const;
};

/// Least-squares boosting; each round fits a tree to the current residuals.
BoostModel fit_gradient_boost(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp);

// Baselines bundled with the scaler they were trained under, so they predict
// in pascals from raw designs.

enum class BaselineKind { random_forest, gradient_boost };

struct BaselineModel {
  BaselineKind kind = BaselineKind::random_forest;
  Scaler scaler;
  TreeHyperParams hp;
  ForestModel forest;
  BoostModel boost;

  VectorXd predict(std::span<const DesignPoint> designs) const;
};

BaselineModel fit_baseline(BaselineKind kind, const Dataset& train, const TreeHyperParams& hp,
                           std::uint64_t seed, TargetTransform transform, unsigned jobs = 1);

struct GridCell {
  TreeHyperParams hp;
  double cv_mean_abs_residual = 0.0;
};

struct GridSearchResult {
  TreeHyperParams best;
  std::vector<GridCell> table;  // in grid order
};

/// k-fold CV of mean |residual| per cell. Ties go to fewer trees, then shallower.
GridSearchResult grid_search(BaselineKind kind, const Dataset& data, const std::vector<TreeHyperParams>& grid,
                             std::size_t k, std::uint64_t seed, TargetTransform transform, unsigned jobs = 1);

void save(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_baseline(const std::filesystem::path& path);

}  // namespace pvs
