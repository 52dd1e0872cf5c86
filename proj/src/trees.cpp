#include "pvs/trees.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <queue>
#include <thread>

#include "pvs/metrics.hpp"

namespace pvs {

SplitCriterion parse_split_criterion(const std::string& name) {
  if (name == "variance_reduction" || name == "squared_error" || name == "mse") {
    return SplitCriterion::variance_reduction;
  }
  if (name == "mae_reduction" || name == "absolute_error" || name == "mae") return SplitCriterion::mae_reduction;
  throw ConfigError("unknown split criterion '" + name + "' (expected variance_reduction or mae_reduction)");
}

std::string to_string(SplitCriterion criterion) {
  return criterion == SplitCriterion::variance_reduction ? "variance_reduction" : "mae_reduction";
}

void TreeHyperParams::validate() const {
  if (max_depth <= 0) throw ConfigError("tree: max_depth must be > 0");
  if (min_samples_leaf <= 0) throw ConfigError("tree: min_samples_leaf must be > 0");
  if (n_trees <= 0) throw ConfigError("tree: n_trees must be > 0");
  if (max_features <= 0) throw ConfigError("tree: max_features must be > 0");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("tree: shrinkage must lie in (0, 1]");
}

namespace {

// Sum of absolute deviations from the median of a growing multiset.
// lower holds the smaller half (its top is the median), upper the rest.
class RunningAbsDeviation {
 public:
  void push(double v) {
    if (lower_.empty() || v <= lower_.top()) {
      lower_.push(v);
      lower_sum_ += v;
    } else {
      upper_.push(v);
      upper_sum_ += v;
    }
    if (lower_.size() > upper_.size() + 1) {
      const double moved = lower_.top();
      lower_.pop();
      lower_sum_ -= moved;
      upper_.push(moved);
      upper_sum_ += moved;
    } else if (upper_.size() > lower_.size()) {
      const double moved = upper_.top();
      upper_.pop();
      upper_sum_ -= moved;
      lower_.push(moved);
      lower_sum_ += moved;
    }
  }

  double value() const {
    if (lower_.empty()) return 0.0;
    const double median = lower_.top();
    const double lo = median * static_cast<double>(lower_.size()) - lower_sum_;
    const double hi = upper_sum_ - median * static_cast<double>(upper_.size());
    return std::max(0.0, lo + hi);
  }

 private:
  std::priority_queue<double> lower_;
  std::priority_queue<double, std::vector<double>, std::greater<>> upper_;
  double lower_sum_ = 0.0;
  double upper_sum_ = 0.0;
};

// Relative to the parent impurity: smaller gains do not split, and closer
// candidates count as tied.
constexpr double kTieTolerance = 1e-12;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double reduction = 0.0;
};

class CartBuilder {
 public:
  CartBuilder(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp, Rng* rng)
      : x_(x), y_(y), hp_(hp), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});

    double lo = y_(static_cast<Eigen::Index>(rows.front()));
    double hi = lo;
    double sum = 0.0;
    for (auto r : rows) {
      const double v = y_(static_cast<Eigen::Index>(r));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    const bool constant = lo == hi;
    tree_.nodes[index].value = constant ? lo : sum / static_cast<double>(rows.size());

    const auto min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    if (constant || depth >= hp_.max_depth || rows.size() < 2 * min_leaf) return index;

    const auto split = best_split(rows, tree_.nodes[index].value);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[index].feature = split.feature;
    tree_.nodes[index].threshold = split.threshold;
    const int l = grow(std::move(left), depth + 1);
    tree_.nodes[index].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[index].right = r;
    return index;
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(x_.cols());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    if (rng_ != nullptr && hp_.max_features < d) {
      for (int i = 0; i < hp_.max_features; ++i) {
        const auto j = i + static_cast<int>(uniform_index(*rng_, static_cast<std::uint64_t>(d - i)));
        std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
      }
      features.resize(static_cast<std::size_t>(hp_.max_features));
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, double mean) {
    const std::size_t n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    std::vector<std::size_t> sorted(rows);
    std::vector<double> left_cost(n + 1), right_cost(n + 1);
    double parent = 0.0;

    SplitChoice best;
    bool have_parent = false;
    for (int f : candidate_features()) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f);
      });
      // left_cost[i]: impurity of the first i sorted samples; right_cost[i]: of the rest.
      if (hp_.criterion == SplitCriterion::variance_reduction) {
        double s = 0.0, ss = 0.0;
        left_cost[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double c = y_(static_cast<Eigen::Index>(sorted[i])) - mean;
          s += c;
          ss += c * c;
          left_cost[i + 1] = std::max(0.0, ss - s * s / static_cast<double>(i + 1));
        }
        s = 0.0;
        ss = 0.0;
        right_cost[n] = 0.0;
        for (std::size_t i = n; i-- > 0;) {
          const double c = y_(static_cast<Eigen::Index>(sorted[i])) - mean;
          s += c;
          ss += c * c;
          right_cost[i] = std::max(0.0, ss - s * s / static_cast<double>(n - i));
        }
      } else {
        RunningAbsDeviation forward_pass, backward_pass;
        left_cost[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          forward_pass.push(y_(static_cast<Eigen::Index>(sorted[i])));
          left_cost[i + 1] = forward_pass.value();
        }
        right_cost[n] = 0.0;
        for (std::size_t i = n; i-- > 0;) {
          backward_pass.push(y_(static_cast<Eigen::Index>(sorted[i])));
          right_cost[i] = backward_pass.value();
        }
      }
      if (!have_parent) {
        parent = right_cost[0];
        have_parent = true;
      }

      for (std::size_t i = min_leaf; i + min_leaf <= n; ++i) {
        const double a = x_(static_cast<Eigen::Index>(sorted[i - 1]), f);
        const double b = x_(static_cast<Eigen::Index>(sorted[i]), f);
        if (!(a < b)) continue;
        // Equal partitions reached through different features or sort orders
        // differ only by rounding; within the tolerance the earlier candidate stays.
        const double reduction = parent - left_cost[i] - right_cost[i];
        if (reduction > best.reduction + kTieTolerance * parent) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {f, mid, reduction};
        }
      }
    }
    return best;
  }

  const MatrixXd& x_;
  const VectorXd& y_;
  const TreeHyperParams& hp_;
  Rng* rng_;
  RegressionTree tree_;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::size_t> all_rows(Eigen::Index n) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

double RegressionTree::predict(const Eigen::Ref<const VectorXd>& x) const {
  if (nodes.empty()) throw ModelError("empty regression tree");
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  }
  return node->value;
}

VectorXd RegressionTree::predict_rows(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i).transpose());
  return out;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
    return n.is_leaf();
  }));
}

int RegressionTree::depth() const {
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    return node.is_leaf() ? 0 : 1 + std::max(walk(node.left), walk(node.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

RegressionTree fit_cart(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp) {
  return fit_cart(x, y, all_rows(x.rows()), hp, nullptr);
}

RegressionTree fit_cart(const MatrixXd& x, const VectorXd& y, const std::vector<std::size_t>& rows,
                        const TreeHyperParams& hp, Rng* rng) {
  hp.validate();
  if (x.rows() != y.size()) throw DomainError("fit_cart: input and target counts differ");
  if (rows.empty()) throw DomainError("fit_cart: no training samples");
  return CartBuilder(x, y, hp, rng).build(rows);
}

double ForestModel::predict(const Eigen::Ref<const VectorXd>& x) const {
  if (trees.empty()) throw ModelError("forest has no trees");
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(x);
  return sum / static_cast<double>(trees.size());
}

VectorXd ForestModel::predict_rows(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i).transpose());
  return out;
}

ForestModel fit_random_forest(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp, std::uint64_t seed,
                              unsigned jobs) {
  hp.validate();
  if (x.rows() == 0) throw DomainError("fit_random_forest: no training samples");
  ForestModel forest;
  forest.max_features = std::min<int>(hp.max_features, static_cast<int>(x.cols()));
  const auto n_trees = static_cast<std::size_t>(hp.n_trees);
  forest.trees.resize(n_trees);
  forest.tree_seeds.resize(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) forest.tree_seeds[t] = derive_seed(seed, "forest_tree", t);

  parallel_for(n_trees, jobs, [&](std::size_t t) {
    Rng rng(forest.tree_seeds[t]);
    std::vector<std::size_t> rows;
    if (hp.bootstrap) {
      rows.resize(static_cast<std::size_t>(x.rows()));
      for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(x.rows())));
    } else {
      rows = all_rows(x.rows());
    }
    forest.trees[t] = fit_cart(x, y, rows, hp, &rng);
  });
  return forest;
}

double BoostModel::predict(const Eigen::Ref<const VectorXd>& x) const {
  double value = initial;
  for (const auto& tree : trees) value += shrinkage * tree.predict(x);
  return value;
}

VectorXd BoostModel::predict_rows(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i).transpose());
  return out;
}

BoostModel fit_gradient_boost(const MatrixXd& x, const VectorXd& y, const TreeHyperParams& hp) {
  hp.validate();
  if (x.rows() == 0) throw DomainError("fit_gradient_boost: no training samples");
  BoostModel model;
  model.shrinkage = hp.shrinkage;
  model.initial = y.minCoeff() == y.maxCoeff() ? y(0) : y.mean();
  TreeHyperParams round_hp = hp;
  round_hp.criterion = SplitCriterion::variance_reduction;

  VectorXd fitted = VectorXd::Constant(y.size(), model.initial);
  const auto rows = all_rows(x.rows());
  for (int m = 0; m < hp.n_trees; ++m) {
    const VectorXd residual = y - fitted;
    auto tree = fit_cart(x, residual, rows, round_hp, nullptr);
    fitted += model.shrinkage * tree.predict_rows(x);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

VectorXd BaselineModel::predict(std::span<const DesignPoint> designs) const {
  const MatrixXd x = scaler.apply(designs).transpose();
  const VectorXd z = kind == BaselineKind::random_forest ? forest.predict_rows(x) : boost.predict_rows(x);
  return z.unaryExpr([&](double v) { return scaler.invert_target(v); });
}

BaselineModel fit_baseline(BaselineKind kind, const Dataset& train, const TreeHyperParams& hp, std::uint64_t seed,
                           TargetTransform transform, unsigned jobs) {
  BaselineModel model;
  model.kind = kind;
  model.hp = hp;
  model.scaler = fit_scaler(train, transform);
  const MatrixXd x = model.scaler.apply(train.inputs).transpose();
  const VectorXd y = model.scaler.apply_targets(train.targets);
  if (kind == BaselineKind::random_forest) {
    model.forest = fit_random_forest(x, y, hp, seed, jobs);
  } else {
    model.boost = fit_gradient_boost(x, y, hp);
  }
  return model;
}

GridSearchResult grid_search(BaselineKind kind, const Dataset& data, const std::vector<TreeHyperParams>& grid,
                             std::size_t k, std::uint64_t seed, TargetTransform transform, unsigned jobs) {
  if (grid.empty()) throw ConfigError("grid_search: empty grid");
  for (const auto& hp : grid) hp.validate();
  const auto folds = kfold(data.size(), k, derive_seed(seed, "grid_folds"));

  GridSearchResult result;
  result.table.reserve(grid.size());
  for (const auto& hp : grid) {
    double abs_sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto train_rows = folds.complement(f);
      const auto test_rows = folds.fold(f);
      const auto train = data.subset(train_rows);
      const auto test = data.subset(test_rows);
      const auto model = fit_baseline(kind, train, hp, derive_seed(seed, "grid_fit", f), transform, jobs);
      const VectorXd pred = model.predict(test.inputs);
      const auto dz = residuals(test.targets, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
      for (double v : dz) abs_sum += std::abs(v);
    }
    result.table.push_back({hp, abs_sum / static_cast<double>(data.size())});
  }

  const auto better = [](const GridCell& a, const GridCell& b) {
    if (a.cv_mean_abs_residual != b.cv_mean_abs_residual) return a.cv_mean_abs_residual < b.cv_mean_abs_residual;
    if (a.hp.n_trees != b.hp.n_trees) return a.hp.n_trees < b.hp.n_trees;
    return a.hp.max_depth < b.hp.max_depth;
  };
  result.best = std::min_element(result.table.begin(), result.table.end(), better)->hp;
  return result;
}

}  // namespace pvs
