#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "brute_cart.hpp"
#include "pvs/serialization.hpp"
#include "pvs/trees.hpp"
#include "support.hpp"

using namespace pvs;

namespace {

TreeHyperParams unlimited(SplitCriterion criterion = SplitCriterion::variance_reduction) {
  TreeHyperParams hp;
  hp.criterion = criterion;
  return hp;
}

// Random small problem; `grid` > 0 rounds features so duplicates occur.
std::pair<MatrixXd, VectorXd> random_problem(std::mt19937_64& rng, int n, int d, int grid) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd x(n, d);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = grid > 0 ? std::floor(u(rng) * grid) / grid : u(rng);
    y(i) = 10.0 * u(rng) - 3.0;
  }
  return {x, y};
}

Dataset oracle_data(std::size_t n, std::uint64_t seed) {
  return generate_dataset(sample_designs(DesignSpace{}, n, seed));
}

}  // namespace

TEST_CASE("degenerate trees") {
  MatrixXd x(5, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const VectorXd flat = VectorXd::Constant(5, 3.25);
  const auto tree = fit_cart(x, flat, unlimited());
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.predict(Eigen::Vector2d(100, -100)) == 3.25);

  const auto one = fit_cart(x.topRows(1), VectorXd::Constant(1, -7.5), unlimited());
  CHECK(one.nodes.size() == 1);
  CHECK(one.predict(Eigen::Vector2d(0, 0)) == -7.5);

  // Identical inputs with different targets cannot be split.
  MatrixXd same = MatrixXd::Ones(4, 2);
  const auto mean_leaf = fit_cart(same, (VectorXd(4) << 1, 2, 3, 6).finished(), unlimited());
  CHECK(mean_leaf.nodes.size() == 1);
  CHECK(mean_leaf.nodes[0].value == 3.0);

  CHECK_THROWS_AS(fit_cart(MatrixXd(0, 2), VectorXd(0), unlimited()), DomainError);
  TreeHyperParams bad;
  bad.max_depth = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.shrinkage = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stump") {
  MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  VectorXd y(4);
  y << 0, 0, 10, 10;
  TreeHyperParams hp;
  hp.max_depth = 1;
  for (auto criterion : {SplitCriterion::variance_reduction, SplitCriterion::mae_reduction}) {
    hp.criterion = criterion;
    const auto stump = fit_cart(x, y, hp);
    REQUIRE(stump.nodes.size() == 3);
    CHECK(stump.nodes[0].feature == 0);
    CHECK(stump.nodes[0].threshold == 1.5);
    CHECK(stump.predict(VectorXd::Constant(1, 0.5)) == 0.0);
    CHECK(stump.predict(VectorXd::Constant(1, 2.5)) == 10.0);
    CHECK(stump.predict(VectorXd::Constant(1, 1.5)) == 0.0);
  }
}

TEST_CASE("unlimited depth reproduces distinct training inputs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto [x, y] = random_problem(rng, 200, 4, 0);
    const auto tree = fit_cart(x, y, unlimited());
    CHECK(tree.predict_rows(x) == y);
    CHECK(tree.leaf_count() == 200);
    const auto mae = fit_cart(x, y, unlimited(SplitCriterion::mae_reduction));
    CHECK(mae.predict_rows(x) == y);
  }
}

TEST_CASE("small instances match exhaustive split search") {
  std::mt19937_64 rng(77);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const int d = 1 + static_cast<int>(rng() % 4);
    const int grid = trial % 3 == 0 ? 4 : 0;
    auto [x, y] = random_problem(rng, n, d, grid);
    TreeHyperParams hp;
    hp.max_depth = trial % 4 == 0 ? 2 : kUnlimitedDepth;
    hp.min_samples_leaf = trial % 5 == 0 ? 2 : 1;
    hp.criterion = trial % 2 == 0 ? SplitCriterion::variance_reduction : SplitCriterion::mae_reduction;
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    const auto tree = fit_cart(x, y, hp);
    const auto ref = test::brute_cart(x, y, rows, hp);
    CHECK(test::same_tree(tree, 0, ref, 1e-12));
    ++compared;
  }
  CHECK(compared == 200);
}

TEST_CASE("tree predictions are piecewise constant") {
  std::mt19937_64 rng(9);
  auto [x, y] = random_problem(rng, 300, 4, 0);
  TreeHyperParams hp;
  hp.max_depth = 5;
  const auto tree = fit_cart(x, y, hp);
  auto [probe, unused] = random_problem(rng, 2000, 4, 0);
  const VectorXd p = tree.predict_rows(probe);
  const std::set<double> distinct(p.data(), p.data() + p.size());
  CHECK(distinct.size() <= tree.leaf_count());
  CHECK(tree.depth() <= 5);
}

TEST_CASE("random forest") {
  std::mt19937_64 rng(3);
  auto [x, y] = random_problem(rng, 150, 4, 0);

  TreeHyperParams plain;
  plain.n_trees = 1;
  plain.bootstrap = false;
  plain.max_features = 4;
  const auto forest = fit_random_forest(x, y, plain, 5);
  CHECK(forest.trees.front().nodes == fit_cart(x, y, plain).nodes);

  TreeHyperParams hp;
  hp.n_trees = 25;
  hp.max_features = 2;
  hp.max_depth = 6;
  const auto a = fit_random_forest(x, y, hp, 8, 1);
  const auto b = fit_random_forest(x, y, hp, 8, 3);
  REQUIRE(a.trees.size() == 25);
  for (std::size_t t = 0; t < a.trees.size(); ++t) CHECK(a.trees[t].nodes == b.trees[t].nodes);
  CHECK(a.tree_seeds == b.tree_seeds);

  auto [probe, unused] = random_problem(rng, 50, 4, 0);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    double sum = 0.0;
    for (const auto& tree : a.trees) sum += tree.predict(probe.row(i).transpose());
    CHECK(a.predict(probe.row(i).transpose()) == sum / 25.0);
  }

  const auto flat = fit_random_forest(x, VectorXd::Constant(150, 2.0), hp, 1);
  CHECK((flat.predict_rows(probe).array() == 2.0).all());
}

TEST_CASE("gradient boosting") {
  std::mt19937_64 rng(4);
  auto [x, y] = random_problem(rng, 120, 4, 0);

  TreeHyperParams exact;
  exact.n_trees = 1;
  exact.shrinkage = 1.0;
  const auto one = fit_gradient_boost(x, y, exact);
  CHECK(((one.predict_rows(x) - y).array().abs() < 1e-12).all());
  CHECK(one.initial == doctest::Approx(y.mean()).epsilon(1e-15));

  TreeHyperParams hp;
  hp.n_trees = 40;
  hp.max_depth = 2;
  hp.shrinkage = 0.3;
  const auto model = fit_gradient_boost(x, y, hp);
  VectorXd fitted = VectorXd::Constant(y.size(), model.initial);
  double previous = (y - fitted).squaredNorm();
  for (const auto& tree : model.trees) {
    fitted += model.shrinkage * tree.predict_rows(x);
    const double loss = (y - fitted).squaredNorm();
    CHECK(loss <= previous * (1 + 1e-12));
    previous = loss;
  }
  CHECK(((model.predict_rows(x) - fitted).array().abs() < 1e-12).all());

  TreeHyperParams tiny = hp;
  tiny.shrinkage = 1e-9;
  const auto frozen = fit_gradient_boost(x, y, tiny);
  CHECK(((frozen.predict_rows(x).array() - frozen.initial).abs() < 1e-6).all());

  const auto flat = fit_gradient_boost(x, VectorXd::Constant(120, -4.0), hp);
  CHECK(flat.initial == -4.0);
  for (const auto& tree : flat.trees) {
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].value == 0.0);
  }
}

TEST_CASE("grid search") {
  const auto data = oracle_data(400, 6);
  TreeHyperParams weak;
  weak.n_trees = 1;
  weak.max_depth = 1;
  TreeHyperParams strong;
  strong.n_trees = 100;
  strong.max_depth = 8;

  const auto single = grid_search(BaselineKind::random_forest, data, {strong}, 3, 1, TargetTransform::standard);
  CHECK(single.best.n_trees == 100);
  CHECK(single.table.size() == 1);

  const auto pick = grid_search(BaselineKind::random_forest, data, {weak, strong}, 3, 1, TargetTransform::standard);
  CHECK(pick.best.n_trees == 100);
  CHECK(pick.best.max_depth == 8);
  CHECK(pick.table[0].cv_mean_abs_residual > pick.table[1].cv_mean_abs_residual);

  const auto again = grid_search(BaselineKind::random_forest, data, {weak, strong}, 3, 1, TargetTransform::standard);
  CHECK(again.table[1].cv_mean_abs_residual == pick.table[1].cv_mean_abs_residual);

  TreeHyperParams boost_hp;
  boost_hp.n_trees = 50;
  boost_hp.max_depth = 3;
  const auto boost = grid_search(BaselineKind::gradient_boost, data, {boost_hp}, 3, 1, TargetTransform::standard);
  CHECK(boost.table[0].cv_mean_abs_residual > 0.0);

  // Without bootstrap every tree is the same CART, so 1 and 2 trees tie
  // exactly and the smaller forest wins; equal forests tie on depth next.
  TreeHyperParams one_tree;
  one_tree.n_trees = 1;
  one_tree.bootstrap = false;
  one_tree.max_depth = 3;
  TreeHyperParams two_trees = one_tree;
  two_trees.n_trees = 2;
  const auto tie = grid_search(BaselineKind::random_forest, data, {two_trees, one_tree}, 3, 1,
                               TargetTransform::standard);
  CHECK(tie.table[0].cv_mean_abs_residual == tie.table[1].cv_mean_abs_residual);
  CHECK(tie.best.n_trees == 1);

  TreeHyperParams saturated = one_tree;
  saturated.max_depth = 40;
  TreeHyperParams deeper = one_tree;
  deeper.max_depth = 60;
  const auto depth_tie = grid_search(BaselineKind::random_forest, data, {deeper, saturated}, 3, 1,
                                     TargetTransform::standard);
  CHECK(depth_tie.table[0].cv_mean_abs_residual == depth_tie.table[1].cv_mean_abs_residual);
  CHECK(depth_tie.best.max_depth == 40);

  CHECK_THROWS_AS(grid_search(BaselineKind::random_forest, data, {}, 3, 1, TargetTransform::standard), ConfigError);
}

TEST_CASE("baseline model files") {
  test::TempDir dir;
  const auto data = oracle_data(300, 7);
  const auto designs = sample_designs(DesignSpace{}, 100, 70);
  TreeHyperParams hp;
  hp.n_trees = 10;
  hp.max_depth = 6;
  for (auto kind : {BaselineKind::random_forest, BaselineKind::gradient_boost}) {
    const auto model = fit_baseline(kind, data, hp, 3, TargetTransform::standard);
    save(model, dir / "baseline.json");
    const auto loaded = load_baseline(dir / "baseline.json");
    CHECK(model.predict(designs) == loaded.predict(designs));
    CHECK(baseline_to_string(loaded) == baseline_to_string(model));
  }
  TreeHyperParams deep;
  deep.n_trees = 3;
  const auto unlimited_model = fit_baseline(BaselineKind::random_forest, data, deep, 3, TargetTransform::log_standard);
  const auto back = baseline_from_string(baseline_to_string(unlimited_model));
  CHECK(back.hp.max_depth == kUnlimitedDepth);
  CHECK(back.predict(designs) == unlimited_model.predict(designs));

  CHECK_THROWS_AS(baseline_from_string("{\"format\": \"pvsurrogate-baseline\""), IoError);
  CHECK_THROWS_AS(load_baseline(dir / "none.json"), IoError);
}

TEST_CASE("criterion names") {
  CHECK(parse_split_criterion("mse") == SplitCriterion::variance_reduction);
  CHECK(parse_split_criterion("mae_reduction") == SplitCriterion::mae_reduction);
  CHECK(to_string(SplitCriterion::mae_reduction) == "mae_reduction");
  CHECK_THROWS_AS(parse_split_criterion("gini"), ConfigError);
}
