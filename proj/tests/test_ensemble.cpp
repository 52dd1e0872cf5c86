#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "pvs/ensemble.hpp"
#include "pvs/serialization.hpp"
#include "support.hpp"

using namespace pvs;

namespace {

Architecture small_arch() {
  Architecture arch;
  arch.hidden_widths.assign(kHiddenLayers, 8);
  return arch;
}

TrainConfig quick_config(std::uint64_t seed) {
  TrainConfig config;
  config.max_epochs = 15;
  config.patience = 5;
  config.batch_size = 32;
  config.seed = seed;
  return config;
}

Dataset oracle_data(std::size_t n, std::uint64_t seed) {
  return generate_dataset(sample_designs(DesignSpace{}, n, seed));
}

// Member that outputs the constant `z` in standardised units.
NetworkParameters constant_member(const Architecture& arch, double z) {
  auto params = zero_network(arch);
  params.layers.back().bias(0) = z;
  return params;
}

EnsembleModel hand_model(const std::vector<NetworkParameters>& members) {
  EnsembleModel model;
  model.arch = members.front().arch;
  model.scaler.input_min = Vector4d(100, 0.1, 0.002, 0.05);
  model.scaler.input_max = Vector4d(6000, 2, 0.06, 0.5);
  model.scaler.target_mean = 2.5e8;
  model.scaler.target_std = 1.5e8;
  model.members = members;
  return model;
}

std::vector<DesignPoint> probe_designs(std::size_t n, std::uint64_t seed) {
  return sample_designs(DesignSpace{}, n, seed);
}

}  // namespace

TEST_CASE("member split sizes") {
  const auto folds = kfold(8000, 5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto split = member_split(folds, i, 7);
    CHECK(split.fit.size() == 5760);
    CHECK(split.validation.size() == 640);

    const auto held_out = folds.fold(i);
    const std::set<std::size_t> excluded(held_out.begin(), held_out.end());
    for (auto idx : split.fit) CHECK(excluded.count(idx) == 0);
    for (auto idx : split.validation) CHECK(excluded.count(idx) == 0);

    std::set<std::size_t> both(split.fit.begin(), split.fit.end());
    both.insert(split.validation.begin(), split.validation.end());
    CHECK(both.size() == 6400);
  }
  const FoldAssignment single{1, std::vector<std::size_t>(8000, 0)};
  const auto all = member_split(single, 0, 7);
  CHECK(all.fit.size() == 7200);
  CHECK(all.validation.size() == 800);
}

TEST_CASE("hand-built ensembles") {
  const auto arch = small_arch();
  const auto member = init_network(arch, 4);
  const auto designs = probe_designs(20, 1);

  const auto single = hand_model({member});
  const VectorXd alone = predict(single, designs);
  // Sums of 2 or 4 equal values divide back exactly; 3 rounds in the last bit.
  CHECK(predict(hand_model({member, member}), designs) == alone);
  CHECK(predict(hand_model({member, member, member, member}), designs) == alone);
  const VectorXd triple = predict(hand_model({member, member, member}), designs);
  CHECK(((triple - alone).array().abs() / alone.array().abs()).maxCoeff() < 1e-15);

  const auto opposed = hand_model({constant_member(arch, 1.0), constant_member(arch, -1.0)});
  for (const auto& d : designs) CHECK(predict(opposed, d) == 2.5e8);

  auto broken = hand_model({member, constant_member(arch, 0.0)});
  broken.members[1].layers.back().bias(0) = std::numeric_limits<double>::infinity();
  try {
    predict(broken, designs);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("member 1") != std::string::npos);
  }
  CHECK_THROWS_AS(predict(single, DesignPoint{100, 1, 0.3, 0.2}), DomainError);
}

TEST_CASE("prediction is the mean of the members") {
  const auto data = oracle_data(300, 2);
  for (auto transform : {TargetTransform::standard, TargetTransform::log_standard}) {
    const auto model = train_ensemble(data, 3, small_arch(), quick_config(5), transform);
    REQUIRE(model.k() == 3);
    const auto designs = probe_designs(100, 6);
    const VectorXd combined = predict(model, designs);
    const MatrixXd per_member = member_predictions(model, designs);
    REQUIRE(per_member.rows() == 3);

    for (std::size_t i = 0; i < designs.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Vector4d x = model.scaler.apply(designs[i]);
      double z = 0.0;
      for (const auto& m : model.members) z += forward(m, x);
      CHECK(combined(col) == model.scaler.invert_target(z / 3.0));
      CHECK(combined(col) >= per_member.col(col).minCoeff() * (1 - 1e-12));
      CHECK(combined(col) <= per_member.col(col).maxCoeff() * (1 + 1e-12));
      if (transform == TargetTransform::standard) {
        CHECK(combined(col) == doctest::Approx(per_member.col(col).mean()).epsilon(1e-12));
      }
      CHECK(predict(model, designs[i]) == combined(col));
    }
  }
}

TEST_CASE("training metadata and determinism") {
  const auto data = oracle_data(250, 3);
  const auto a = train_ensemble(data, 5, small_arch(), quick_config(11), TargetTransform::standard, 1);
  const auto b = train_ensemble(data, 5, small_arch(), quick_config(11), TargetTransform::standard, 3);
  CHECK(ensemble_to_string(a) == ensemble_to_string(b));

  const auto c = train_ensemble(data, 5, small_arch(), quick_config(12));
  CHECK(ensemble_to_string(a) != ensemble_to_string(c));

  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.records[i].fit_size == 180);
    CHECK(a.records[i].val_size == 20);
    seeds.insert(a.records[i].seed);
  }
  CHECK(seeds.size() == 5);

  const auto fitted = fit_scaler(data);
  CHECK(a.scaler.input_min == fitted.input_min);
  CHECK(a.scaler.target_mean == fitted.target_mean);

  const auto one = train_ensemble(data, 1, small_arch(), quick_config(11));
  CHECK(one.k() == 1);
  CHECK(one.records[0].fit_size == 225);
  CHECK(one.records[0].val_size == 25);

  CHECK_THROWS_AS(train_ensemble(data, 30, small_arch(), quick_config(1)), ConfigError);
  CHECK_THROWS_AS(train_ensemble(data, 0, small_arch(), quick_config(1)), ConfigError);
}

TEST_CASE("model file round trip") {
  test::TempDir dir;
  const auto data = oracle_data(200, 4);
  auto model = train_ensemble(data, 2, small_arch(), quick_config(21), TargetTransform::log_standard);
  model.split = SplitRecord{260, 200, 99, {3, 17, 250}};
  save(model, dir / "model.json");
  const auto loaded = load_ensemble(dir / "model.json");

  const auto designs = probe_designs(100, 8);
  const VectorXd before = predict(model, designs);
  const VectorXd after = predict(loaded, designs);
  for (Eigen::Index i = 0; i < before.size(); ++i) CHECK(before(i) == after(i));

  CHECK(loaded.arch == model.arch);
  CHECK(loaded.scaler.transform == TargetTransform::log_standard);
  CHECK(loaded.folds.membership == model.folds.membership);
  CHECK(loaded.records[1].history.val_loss == model.records[1].history.val_loss);
  REQUIRE(loaded.split.has_value());
  CHECK(loaded.split->test_indices == std::vector<std::size_t>{3, 17, 250});
  CHECK(ensemble_to_string(loaded) == ensemble_to_string(model));
}

TEST_CASE("corrupt model files") {
  test::TempDir dir;
  const auto data = oracle_data(100, 5);
  const auto model = train_ensemble(data, 2, small_arch(), quick_config(2));
  const std::string text = ensemble_to_string(model);

  auto load_text = [&](const std::string& contents) {
    std::ofstream(dir / "bad.json", std::ios::binary) << contents;
    try {
      load_ensemble(dir / "bad.json");
    } catch (const IoError& e) {
      return std::string(e.what());
    }
    return std::string("loaded");
  };

  CHECK(load_text(text.substr(0, text.size() / 2)) != "loaded");
  CHECK(load_text("") != "loaded");
  CHECK_THROWS_AS(load_ensemble(dir / "missing.json"), IoError);

  auto doc = nlohmann::json::parse(text);
  doc["members"][1]["layers"][2]["rows"] = 9;
  CHECK(load_text(doc.dump()).find("members[1].layers[2]") != std::string::npos);

  doc = nlohmann::json::parse(text);
  doc["members"][0]["layers"][3]["weight"][5] = "x";
  CHECK(load_text(doc.dump()).find("members[0].layers[3].weight[5]") != std::string::npos);

  doc = nlohmann::json::parse(text);
  doc["architecture"]["hidden_widths"][0] = 16;
  CHECK(load_text(doc.dump()) != "loaded");

  doc = nlohmann::json::parse(text);
  doc["members"][0]["layers"].erase(6);
  CHECK(load_text(doc.dump()).find("shape mismatch") != std::string::npos);

  doc = nlohmann::json::parse(text);
  doc["format"] = "something-else";
  CHECK(load_text(doc.dump()) != "loaded");
}
