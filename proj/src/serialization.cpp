// Text model files. Doubles are written by nlohmann::json in shortest
// round-trip form, so loading reproduces every parameter bit for bit.

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pvs/ensemble.hpp"
#include "pvs/serialization.hpp"
#include "pvs/trees.hpp"

namespace pvs {

using nlohmann::json;

namespace {

constexpr const char* kEnsembleFormat = "pvsurrogate-ensemble";
constexpr const char* kBaselineFormat = "pvsurrogate-baseline";
constexpr int kFormatVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw IoError("model file: " + path + ": " + what);
}

const json& field(const json& node, const std::string& key, const std::string& path) {
  if (!node.is_object()) fail(path, "expected an object");
  const auto it = node.find(key);
  if (it == node.end()) fail(path + "." + key, "missing");
  return *it;
}

double number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  return node.get<double>();
}

std::int64_t integer(const json& node, const std::string& path) {
  if (!node.is_number_integer()) fail(path, "expected an integer");
  return node.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const json& node, const std::string& path) {
  if (!node.is_number_unsigned() && !(node.is_number_integer() && node.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return node.get<std::uint64_t>();
}

std::string text(const json& node, const std::string& path) {
  if (!node.is_string()) fail(path, "expected a string");
  return node.get<std::string>();
}

const json& array(const json& node, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
  if (!node.is_array()) fail(path, "expected an array");
  if (size && node.size() != *size) {
    fail(path, "expected " + std::to_string(*size) + " entries, found " + std::to_string(node.size()));
  }
  return node;
}

std::vector<double> numbers(const json& node, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
  array(node, path, size);
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename Derived>
json to_array(const Eigen::DenseBase<Derived>& values) {
  json out = json::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values(i));
  return out;
}

json history_json(const TrainHistory& h) {
  return {{"train_loss", h.train_loss}, {"val_loss", h.val_loss}, {"best_epoch", h.best_epoch},
          {"best_val_loss", h.best_val_loss}};
}

TrainHistory history_from(const json& node, const std::string& path) {
  TrainHistory h;
  h.train_loss = numbers(field(node, "train_loss", path), path + ".train_loss");
  h.val_loss = numbers(field(node, "val_loss", path), path + ".val_loss");
  h.best_epoch = static_cast<int>(integer(field(node, "best_epoch", path), path + ".best_epoch"));
  h.best_val_loss = number(field(node, "best_val_loss", path), path + ".best_val_loss");
  return h;
}

json network_layers_json(const NetworkParameters& params) {
  json layers = json::array();
  for (const auto& layer : params.layers) {
    // Row-major weights.
    json weights = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) weights.push_back(layer.weight(r, c));
    }
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weight", std::move(weights)},
                      {"bias", to_array(layer.bias)}});
  }
  return layers;
}

NetworkParameters network_from(const Architecture& arch, const json& node, const std::string& path) {
  auto params = zero_network<double>(arch);
  array(node, path);
  if (node.size() != params.layers.size()) {
    fail(path, "shape mismatch: architecture has " + std::to_string(params.layers.size()) + " layers, file has " +
                   std::to_string(node.size()));
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const std::string at = path + "[" + std::to_string(l) + "]";
    auto& layer = params.layers[l];
    const auto rows = integer(field(node[l], "rows", at), at + ".rows");
    const auto cols = integer(field(node[l], "cols", at), at + ".cols");
    if (rows != layer.weight.rows() || cols != layer.weight.cols()) {
      fail(at, "shape mismatch: expected " + std::to_string(layer.weight.rows()) + "x" +
                   std::to_string(layer.weight.cols()) + ", found " + std::to_string(rows) + "x" +
                   std::to_string(cols));
    }
    const auto w = numbers(field(node[l], "weight", at), at + ".weight", static_cast<std::size_t>(rows * cols));
    const auto b = numbers(field(node[l], "bias", at), at + ".bias", static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      layer.bias(r) = b[static_cast<std::size_t>(r)];
    }
  }
  return params;
}

json tree_json(const RegressionTree& tree, int index = 0) {
  const auto& node = tree.nodes.at(static_cast<std::size_t>(index));
  if (node.is_leaf()) return {{"value", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"value", node.value},
          {"left", tree_json(tree, node.left)},
          {"right", tree_json(tree, node.right)}};
}

int tree_from(const json& node, const std::string& path, RegressionTree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  const double value = number(field(node, "value", path), path + ".value");
  tree.nodes[static_cast<std::size_t>(index)].value = value;
  if (node.contains("feature")) {
    const auto feature = integer(node["feature"], path + ".feature");
    if (feature < 0 || feature >= kNumFeatures) fail(path + ".feature", "out of range");
    const double threshold = number(field(node, "threshold", path), path + ".threshold");
    const int left = tree_from(field(node, "left", path), path + ".left", tree);
    const int right = tree_from(field(node, "right", path), path + ".right", tree);
    auto& n = tree.nodes[static_cast<std::size_t>(index)];
    n.feature = static_cast<int>(feature);
    n.threshold = threshold;
    n.left = left;
    n.right = right;
  }
  return index;
}

json trees_json(const std::vector<RegressionTree>& trees) {
  json out = json::array();
  for (const auto& tree : trees) out.push_back(tree_json(tree));
  return out;
}

std::vector<RegressionTree> trees_from(const json& node, const std::string& path) {
  array(node, path);
  std::vector<RegressionTree> trees(node.size());
  for (std::size_t t = 0; t < node.size(); ++t) tree_from(node[t], path + "[" + std::to_string(t) + "]", trees[t]);
  return trees;
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void check_format(const json& root, const char* expected) {
  const auto format = text(field(root, "format", "$"), "$.format");
  if (format != expected) fail("$.format", "expected '" + std::string(expected) + "', found '" + format + "'");
  const auto version = integer(field(root, "version", "$"), "$.version");
  if (version != kFormatVersion) fail("$.version", "unsupported version " + std::to_string(version));
}

json architecture_json(const Architecture& arch) {
  json skips = json::array();
  for (const auto& s : arch.skip_spans) skips.push_back({s.from, s.to});
  return {{"input_dim", arch.input_dim},
          {"hidden_widths", arch.hidden_widths},
          {"dropout_rate", arch.dropout_rate},
          {"dropout_after", arch.dropout_after},
          {"skip_spans", std::move(skips)}};
}

Architecture architecture_from(const json& node, const std::string& path) {
  Architecture arch;
  arch.input_dim = static_cast<int>(integer(field(node, "input_dim", path), path + ".input_dim"));
  const auto& widths = array(field(node, "hidden_widths", path), path + ".hidden_widths");
  arch.hidden_widths.clear();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    arch.hidden_widths.push_back(static_cast<int>(integer(widths[i], path + ".hidden_widths[" + std::to_string(i) + "]")));
  }
  arch.dropout_rate = number(field(node, "dropout_rate", path), path + ".dropout_rate");
  const auto& dropout = array(field(node, "dropout_after", path), path + ".dropout_after");
  arch.dropout_after.clear();
  for (std::size_t i = 0; i < dropout.size(); ++i) {
    arch.dropout_after.push_back(static_cast<int>(integer(dropout[i], path + ".dropout_after[" + std::to_string(i) + "]")));
  }
  const auto& skips = array(field(node, "skip_spans", path), path + ".skip_spans");
  arch.skip_spans.clear();
  for (std::size_t i = 0; i < skips.size(); ++i) {
    const std::string at = path + ".skip_spans[" + std::to_string(i) + "]";
    array(skips[i], at, 2);
    arch.skip_spans.push_back({static_cast<int>(integer(skips[i][0], at + "[0]")),
                               static_cast<int>(integer(skips[i][1], at + "[1]"))});
  }
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return arch;
}

json scaler_json(const Scaler& scaler) {
  return {{"input_min", to_array(scaler.input_min)},
          {"input_max", to_array(scaler.input_max)},
          {"target_transform", to_string(scaler.transform)},
          {"target_mean", scaler.target_mean},
          {"target_std", scaler.target_std}};
}

Scaler scaler_from(const json& node, const std::string& path) {
  Scaler scaler;
  const auto lo = numbers(field(node, "input_min", path), path + ".input_min", kNumFeatures);
  const auto hi = numbers(field(node, "input_max", path), path + ".input_max", kNumFeatures);
  for (int j = 0; j < kNumFeatures; ++j) {
    scaler.input_min(j) = lo[static_cast<std::size_t>(j)];
    scaler.input_max(j) = hi[static_cast<std::size_t>(j)];
    if (!(scaler.input_max(j) > scaler.input_min(j))) fail(path + ".input_max", "must exceed input_min");
  }
  try {
    scaler.transform = parse_target_transform(text(field(node, "target_transform", path), path + ".target_transform"));
  } catch (const ConfigError& e) {
    fail(path + ".target_transform", e.what());
  }
  scaler.target_mean = number(field(node, "target_mean", path), path + ".target_mean");
  scaler.target_std = number(field(node, "target_std", path), path + ".target_std");
  if (!(scaler.target_std > 0.0)) fail(path + ".target_std", "must be > 0");
  return scaler;
}

}  // namespace

std::string ensemble_to_string(const EnsembleModel& model) {
  json root;
  root["format"] = kEnsembleFormat;
  root["version"] = kFormatVersion;
  root["k"] = model.k();
  root["master_seed"] = model.master_seed;
  root["parameter_count"] = param_count(model.arch);
  root["architecture"] = architecture_json(model.arch);
  root["scaler"] = scaler_json(model.scaler);
  root["train_config"] = {{"max_epochs", model.train_config.max_epochs},
                          {"batch_size", model.train_config.batch_size},
                          {"patience", model.train_config.patience},
                          {"learning_rate", model.train_config.learning_rate},
                          {"seed", model.train_config.seed}};
  root["folds"] = {{"k", model.folds.k}, {"membership", model.folds.membership}};
  if (model.split) {
    root["split"] = {{"source_size", model.split->source_size},
                     {"n_train", model.split->n_train},
                     {"seed", model.split->seed},
                     {"test_indices", model.split->test_indices}};
  }
  json members = json::array();
  for (std::size_t m = 0; m < model.k(); ++m) {
    json member = {{"layers", network_layers_json(model.members[m])}};
    if (m < model.records.size()) {
      const auto& rec = model.records[m];
      member["seed"] = rec.seed;
      member["fit_size"] = rec.fit_size;
      member["val_size"] = rec.val_size;
      member["history"] = history_json(rec.history);
    }
    members.push_back(std::move(member));
  }
  root["members"] = std::move(members);
  return root.dump(1) + "\n";
}

EnsembleModel ensemble_from_string(const std::string& contents) {
  json root;
  try {
    root = json::parse(contents);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("model file is not valid JSON: ") + e.what());
  }
  check_format(root, kEnsembleFormat);

  EnsembleModel model;
  model.arch = architecture_from(field(root, "architecture", "$"), "$.architecture");
  model.scaler = scaler_from(field(root, "scaler", "$"), "$.scaler");
  model.master_seed = unsigned_integer(field(root, "master_seed", "$"), "$.master_seed");

  const auto& tc = field(root, "train_config", "$");
  model.train_config.max_epochs = static_cast<int>(integer(field(tc, "max_epochs", "$.train_config"), "$.train_config.max_epochs"));
  model.train_config.batch_size = static_cast<int>(integer(field(tc, "batch_size", "$.train_config"), "$.train_config.batch_size"));
  model.train_config.patience = static_cast<int>(integer(field(tc, "patience", "$.train_config"), "$.train_config.patience"));
  model.train_config.learning_rate = number(field(tc, "learning_rate", "$.train_config"), "$.train_config.learning_rate");
  model.train_config.seed = unsigned_integer(field(tc, "seed", "$.train_config"), "$.train_config.seed");

  const auto& folds = field(root, "folds", "$");
  model.folds.k = unsigned_integer(field(folds, "k", "$.folds"), "$.folds.k");
  const auto& membership = array(field(folds, "membership", "$.folds"), "$.folds.membership");
  model.folds.membership.reserve(membership.size());
  for (std::size_t i = 0; i < membership.size(); ++i) {
    model.folds.membership.push_back(unsigned_integer(membership[i], "$.folds.membership[" + std::to_string(i) + "]"));
  }

  if (root.contains("split")) {
    const auto& s = root["split"];
    SplitRecord split;
    split.source_size = unsigned_integer(field(s, "source_size", "$.split"), "$.split.source_size");
    split.n_train = unsigned_integer(field(s, "n_train", "$.split"), "$.split.n_train");
    split.seed = unsigned_integer(field(s, "seed", "$.split"), "$.split.seed");
    const auto& idx = array(field(s, "test_indices", "$.split"), "$.split.test_indices");
    for (std::size_t i = 0; i < idx.size(); ++i) {
      split.test_indices.push_back(unsigned_integer(idx[i], "$.split.test_indices[" + std::to_string(i) + "]"));
    }
    model.split = std::move(split);
  }

  const auto k = unsigned_integer(field(root, "k", "$"), "$.k");
  const auto& members = array(field(root, "members", "$"), "$.members");
  if (members.size() != k || k == 0) {
    fail("$.members", "expected " + std::to_string(k) + " members, found " + std::to_string(members.size()));
  }
  for (std::size_t m = 0; m < members.size(); ++m) {
    const std::string at = "$.members[" + std::to_string(m) + "]";
    model.members.push_back(network_from(model.arch, field(members[m], "layers", at), at + ".layers"));
    MemberRecord rec;
    if (members[m].contains("seed")) {
      rec.seed = unsigned_integer(members[m]["seed"], at + ".seed");
      rec.fit_size = unsigned_integer(field(members[m], "fit_size", at), at + ".fit_size");
      rec.val_size = unsigned_integer(field(members[m], "val_size", at), at + ".val_size");
      rec.history = history_from(field(members[m], "history", at), at + ".history");
    }
    model.records.push_back(std::move(rec));
  }
  return model;
}

void save(const EnsembleModel& model, const std::filesystem::path& path) {
  write_text(path, ensemble_to_string(model));
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ensemble_from_string(buffer.str());
}

static json hyperparams_json(const TreeHyperParams& hp) {
  return {{"max_depth", hp.max_depth == kUnlimitedDepth ? json(nullptr) : json(hp.max_depth)},
          {"min_samples_leaf", hp.min_samples_leaf},
          {"criterion", to_string(hp.criterion)},
          {"n_trees", hp.n_trees},
          {"max_features", hp.max_features},
          {"bootstrap", hp.bootstrap},
          {"shrinkage", hp.shrinkage}};
}

static TreeHyperParams hyperparams_from(const json& node, const std::string& path) {
  TreeHyperParams hp;
  const auto& depth = field(node, "max_depth", path);
  hp.max_depth = depth.is_null() ? kUnlimitedDepth : static_cast<int>(integer(depth, path + ".max_depth"));
  hp.min_samples_leaf = static_cast<int>(integer(field(node, "min_samples_leaf", path), path + ".min_samples_leaf"));
  try {
    hp.criterion = parse_split_criterion(text(field(node, "criterion", path), path + ".criterion"));
  } catch (const ConfigError& e) {
    fail(path + ".criterion", e.what());
  }
  hp.n_trees = static_cast<int>(integer(field(node, "n_trees", path), path + ".n_trees"));
  hp.max_features = static_cast<int>(integer(field(node, "max_features", path), path + ".max_features"));
  const auto& bootstrap = field(node, "bootstrap", path);
  if (!bootstrap.is_boolean()) fail(path + ".bootstrap", "expected a boolean");
  hp.bootstrap = bootstrap.get<bool>();
  hp.shrinkage = number(field(node, "shrinkage", path), path + ".shrinkage");
  return hp;
}

std::string baseline_to_string(const BaselineModel& model) {
  json root;
  root["format"] = kBaselineFormat;
  root["version"] = kFormatVersion;
  root["kind"] = model.kind == BaselineKind::random_forest ? "random_forest" : "gradient_boost";
  root["scaler"] = scaler_json(model.scaler);
  root["hyperparams"] = hyperparams_json(model.hp);
  if (model.kind == BaselineKind::random_forest) {
    root["forest"] = {{"max_features", model.forest.max_features},
                      {"tree_seeds", model.forest.tree_seeds},
                      {"trees", trees_json(model.forest.trees)}};
  } else {
    root["boost"] = {{"initial", model.boost.initial},
                     {"shrinkage", model.boost.shrinkage},
                     {"trees", trees_json(model.boost.trees)}};
  }
  return root.dump(1) + "\n";
}

BaselineModel baseline_from_string(const std::string& contents) {
  json root;
  try {
    root = json::parse(contents);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("model file is not valid JSON: ") + e.what());
  }
  check_format(root, kBaselineFormat);
  BaselineModel model;
  const auto kind = text(field(root, "kind", "$"), "$.kind");
  if (kind == "random_forest") {
    model.kind = BaselineKind::random_forest;
  } else if (kind == "gradient_boost") {
    model.kind = BaselineKind::gradient_boost;
  } else {
    fail("$.kind", "unknown baseline kind '" + kind + "'");
  }
  model.scaler = scaler_from(field(root, "scaler", "$"), "$.scaler");
  model.hp = hyperparams_from(field(root, "hyperparams", "$"), "$.hyperparams");
  if (model.kind == BaselineKind::random_forest) {
    const auto& forest = field(root, "forest", "$");
    model.forest.max_features = static_cast<int>(integer(field(forest, "max_features", "$.forest"), "$.forest.max_features"));
    const auto& seeds = array(field(forest, "tree_seeds", "$.forest"), "$.forest.tree_seeds");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      model.forest.tree_seeds.push_back(unsigned_integer(seeds[i], "$.forest.tree_seeds[" + std::to_string(i) + "]"));
    }
    model.forest.trees = trees_from(field(forest, "trees", "$.forest"), "$.forest.trees");
    if (model.forest.trees.empty()) fail("$.forest.trees", "forest has no trees");
  } else {
    const auto& boost = field(root, "boost", "$");
    model.boost.initial = number(field(boost, "initial", "$.boost"), "$.boost.initial");
    model.boost.shrinkage = number(field(boost, "shrinkage", "$.boost"), "$.boost.shrinkage");
    model.boost.trees = trees_from(field(boost, "trees", "$.boost"), "$.boost.trees");
  }
  return model;
}

void save(const BaselineModel& model, const std::filesystem::path& path) {
  write_text(path, baseline_to_string(model));
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return baseline_from_string(buffer.str());
}

}  // namespace pvs
