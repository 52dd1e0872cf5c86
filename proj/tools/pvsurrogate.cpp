// pvsurrogate: generate oracle data, train the deep-ensemble stress surrogate,
// benchmark it against tree baselines, and query it.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvs/commands.hpp"

namespace {

std::vector<pvs::SkipSpan> parse_skips(const std::vector<std::string>& specs) {
  std::vector<pvs::SkipSpan> spans;
  for (const auto& spec : specs) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw pvs::ConfigError("skip span '" + spec + "' must look like FROM:TO");
    try {
      spans.push_back({std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1))});
    } catch (const std::exception&) {
      throw pvs::ConfigError("skip span '" + spec + "' must look like FROM:TO");
    }
  }
  return spans;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-ensemble surrogate for the maximum von Mises stress of sub-sea pressure vessels"};
  app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  pvs::RunConfig config;
  std::string out;
  std::string sampling = "uniform";
  std::string target_transform = "standard";
  std::vector<std::string> skips = {"1:3", "3:5"};
  std::vector<std::string> csv_columns(config.columns.names.begin(), config.columns.names.end());
  std::vector<double> csv_scales(config.columns.scale.begin(), config.columns.scale.end());
  int max_epochs = config.train.max_epochs;

  app.add_option("--seed", config.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", config.jobs, "Worker threads")->capture_default_str();
  app.add_option("--out", out, "Output path");

  auto* space = "Design space";
  app.add_option("--depth-min", config.space.depth.lower, "Sea depth lower bound [m]")->group(space)->capture_default_str();
  app.add_option("--depth-max", config.space.depth.upper, "Sea depth upper bound [m]")->group(space)->capture_default_str();
  app.add_option("--length-min", config.space.length.lower, "Cylinder length lower bound [m]")->group(space)->capture_default_str();
  app.add_option("--length-max", config.space.length.upper, "Cylinder length upper bound [m]")->group(space)->capture_default_str();
  app.add_option("--thickness-min", config.space.thickness.lower, "Wall thickness lower bound [m]")->group(space)->capture_default_str();
  app.add_option("--thickness-max", config.space.thickness.upper, "Wall thickness upper bound [m]")->group(space)->capture_default_str();
  app.add_option("--radius-min", config.space.radius.lower, "Outer radius lower bound [m]")->group(space)->capture_default_str();
  app.add_option("--radius-max", config.space.radius.upper, "Outer radius upper bound [m]")->group(space)->capture_default_str();
  app.add_option("--n-samples", config.n_samples, "Designs to sample (gen-data)")->group(space)->capture_default_str();
  app.add_option("--sampling", sampling, "uniform | latin_hypercube")->group(space)->capture_default_str();

  auto* training = "Training";
  app.add_option("--n-train", config.n_train, "Training split size; the rest is the test set")->group(training)->capture_default_str();
  app.add_option("--k", config.ensemble_k, "Ensemble members (cross-validation folds)")->group(training)->capture_default_str();
  app.add_option("--hidden-widths", config.arch.hidden_widths, "Six hidden layer widths")->group(training)->expected(6);
  app.add_option("--dropout", config.arch.dropout_rate, "Dropout rate")->group(training)->capture_default_str();
  app.add_option("--dropout-after", config.arch.dropout_after, "Hidden layers followed by dropout (1-based)")->group(training);
  app.add_option("--skips", skips, "Identity skip spans FROM:TO (1-based)")->group(training);
  app.add_option("--lr", config.train.learning_rate, "Adam learning rate")->group(training)->capture_default_str();
  app.add_option("--batch-size", config.train.batch_size, "Mini-batch size")->group(training)->capture_default_str();
  app.add_option("--patience", config.train.patience, "Early-stopping patience [epochs]")->group(training)->capture_default_str();
  app.add_option("--max-epochs", max_epochs, "Epoch budget per member")->group(training)->capture_default_str();
  app.add_option("--target-transform", target_transform, "standard | log_standard")->group(training)->capture_default_str();

  auto* baselines = "Baselines";
  app.add_option("--rf-trees", config.forest_grid.n_trees, "Random forest grid: tree counts")->group(baselines);
  app.add_option("--rf-depths", config.forest_grid.max_depths, "Random forest grid: depths (0 = unlimited)")->group(baselines);
  app.add_option("--rf-max-features", config.forest_grid.max_features, "Random forest grid: features per split")->group(baselines);
  app.add_option("--rf-criteria", config.forest_grid.criteria, "Random forest grid: variance_reduction | mae_reduction")->group(baselines);
  app.add_option("--gb-trees", config.boost_grid.n_trees, "Gradient boost grid: rounds")->group(baselines);
  app.add_option("--gb-depths", config.boost_grid.max_depths, "Gradient boost grid: depths")->group(baselines);
  app.add_option("--gb-shrinkage", config.boost_grid.shrinkage, "Gradient boost grid: shrinkage")->group(baselines);
  app.add_option("--grid-folds", config.grid_folds, "Cross-validation folds for the grid search")->group(baselines)->capture_default_str();

  auto* material = "Material and environment";
  app.add_option("--yield-strength", config.material.yield_strength, "Yield strength [Pa]")->group(material)->capture_default_str();
  app.add_option("--safety-factor", config.safety_factor, "Safety factor (>= 1)")->group(material)->capture_default_str();
  app.add_option("--water-density", config.water.density, "Sea water density [kg/m^3]")->group(material)->capture_default_str();
  app.add_option("--gravity", config.water.gravity, "Gravitational acceleration [m/s^2]")->group(material)->capture_default_str();

  auto* csv = "CSV import";
  app.add_option("--csv-columns", csv_columns, "Column names for depth, length, thickness, radius, stress")->group(csv)->expected(5);
  app.add_option("--csv-scales", csv_scales, "Factors converting each column to SI")->group(csv)->expected(5);

  auto* gen = app.add_subcommand("gen-data", "Sample designs, evaluate the stress oracle, write a CSV (--out)");

  std::string data_path;
  auto* train = app.add_subcommand("train", "Train the deep ensemble on a CSV and save it (--out)");
  train->add_option("--data", data_path, "Input CSV")->required();

  auto* bench = app.add_subcommand("benchmark", "Deep ensemble vs random forest vs gradient boost on one split");
  bench->add_option("--data", data_path, "Input CSV")->required();

  std::string model_path;
  std::optional<double> depth, length, thickness, radius;
  std::string designs_path;
  bool with_oracle = false;
  auto* pred = app.add_subcommand("predict", "Predict stress and feasibility for one design or a CSV of designs");
  pred->add_option("--model", model_path, "Ensemble model file")->required();
  pred->add_option("--depth", depth, "Sea depth [m]");
  pred->add_option("--length", length, "Cylinder length [m]");
  pred->add_option("--thickness", thickness, "Wall thickness [m]");
  pred->add_option("--radius", radius, "Outer radius [m]");
  pred->add_option("--designs", designs_path, "CSV of designs (batch mode)");
  pred->add_flag("--oracle", with_oracle, "Also report the analytical stress");

  bool all_rows = false;
  auto* eval = app.add_subcommand("eval", "Score a saved ensemble on a CSV");
  eval->add_option("--model", model_path, "Ensemble model file")->required();
  eval->add_option("--data", data_path, "Input CSV")->required();
  eval->add_flag("--all", all_rows, "Score every row instead of the recorded test split");

  CLI11_PARSE(app, argc, argv);

  try {
    config.sampling = pvs::parse_sampling_method(sampling);
    config.target_transform = pvs::parse_target_transform(target_transform);
    config.arch.skip_spans = parse_skips(skips);
    config.train.max_epochs = max_epochs;
    for (std::size_t c = 0; c < csv_columns.size(); ++c) {
      config.columns.names[c] = csv_columns[c];
      config.columns.scale[c] = csv_scales[c];
    }
    for (const auto& name : config.forest_grid.criteria) pvs::parse_split_criterion(name);
    config.validate();

    const std::optional<std::filesystem::path> out_path =
        out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
    auto require_out = [&](const char* what) {
      if (!out_path) throw pvs::ConfigError(std::string("--out is required: ") + what);
      return *out_path;
    };

    if (gen->parsed()) {
      pvs::cmd_gen_data(config, require_out("CSV file to write"), std::cout);
    } else if (train->parsed()) {
      pvs::cmd_train(config, data_path, require_out("model file to write"), std::cout);
    } else if (bench->parsed()) {
      pvs::cmd_benchmark(config, data_path, out_path, std::cout);
    } else if (pred->parsed()) {
      std::vector<pvs::DesignPoint> designs;
      if (!designs_path.empty()) {
        designs = pvs::read_designs_csv(designs_path, config.columns);
      } else {
        std::string missing;
        for (const auto& [name, value] : {std::pair{"--depth", depth}, std::pair{"--length", length},
                                          std::pair{"--thickness", thickness}, std::pair{"--radius", radius}}) {
          if (!value) missing += std::string(missing.empty() ? "" : ", ") + name;
        }
        if (!missing.empty()) throw pvs::ConfigError("missing design values: " + missing + " (or pass --designs)");
        const pvs::DesignPoint design{*depth, *length, *thickness, *radius};
        if (auto violation = pvs::design_violation(design); !violation.empty()) {
          throw pvs::DomainError("invalid design: " + violation);
        }
        designs.push_back(design);
      }
      pvs::cmd_predict(config, model_path, designs, with_oracle, out_path, std::cout);
    } else if (eval->parsed()) {
      pvs::cmd_eval(config, model_path, data_path, all_rows, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
