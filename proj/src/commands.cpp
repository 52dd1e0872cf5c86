#include "pvs/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace pvs {

namespace {

Dataset load_data(const RunConfig& config, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("data file '" + path.string() + "' does not exist");
  return read_csv(path, config.columns);
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string mpa(double pascals) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", pascals / 1e6);
  return buffer;
}

}  // namespace

void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto designs = sample_designs(config.space, config.n_samples, stage_seed(config, "gen_data"), config.sampling);
  const auto data = generate_dataset(designs, config.water, config.jobs);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_csv(data, out);
  char line[160];
  std::snprintf(line, sizeof line, "wrote %zu samples to %s (%.3f us/sample)\n", data.size(), out.string().c_str(),
                1e6 * seconds / static_cast<double>(data.size()));
  log << line;
}

EnsembleModel cmd_train(const RunConfig& config, const std::filesystem::path& data_path,
                        const std::filesystem::path& model_out, std::ostream& log) {
  config.validate();
  const auto data = load_data(config, data_path);
  if (config.n_train >= data.size()) {
    throw ConfigError("n-train (" + std::to_string(config.n_train) + ") must be smaller than the data size (" +
                      std::to_string(data.size()) + ")");
  }
  const auto split_seed = stage_seed(config, "split");
  const auto split = split_indices(data.size(), config.n_train, split_seed);
  const auto train = data.subset(split.train_indices);

  log << "parameters per network: " << param_count(config.arch) << '\n';
  auto model = train_surrogate(config, train);
  model.split = SplitRecord{data.size(), config.n_train, split_seed, split.test_indices};
  for (std::size_t m = 0; m < model.k(); ++m) {
    const auto& rec = model.records[m];
    log << "member " << m << ": fit " << rec.fit_size << ", validation " << rec.val_size << ", epochs "
        << rec.history.val_loss.size() << ", best epoch " << rec.history.best_epoch + 1 << '\n';
  }

  const auto test = data.subset(split.test_indices);
  const VectorXd pred = predict(model, test.inputs);
  const auto metrics = report(test.targets, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  log << benchmark_table({{"Deep ensemble", metrics}});

  save(model, model_out);
  log << "saved ensemble to " << model_out.string() << '\n';
  return model;
}

BenchmarkResult cmd_benchmark(const RunConfig& config, const std::filesystem::path& data_path,
                              const std::optional<std::filesystem::path>& csv_out, std::ostream& log) {
  config.validate();
  const auto data = load_data(config, data_path);
  auto result = run_benchmark(config, data, log);
  log << format_benchmark(result);
  if (csv_out) write_text(*csv_out, benchmark_csv(result.reports));
  return result;
}

std::vector<PredictionRow> cmd_predict(const RunConfig& config, const std::filesystem::path& model_path,
                                       const std::vector<DesignPoint>& designs, bool with_oracle,
                                       const std::optional<std::filesystem::path>& csv_out, std::ostream& log) {
  config.validate();
  if (designs.empty()) throw ConfigError("no designs to predict");
  for (std::size_t i = 0; i < designs.size(); ++i) {
    if (auto violation = design_violation(designs[i]); !violation.empty()) {
      throw DomainError("design " + std::to_string(i) + ": " + violation);
    }
  }
  const auto model = load_ensemble(model_path);
  const VectorXd stress = predict(model, designs);

  std::vector<PredictionRow> rows;
  rows.reserve(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    PredictionRow row;
    row.design = designs[i];
    row.surrogate_pa = stress(static_cast<Eigen::Index>(i));
    row.feasible = row.surrogate_pa * config.safety_factor < config.material.yield_strength;
    if (with_oracle) {
      row.oracle_pa = max_vm_stress(designs[i], config.water).max_vm;
      row.oracle_feasible = is_feasible(designs[i], config.material, config.safety_factor, config.water);
    }
    rows.push_back(row);
  }

  if (csv_out) {
    std::string text = "depth_m,length_m,thickness_m,radius_m,surrogate_vm_pa";
    text += with_oracle ? ",oracle_vm_pa,feasible,oracle_feasible\n" : ",feasible\n";
    char buffer[64];
    auto number = [&](double v) {
      std::snprintf(buffer, sizeof buffer, "%.17g", v);
      return std::string(buffer);
    };
    for (const auto& row : rows) {
      text += number(row.design.depth) + ',' + number(row.design.length) + ',' + number(row.design.thickness) + ',' +
              number(row.design.radius) + ',' + number(row.surrogate_pa);
      if (with_oracle) text += ',' + number(*row.oracle_pa);
      text += row.feasible ? ",1" : ",0";
      if (with_oracle) text += *row.oracle_feasible ? ",1" : ",0";
      text += '\n';
    }
    write_text(*csv_out, text);
  }

  if (rows.size() == 1 || !csv_out) {
    for (const auto& row : rows) {
      log << "surrogate max von Mises: " << mpa(row.surrogate_pa) << " MPa";
      if (row.oracle_pa) {
        log << ", oracle: " << mpa(*row.oracle_pa) << " MPa";
      }
      log << ", " << (row.feasible ? "feasible" : "NOT feasible");
      if (row.oracle_feasible) log << " (oracle: " << (*row.oracle_feasible ? "feasible" : "NOT feasible") << ")";
      log << " for " << config.material.name << " (yield "
          << mpa(config.material.yield_strength) << " MPa, safety factor " << config.safety_factor << ")\n";
    }
  } else {
    log << "wrote " << rows.size() << " predictions to " << csv_out->string() << '\n';
  }
  return rows;
}

MetricsReport cmd_eval(const RunConfig& config, const std::filesystem::path& model_path,
                       const std::filesystem::path& data_path, bool all_rows, std::ostream& log) {
  config.validate();
  const auto model = load_ensemble(model_path);
  const auto data = load_data(config, data_path);
  Dataset scored = data;
  if (!all_rows && model.split && model.split->source_size == data.size()) {
    scored = data.subset(model.split->test_indices);
    log << "evaluating on the " << scored.size() << " held-out rows recorded in the model\n";
  } else {
    log << "evaluating on all " << scored.size() << " rows\n";
  }
  if (scored.empty()) throw ConfigError("nothing to evaluate");
  const VectorXd pred = predict(model, scored.inputs);
  const auto metrics = report(scored.targets, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  log << benchmark_table({{"Deep ensemble", metrics}});
  return metrics;
}

}  // namespace pvs
