#include <chrono>
#include <cstdio>
#include <ostream>

#include "pvs/commands.hpp"

namespace pvs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename PredictOne>
double time_per_sample(const std::vector<DesignPoint>& designs, PredictOne&& predict_one) {
  const std::size_t n = std::min<std::size_t>(designs.size(), 1000);
  if (n == 0) return 0.0;
  volatile double sink = 0.0;
  const auto start = Clock::now();
  for (std::size_t i = 0; i < n; ++i) sink = sink + predict_one(designs[i]);
  return seconds_since(start) / static_cast<double>(n);
}

MetricsReport score(const std::vector<double>& truth, const VectorXd& pred) {
  return report(truth, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
}

std::string describe(const TreeHyperParams& hp) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, "trees=%d depth=%s max_features=%d criterion=%s shrinkage=%g", hp.n_trees,
                hp.max_depth == kUnlimitedDepth ? "unlimited" : std::to_string(hp.max_depth).c_str(),
                hp.max_features, to_string(hp.criterion).c_str(), hp.shrinkage);
  return buffer;
}

}  // namespace

EnsembleModel train_surrogate(const RunConfig& config, const Dataset& train_data) {
  TrainConfig train = config.train;
  train.seed = stage_seed(config, "ensemble");
  return train_ensemble(train_data, config.ensemble_k, config.arch, train, config.target_transform, config.jobs);
}

BenchmarkResult run_benchmark(const RunConfig& config, const Dataset& data, std::ostream& log) {
  config.validate();
  if (config.n_train >= data.size()) {
    throw ConfigError("n-train (" + std::to_string(config.n_train) + ") must be smaller than the data size (" +
                      std::to_string(data.size()) + ")");
  }
  const auto split = split_indices(data.size(), config.n_train, stage_seed(config, "split"));
  const auto train = data.subset(split.train_indices);
  const auto test = data.subset(split.test_indices);

  BenchmarkResult result;
  result.parameter_count = param_count(config.arch);

  log << "deep ensemble: training " << config.ensemble_k << " members (" << result.parameter_count
      << " parameters each) on " << train.size() << " samples\n";
  auto start = Clock::now();
  const auto ensemble = train_surrogate(config, train);
  const double ensemble_seconds = seconds_since(start);
  result.reports.push_back({"Deep ensemble", score(test.targets, predict(ensemble, test.inputs))});
  result.timings.push_back({"Deep ensemble", ensemble_seconds, time_per_sample(test.inputs, [&](const DesignPoint& d) {
                              return predict(ensemble, d);
                            })});

  const auto baseline = [&](BaselineKind kind, const char* name, const TreeGrid& grid, GridSearchResult& search) {
    log << name << ": grid search over " << grid.cells().size() << " cells, " << config.grid_folds << "-fold CV\n";
    search = grid_search(kind, train, grid.cells(), config.grid_folds, stage_seed(config, "grid_search"),
                         config.target_transform, config.jobs);
    log << name << ": selected " << describe(search.best) << '\n';
    const auto t0 = Clock::now();
    const auto model = fit_baseline(kind, train, search.best, stage_seed(config, name), config.target_transform,
                                    config.jobs);
    const double train_seconds = seconds_since(t0);
    result.reports.push_back({name, score(test.targets, model.predict(test.inputs))});
    result.timings.push_back({name, train_seconds, time_per_sample(test.inputs, [&](const DesignPoint& d) {
                                return model.predict(std::span<const DesignPoint>(&d, 1))(0);
                              })});
  };
  baseline(BaselineKind::random_forest, "Random Forest", config.forest_grid, result.forest_search);
  baseline(BaselineKind::gradient_boost, "Gradient Boost", config.boost_grid, result.boost_search);

  result.ordering_reproduced = result.reports[0].metrics.accuracy > result.reports[1].metrics.accuracy &&
                               result.reports[1].metrics.accuracy > result.reports[2].metrics.accuracy;
  return result;
}

std::string format_benchmark(const BenchmarkResult& result) {
  std::string out = benchmark_table(result.reports);
  char line[256];
  std::snprintf(line, sizeof line, "\n%-16s %14s %18s %14s\n", "Model", "train [s]", "predict [us/sample]",
                "FEA speedup");
  out += line;
  for (const auto& t : result.timings) {
    const double speedup = t.predict_seconds_per_sample > 0.0 ? kFeaSecondsPerSimulation / t.predict_seconds_per_sample
                                                              : 0.0;
    std::snprintf(line, sizeof line, "%-16s %14.2f %18.3f %14.3g\n", t.name.c_str(), t.train_seconds,
                  t.predict_seconds_per_sample * 1e6, speedup);
    out += line;
  }
  out += "\naccuracy ordering Deep ensemble > Random Forest > Gradient Boost: ";
  out += result.ordering_reproduced ? "reproduced\n" : "not reproduced\n";
  return out;
}

}  // namespace pvs
