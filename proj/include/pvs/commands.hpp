#pragma once

// The command-line workflows as library calls. Every command validates the
// whole RunConfig and its inputs before writing anything.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pvs/config.hpp"
#include "pvs/ensemble.hpp"
#include "pvs/metrics.hpp"

namespace pvs {

struct ModelTiming {
  std::string name;
  double train_seconds = 0.0;
  double predict_seconds_per_sample = 0.0;  // single-threaded, one design per call
};

struct BenchmarkResult {
  std::vector<NamedReport> reports;  // deep ensemble, random forest, gradient boost
  std::vector<ModelTiming> timings;
  GridSearchResult forest_search;
  GridSearchResult boost_search;
  std::size_t parameter_count = 0;
  /// Accuracy ordering deep ensemble > random forest > gradient boost.
  bool ordering_reproduced = false;
};

/// Reference cost of one FEA run the surrogate replaces, seconds.
inline constexpr double kFeaSecondsPerSimulation = 202.0;

/// Ensemble trained the way `train` and `benchmark` do it.
EnsembleModel train_surrogate(const RunConfig& config, const Dataset& train_data);

/// Trains all three models on one split of `data` and scores them on the rest.
BenchmarkResult run_benchmark(const RunConfig& config, const Dataset& data, std::ostream& log);

std::string format_benchmark(const BenchmarkResult& result);

void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

EnsembleModel cmd_train(const RunConfig& config, const std::filesystem::path& data,
                        const std::filesystem::path& model_out, std::ostream& log);

BenchmarkResult cmd_benchmark(const RunConfig& config, const std::filesystem::path& data,
                              const std::optional<std::filesystem::path>& csv_out, std::ostream& log);

struct PredictionRow {
  DesignPoint design;
  double surrogate_pa = 0.0;
  std::optional<double> oracle_pa;
  bool feasible = false;  // surrogate stress * safety factor < yield
  std::optional<bool> oracle_feasible;
};

std::vector<PredictionRow> cmd_predict(const RunConfig& config, const std::filesystem::path& model,
                                       const std::vector<DesignPoint>& designs, bool with_oracle,
                                       const std::optional<std::filesystem::path>& csv_out, std::ostream& log);

/// Scores a saved ensemble on `data`: on the recorded test split when the
/// model carries one for a file of this size, otherwise on every row.
MetricsReport cmd_eval(const RunConfig& config, const std::filesystem::path& model, const std::filesystem::path& data,
                       bool all_rows, std::ostream& log);

}  // namespace pvs
