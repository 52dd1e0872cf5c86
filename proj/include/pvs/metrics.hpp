#pragma once

#include <span>
#include <string>
#include <vector>

namespace pvs {

inline constexpr double kAccuracyThreshold = 0.10;
inline constexpr double kOutlierThreshold = 0.50;

/// dZ_i = (truth_i - pred_i) / truth_i. Throws DomainError on a zero truth
/// value (with its index) or mismatched/empty inputs.
std::vector<double> residuals(std::span<const double> truth, std::span<const double> pred);

struct MetricsReport {
  std::size_t n = 0;
  double accuracy = 0.0;           // percent with |dZ| < 0.10
  double mean_abs_residual = 0.0;  // mean |dZ|
  double mean_residual = 0.0;      // signed mean dZ, diagnostic only
  std::size_t outliers = 0;        // count with |dZ| > 0.50
  double deviation_mpa = 0.0;      // population std of (truth - pred), MPa
};

/// truth and pred in pascals.
MetricsReport report(std::span<const double> truth, std::span<const double> pred);

struct NamedReport {
  std::string name;
  MetricsReport metrics;
};

/// Aligned text table with Model / Accuracy / Residual / Outlier / Deviation columns.
std::string benchmark_table(const std::vector<NamedReport>& reports);
std::string benchmark_csv(const std::vector<NamedReport>& reports);
/// Inverse of benchmark_csv (n and mean_residual included).
std::vector<NamedReport> parse_benchmark_csv(const std::string& text);

}  // namespace pvs
