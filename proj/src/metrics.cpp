#include "pvs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pvs/errors.hpp"

namespace pvs {

namespace {
constexpr double kPascalsPerMegapascal = 1e6;
}  // namespace

std::vector<double> residuals(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw DomainError("residuals: truth and prediction lengths differ");
  if (truth.empty()) throw DomainError("residuals: empty input");
  std::vector<double> dz(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) throw DomainError("residuals: zero truth value at index " + std::to_string(i));
    dz[i] = (truth[i] - pred[i]) / truth[i];
  }
  return dz;
}

MetricsReport report(std::span<const double> truth, std::span<const double> pred) {
  const auto dz = residuals(truth, pred);
  MetricsReport r;
  r.n = dz.size();
  std::size_t accurate = 0;
  double abs_sum = 0.0;
  double signed_sum = 0.0;
  double error_sum = 0.0;
  for (std::size_t i = 0; i < dz.size(); ++i) {
    const double magnitude = std::abs(dz[i]);
    if (magnitude < kAccuracyThreshold) ++accurate;
    if (magnitude > kOutlierThreshold) ++r.outliers;
    abs_sum += magnitude;
    signed_sum += dz[i];
    error_sum += (truth[i] - pred[i]) / kPascalsPerMegapascal;
  }
  const double n = static_cast<double>(r.n);
  r.accuracy = 100.0 * static_cast<double>(accurate) / n;
  r.mean_abs_residual = abs_sum / n;
  r.mean_residual = signed_sum / n;

  // Two-pass population variance of the errors in MPa.
  const double mean_error = error_sum / n;
  double square_sum = 0.0;
  for (std::size_t i = 0; i < dz.size(); ++i) {
    const double e = (truth[i] - pred[i]) / kPascalsPerMegapascal - mean_error;
    square_sum += e * e;
  }
  r.deviation_mpa = std::sqrt(square_sum / n);
  return r;
}

std::string benchmark_table(const std::vector<NamedReport>& reports) {
  std::size_t name_width = 5;
  for (const auto& r : reports) name_width = std::max(name_width, r.name.size());

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "| %-*s | %9s | %8s | %7s | %10s |\n", static_cast<int>(name_width), "Model",
                "Accuracy", "Residual", "Outlier", "Deviation");
  const std::string header(line);
  const std::string rule = "+" + std::string(name_width + 2, '-') + "+-----------+----------+---------+------------+\n";
  out << rule << header << rule;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "| %-*s | %8.2f%% | %8.3f | %7zu | %10.2f |\n", static_cast<int>(name_width),
                  r.name.c_str(), r.metrics.accuracy, r.metrics.mean_abs_residual, r.metrics.outliers,
                  r.metrics.deviation_mpa);
    out << line;
  }
  out << rule;
  return out.str();
}

std::string benchmark_csv(const std::vector<NamedReport>& reports) {
  std::ostringstream out;
  out << "model,n,accuracy_pct,mean_abs_residual,mean_residual,outliers,deviation_mpa\n";
  char buffer[64];
  auto number = [&](double v) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return std::string(buffer);
  };
  for (const auto& r : reports) {
    out << r.name << ',' << r.metrics.n << ',' << number(r.metrics.accuracy) << ','
        << number(r.metrics.mean_abs_residual) << ',' << number(r.metrics.mean_residual) << ','
        << r.metrics.outliers << ',' << number(r.metrics.deviation_mpa) << '\n';
  }
  return out.str();
}

std::vector<NamedReport> parse_benchmark_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<NamedReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw IoError("benchmark CSV: expected 7 columns, got " + std::to_string(cells.size()));
    NamedReport r;
    r.name = cells[0];
    try {
      r.metrics.n = std::stoull(cells[1]);
      r.metrics.accuracy = std::stod(cells[2]);
      r.metrics.mean_abs_residual = std::stod(cells[3]);
      r.metrics.mean_residual = std::stod(cells[4]);
      r.metrics.outliers = std::stoull(cells[5]);
      r.metrics.deviation_mpa = std::stod(cells[6]);
    } catch (const std::exception&) {
      throw IoError("benchmark CSV: malformed row '" + line + "'");
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace pvs
