#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pvs/metrics.hpp"

namespace pvs::test {

// Textbook recomputation of the report, written out in one loop per quantity.
inline MetricsReport brute_report(const std::vector<double>& truth, const std::vector<double>& pred) {
  MetricsReport r;
  r.n = truth.size();
  const double n = static_cast<double>(r.n);
  std::size_t inside = 0;
  double abs_total = 0.0;
  double signed_total = 0.0;
  std::vector<double> errors;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dz = (truth[i] - pred[i]) / truth[i];
    if (std::abs(dz) < 0.10) ++inside;
    if (std::abs(dz) > 0.50) ++r.outliers;
    abs_total += std::abs(dz);
    signed_total += dz;
    errors.push_back((truth[i] - pred[i]) / 1e6);
  }
  r.accuracy = 100.0 * static_cast<double>(inside) / n;
  r.mean_abs_residual = abs_total / n;
  r.mean_residual = signed_total / n;
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= n;
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  r.deviation_mpa = std::sqrt(ss / n);
  return r;
}

inline bool same_report(const MetricsReport& a, const MetricsReport& b) {
  return a.n == b.n && a.accuracy == b.accuracy && a.mean_abs_residual == b.mean_abs_residual &&
         a.mean_residual == b.mean_residual && a.outliers == b.outliers && a.deviation_mpa == b.deviation_mpa;
}

}  // namespace pvs::test
