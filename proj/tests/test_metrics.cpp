#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

#include "brute_metrics.hpp"
#include "pvs/errors.hpp"
#include "pvs/metrics.hpp"

using namespace pvs;

namespace {

constexpr double MPa = 1e6;

std::vector<double> mpa(std::initializer_list<double> values) {
  std::vector<double> out;
  for (double v : values) out.push_back(v * MPa);
  return out;
}

// Truth in [20, 900] MPa, predictions spread so every accuracy bucket is hit.
void random_pair(std::mt19937_64& gen, std::size_t n, std::vector<double>& truth, std::vector<double>& pred) {
  std::uniform_real_distribution<double> t(20e6, 900e6);
  std::uniform_real_distribution<double> rel(-1.2, 1.2);
  std::uniform_int_distribution<int> coarse(0, 3);
  truth.resize(n);
  pred.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = t(gen);
    const double spread = coarse(gen) == 0 ? rel(gen) : 0.15 * rel(gen);
    pred[i] = truth[i] * (1.0 - spread);
  }
}

}  // namespace

TEST_CASE("residual examples") {
  CHECK(residuals(mpa({100}), mpa({105}))[0] == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(residuals(mpa({200}), mpa({900}))[0] == -3.5);
  const auto same = mpa({1, 50, 700});
  for (double dz : residuals(same, same)) CHECK(dz == 0.0);
}

TEST_CASE("residual errors") {
  try {
    residuals(mpa({100, 0, 3}), mpa({100, 1, 3}));
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
  CHECK_THROWS_AS(residuals(mpa({1, 2}), mpa({1})), DomainError);
  CHECK_THROWS_AS(residuals({}, {}), DomainError);
  CHECK_THROWS_AS(report(mpa({0}), mpa({1})), DomainError);
}

TEST_CASE("report on hand examples") {
  const auto perfect = report(mpa({10, 20, 30}), mpa({10, 20, 30}));
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.mean_abs_residual == 0.0);
  CHECK(perfect.outliers == 0);
  CHECK(perfect.deviation_mpa == 0.0);

  const auto r = report(mpa({100, 200, 400}), mpa({105, 240, 900}));
  const auto dz = residuals(mpa({100, 200, 400}), mpa({105, 240, 900}));
  CHECK(dz[0] == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(dz[1] == doctest::Approx(-0.20).epsilon(1e-15));
  CHECK(dz[2] == doctest::Approx(-1.25).epsilon(1e-15));
  CHECK(r.n == 3);
  CHECK(r.accuracy == doctest::Approx(100.0 / 3.0).epsilon(1e-15));
  CHECK(r.mean_abs_residual == doctest::Approx(0.50).epsilon(1e-15));
  CHECK(r.mean_residual == doctest::Approx(-0.50).epsilon(1e-15));
  CHECK(r.outliers == 1);

  CHECK(report(mpa({100, 200}), mpa({110, 180})).deviation_mpa == doctest::Approx(15.0).epsilon(1e-15));
}

TEST_CASE("thresholds are strict") {
  // (10 - 9) / 10 and (10 - 11) / 10 round to the same double as 0.10.
  const std::vector<double> truth{10.0, 10.0, 10.0};
  const std::vector<double> pred{9.0, 11.0, 9.5};
  REQUIRE(std::abs(residuals(truth, pred)[0]) == kAccuracyThreshold);
  CHECK(report(truth, pred).accuracy == doctest::Approx(100.0 / 3.0).epsilon(1e-15));

  const auto boundary = report(std::vector<double>{1.0, 2.0}, std::vector<double>{0.5, 3.0});
  CHECK(boundary.outliers == 0);
  const auto past = report(std::vector<double>{1.0}, std::vector<double>{0.25});
  CHECK(past.outliers == 1);
}

TEST_CASE("report matches brute force on random vectors") {
  std::mt19937_64 gen(2024);
  std::vector<double> truth, pred;
  for (int trial = 0; trial < 1000; ++trial) {
    random_pair(gen, 1 + static_cast<std::size_t>(trial % 97), truth, pred);
    const auto r = report(truth, pred);
    CHECK(test::same_report(r, test::brute_report(truth, pred)));

    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 100.0);
    CHECK(r.outliers <= r.n);
    CHECK(r.mean_abs_residual >= 0.0);
    CHECK(r.deviation_mpa >= 0.0);

    const auto dz = residuals(truth, pred);
    const auto outside = static_cast<std::size_t>(
        std::count_if(dz.begin(), dz.end(), [](double v) { return std::abs(v) >= kAccuracyThreshold; }));
    const auto inside = static_cast<std::size_t>(std::llround(r.accuracy * static_cast<double>(r.n) / 100.0));
    CHECK(inside + outside == r.n);
  }
}

TEST_CASE("scaling truth and prediction together") {
  std::mt19937_64 gen(7);
  std::vector<double> truth, pred;
  for (int trial = 0; trial < 100; ++trial) {
    random_pair(gen, 200, truth, pred);
    // Powers of two keep every residual bit-identical.
    for (double c : {0.25, 4.0}) {
      std::vector<double> st(truth), sp(pred);
      for (auto& v : st) v *= c;
      for (auto& v : sp) v *= c;
      const auto a = report(truth, pred);
      const auto b = report(st, sp);
      CHECK(b.accuracy == a.accuracy);
      CHECK(b.mean_abs_residual == a.mean_abs_residual);
      CHECK(b.outliers == a.outliers);
      CHECK(b.deviation_mpa == doctest::Approx(c * a.deviation_mpa).epsilon(1e-12));
    }
    const double c = 3.7;
    std::vector<double> st(truth), sp(pred);
    for (auto& v : st) v *= c;
    for (auto& v : sp) v *= c;
    const auto a = report(truth, pred);
    const auto b = report(st, sp);
    CHECK(b.mean_abs_residual == doctest::Approx(a.mean_abs_residual).epsilon(1e-12));
    CHECK(b.deviation_mpa == doctest::Approx(c * a.deviation_mpa).epsilon(1e-12));
  }
}

TEST_CASE("benchmark table and CSV") {
  MetricsReport fixture;
  fixture.n = 3311;
  fixture.accuracy = 92.20;
  fixture.mean_abs_residual = 0.045;
  fixture.outliers = 48;
  fixture.deviation_mpa = 118.67;
  const std::vector<NamedReport> one{{"Deep ensemble", fixture}};

  const auto table = benchmark_table(one);
  CHECK(table.find("Deep ensemble") != std::string::npos);
  CHECK(table.find("92.20%") != std::string::npos);
  CHECK(table.find("0.045") != std::string::npos);
  CHECK(table.find(" 48 ") != std::string::npos);
  CHECK(table.find("118.67") != std::string::npos);
  for (const char* column : {"Model", "Accuracy", "Residual", "Outlier", "Deviation"}) {
    CHECK(table.find(column) != std::string::npos);
  }
  // rule, header, rule, one row, rule
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);

  std::mt19937_64 gen(3);
  std::vector<double> truth, pred;
  std::vector<NamedReport> many;
  for (const char* name : {"Deep ensemble", "Random forest", "Gradient boosting"}) {
    random_pair(gen, 50, truth, pred);
    many.push_back({name, report(truth, pred)});
  }
  const auto parsed = parse_benchmark_csv(benchmark_csv(many));
  REQUIRE(parsed.size() == many.size());
  for (std::size_t i = 0; i < many.size(); ++i) {
    CHECK(parsed[i].name == many[i].name);
    CHECK(test::same_report(parsed[i].metrics, many[i].metrics));
  }
  CHECK_THROWS_AS(parse_benchmark_csv("header\na,b\n"), IoError);
  CHECK_THROWS_AS(parse_benchmark_csv("header\na,x,1,1,1,1,1\n"), IoError);
}
