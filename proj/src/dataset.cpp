#include "pvs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "pvs/seeding.hpp"

namespace pvs {

namespace {

void check_interval(const Interval& interval, const char* name) {
  if (!std::isfinite(interval.lower) || !std::isfinite(interval.upper)) {
    throw ConfigError(std::string("design space: non-finite bound for ") + name);
  }
  if (interval.lower > interval.upper) {
    throw ConfigError(std::string("design space: lower bound exceeds upper bound for ") + name);
  }
}

double lerp(const Interval& interval, double u) { return interval.lower + u * (interval.upper - interval.lower); }

DesignPoint design_from_unit(const DesignSpace& space, const std::array<double, kNumFeatures>& u) {
  return {lerp(space.depth, u[0]), lerp(space.length, u[1]), lerp(space.thickness, u[2]), lerp(space.radius, u[3])};
}

bool valid(const DesignPoint& design) { return design_violation(design).empty(); }

std::vector<DesignPoint> sample_uniform(const DesignSpace& space, std::size_t n, Rng& rng) {
  std::vector<DesignPoint> designs;
  designs.reserve(n);
  const std::size_t max_attempts = 100 * n + 1000;
  std::size_t attempts = 0;
  while (designs.size() < n) {
    if (++attempts > max_attempts) {
      throw ConfigError("design space: more than 99% of samples violate thickness < radius");
    }
    std::array<double, kNumFeatures> u{};
    for (auto& value : u) value = uniform01(rng);
    const auto design = design_from_unit(space, u);
    if (valid(design)) designs.push_back(design);
  }
  return designs;
}

// Latin hypercube: one sample per equal-width stratum per variable. Rows with
// thickness >= radius are repaired by swapping thickness values with another
// row, which keeps every column's strata intact.
std::vector<DesignPoint> sample_lhs(const DesignSpace& space, std::size_t n, Rng& rng) {
  std::array<std::vector<double>, kNumFeatures> unit;
  for (auto& column : unit) {
    const auto strata = permutation(n, rng);
    column.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = (static_cast<double>(strata[i]) + uniform01(rng)) / static_cast<double>(n);
    }
  }
  std::vector<DesignPoint> designs(n);
  for (std::size_t i = 0; i < n; ++i) {
    designs[i] = design_from_unit(space, {unit[0][i], unit[1][i], unit[2][i], unit[3][i]});
  }

  const std::size_t max_tries = 100 * n + 1000;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t tries = 0;
    while (!valid(designs[i])) {
      if (++tries > max_tries) {
        throw ConfigError("design space: cannot place a Latin hypercube with thickness < radius");
      }
      const auto j = static_cast<std::size_t>(uniform_index(rng, n));
      DesignPoint a = designs[i];
      DesignPoint b = designs[j];
      std::swap(a.thickness, b.thickness);
      if (valid(a) && (valid(b) || j > i)) {
        designs[i] = a;
        designs[j] = b;
      }
    }
  }
  return designs;
}

}  // namespace

void DesignSpace::validate() const {
  check_interval(depth, "depth");
  check_interval(length, "length");
  check_interval(thickness, "thickness");
  check_interval(radius, "radius");
  if (depth.lower < 0.0) throw ConfigError("design space: depth must be >= 0");
  if (length.lower < 0.0) throw ConfigError("design space: length must be >= 0");
  if (thickness.lower <= 0.0) throw ConfigError("design space: thickness must be > 0");
  if (radius.lower <= 0.0) throw ConfigError("design space: radius must be > 0");
  if (thickness.lower >= radius.upper) {
    throw ConfigError("design space: thickness lower bound must be below the radius upper bound");
  }
}

SamplingMethod parse_sampling_method(const std::string& name) {
  if (name == "uniform") return SamplingMethod::uniform;
  if (name == "latin_hypercube" || name == "lhs") return SamplingMethod::latin_hypercube;
  throw ConfigError("unknown sampling method '" + name + "' (expected uniform or latin_hypercube)");
}

std::string to_string(SamplingMethod method) {
  return method == SamplingMethod::uniform ? "uniform" : "latin_hypercube";
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.provenance = provenance;
  out.inputs.reserve(indices.size());
  out.targets.reserve(indices.size());
  for (auto i : indices) {
    out.inputs.push_back(inputs.at(i));
    out.targets.push_back(targets.at(i));
  }
  return out;
}

MatrixXd Dataset::feature_matrix() const {
  MatrixXd x(static_cast<Eigen::Index>(size()), kNumFeatures);
  for (std::size_t i = 0; i < size(); ++i) x.row(static_cast<Eigen::Index>(i)) = to_features(inputs[i]).transpose();
  return x;
}

Vector4d to_features(const DesignPoint& design) {
  return {design.depth, design.length, design.thickness, design.radius};
}

std::vector<DesignPoint> sample_designs(const DesignSpace& space, std::size_t n, std::uint64_t seed,
                                        SamplingMethod method) {
  if (n == 0) throw ConfigError("sample count must be > 0");
  space.validate();
  Rng rng(derive_seed(seed, "sample_designs"));
  return method == SamplingMethod::uniform ? sample_uniform(space, n, rng) : sample_lhs(space, n, rng);
}

Dataset generate_dataset(std::span<const DesignPoint> designs, const SeaWater& water, unsigned jobs) {
  Dataset data;
  data.provenance = Provenance::oracle;
  data.inputs.assign(designs.begin(), designs.end());
  data.targets.assign(designs.size(), 0.0);

  const std::size_t n = designs.size();
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](std::size_t worker) {
    try {
      for (std::size_t i = worker; i < n; i += workers) {
        try {
          data.targets[i] = max_vm_stress(designs[i], water).max_vm;
        } catch (const DomainError& e) {
          throw DomainError("sample " + std::to_string(i) + ": " + e.what());
        }
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return data;
}

Split split_indices(std::size_t n, std::size_t n_train, std::uint64_t seed) {
  if (n_train == 0 || n_train >= n) {
    throw DomainError("n_train must satisfy 0 < n_train < " + std::to_string(n));
  }
  Rng rng(derive_seed(seed, "train_test_split"));
  auto order = permutation(n, rng);
  Split split;
  split.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t n_train, std::uint64_t seed) {
  const auto split = split_indices(data.size(), n_train, seed);
  return {data.subset(split.train_indices), data.subset(split.test_indices)};
}

std::vector<std::size_t> FoldAssignment::fold(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < membership.size(); ++s) {
    if (membership[s] == i) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < membership.size(); ++s) {
    if (membership[s] != i) out.push_back(s);
  }
  return out;
}

FoldAssignment kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DomainError("kfold: k must be >= 2");
  if (k > n) throw DomainError("kfold: k = " + std::to_string(k) + " exceeds sample count " + std::to_string(n));
  Rng rng(derive_seed(seed, "kfold"));
  const auto order = permutation(n, rng);
  FoldAssignment folds{k, std::vector<std::size_t>(n)};
  // Round-robin over a random order: fold sizes differ by at most one and
  // the first n % k folds get the extra sample.
  for (std::size_t pos = 0; pos < n; ++pos) folds.membership[order[pos]] = pos % k;
  return folds;
}

TargetTransform parse_target_transform(const std::string& name) {
  if (name == "standard" || name == "zscore") return TargetTransform::standard;
  if (name == "log_standard" || name == "log") return TargetTransform::log_standard;
  throw ConfigError("unknown target transform '" + name + "' (expected standard or log_standard)");
}

std::string to_string(TargetTransform transform) {
  return transform == TargetTransform::standard ? "standard" : "log_standard";
}

Vector4d Scaler::apply(const DesignPoint& design) const {
  return (to_features(design) - input_min).cwiseQuotient(input_max - input_min);
}

MatrixXd Scaler::apply(std::span<const DesignPoint> designs) const {
  MatrixXd out(kNumFeatures, static_cast<Eigen::Index>(designs.size()));
  for (std::size_t i = 0; i < designs.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = apply(designs[i]);
  return out;
}

double Scaler::apply_target(double stress) const {
  if (transform == TargetTransform::log_standard) {
    if (!(stress > 0.0)) throw DomainError("log target transform requires a positive stress");
    return (std::log(stress) - target_mean) / target_std;
  }
  return (stress - target_mean) / target_std;
}

double Scaler::invert_target(double normalized) const {
  const double value = normalized * target_std + target_mean;
  return transform == TargetTransform::log_standard ? std::exp(value) : value;
}

VectorXd Scaler::apply_targets(std::span<const double> stresses) const {
  VectorXd out(static_cast<Eigen::Index>(stresses.size()));
  for (std::size_t i = 0; i < stresses.size(); ++i) out(static_cast<Eigen::Index>(i)) = apply_target(stresses[i]);
  return out;
}

Scaler fit_scaler(const Dataset& train, TargetTransform transform) {
  if (train.empty()) throw ConfigError("cannot fit a scaler on an empty dataset");
  Scaler scaler;
  scaler.transform = transform;
  const MatrixXd x = train.feature_matrix();
  scaler.input_min = x.colwise().minCoeff().transpose();
  scaler.input_max = x.colwise().maxCoeff().transpose();
  for (int j = 0; j < kNumFeatures; ++j) {
    if (!(scaler.input_max(j) > scaler.input_min(j))) {
      throw ConfigError(std::string("input variable '") + kFeatureNames[j] + "' is constant in the training data");
    }
  }

  VectorXd y(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double t = train.targets[i];
    if (transform == TargetTransform::log_standard && !(t > 0.0)) {
      throw ConfigError("log target transform requires positive targets (sample " + std::to_string(i) + ")");
    }
    y(static_cast<Eigen::Index>(i)) = transform == TargetTransform::log_standard ? std::log(t) : t;
  }
  scaler.target_mean = y.mean();
  scaler.target_std = std::sqrt((y.array() - scaler.target_mean).square().mean());
  if (!(scaler.target_std > 0.0) || !std::isfinite(scaler.target_std)) {
    throw ConfigError("training targets have zero spread");
  }
  return scaler;
}

}  // namespace pvs
