#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gprvm/rng.hpp"

namespace gprvm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Eigen::MatrixXd inputs;   // N x D, D in {1, 2}
  Eigen::VectorXd targets;  // N
};

// E[a,b,c]: grid from a to b with step c; U[a,b,c]: c uniform draws on [a,b].
struct SamplingSpec {
  enum class Kind { Grid, Uniform } kind;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  void validate() const {
    if (!(a < b)) throw ConfigError("sampling spec requires a < b");
    if (kind == Kind::Grid) {
      if (!(c > 0.0)) throw ConfigError("grid step must be positive");
      const double steps = (b - a) / c;
      if (std::abs(steps - std::round(steps)) > 1e-9)
        throw ConfigError("grid step must divide the interval");
    } else {
      if (!(c >= 1.0) || c != std::round(c))
        throw ConfigError("uniform sample count must be a positive integer");
    }
  }
};

// Grid points generated by index (a + k*c, final point forced to b exactly)
// so endpoints never drift.
inline Eigen::VectorXd sample_grid(const SamplingSpec& spec) {
  if (spec.kind != SamplingSpec::Kind::Grid)
    throw ConfigError("sample_grid requires an E[a,b,c] spec");
  spec.validate();
  const int count = static_cast<int>(std::round((spec.b - spec.a) / spec.c)) + 1;
  Eigen::VectorXd out(count);
  for (int k = 0; k < count; ++k) out[k] = spec.a + k * spec.c;
  out[count - 1] = spec.b;
  return out;
}

inline Eigen::VectorXd sample_uniform(const SamplingSpec& spec, Rng& rng) {
  if (spec.kind != SamplingSpec::Kind::Uniform)
    throw ConfigError("sample_uniform requires a U[a,b,c] spec");
  spec.validate();
  const int count = static_cast<int>(spec.c);
  Eigen::VectorXd out(count);
  for (int k = 0; k < count; ++k) out[k] = rng.uniform(spec.a, spec.b);
  return out;
}

enum class ExperimentMode { Keijzer, Nguyen };

struct BenchmarkSpec {
  std::string name;
  ExperimentMode mode;
  int dims = 1;
  std::function<double(double, double)> target;  // y ignored for 1-D
  std::vector<SamplingSpec> train;               // one spec per dimension
  std::vector<SamplingSpec> test;
};

namespace detail {

inline double harmonic_partial_sum(double x) {
  const int limit = static_cast<int>(std::floor(x));
  double sum = 0.0;
  for (int i = 1; i <= limit; ++i) sum += 1.0 / static_cast<double>(i);
  return sum;
}

}  // namespace detail

inline const std::vector<BenchmarkSpec>& benchmark_registry() {
  static const std::vector<BenchmarkSpec> registry = [] {
    using K = SamplingSpec::Kind;
    std::vector<BenchmarkSpec> r;
    auto sine = [](double x, double) { return 0.3 * x * std::sin(2.0 * M_PI * x); };
    r.push_back({"keijzer1", ExperimentMode::Keijzer, 1, sine,
                 {{K::Grid, -1.0, 1.0, 0.1}}, {{K::Grid, -1.0, 1.0, 0.001}}});
    r.push_back({"keijzer2", ExperimentMode::Keijzer, 1, sine,
                 {{K::Grid, -2.0, 2.0, 0.1}}, {{K::Grid, -2.0, 2.0, 0.001}}});
    r.push_back({"keijzer3", ExperimentMode::Keijzer, 1, sine,
                 {{K::Grid, -3.0, 3.0, 0.1}}, {{K::Grid, -3.0, 3.0, 0.001}}});
    r.push_back({"keijzer6", ExperimentMode::Keijzer, 1,
                 [](double x, double) { return detail::harmonic_partial_sum(x); },
                 {{K::Grid, 1.0, 50.0, 1.0}}, {{K::Grid, 1.0, 120.0, 1.0}}});
    r.push_back({"keijzer7", ExperimentMode::Keijzer, 1,
                 [](double x, double) { return std::log(x); },
                 {{K::Grid, 1.0, 100.0, 1.0}}, {{K::Grid, 1.0, 100.0, 0.1}}});
    r.push_back({"keijzer8", ExperimentMode::Keijzer, 1,
                 [](double x, double) { return std::sqrt(x); },
                 {{K::Grid, 1.0, 100.0, 1.0}}, {{K::Grid, 1.0, 100.0, 0.1}}});
    r.push_back({"keijzer9", ExperimentMode::Keijzer, 1,
                 [](double x, double) { return std::asinh(x); },
                 {{K::Grid, 1.0, 100.0, 1.0}}, {{K::Grid, 1.0, 100.0, 0.1}}});

    auto u = [](double a, double b, double c) {
      return SamplingSpec{K::Uniform, a, b, c};
    };
    auto poly = [](int degree) {
      return [degree](double x, double) {
        double sum = 0.0, p = 1.0;
        for (int k = 1; k <= degree; ++k) { p *= x; sum += p; }
        return sum;
      };
    };
    r.push_back({"nguyen1", ExperimentMode::Nguyen, 1, poly(3),
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen2", ExperimentMode::Nguyen, 1, poly(4),
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen3", ExperimentMode::Nguyen, 1, poly(5),
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen4", ExperimentMode::Nguyen, 1, poly(6),
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen5", ExperimentMode::Nguyen, 1,
                 [](double x, double) { return std::sin(x * x) * std::cos(x) - 1.0; },
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen6", ExperimentMode::Nguyen, 1,
                 [](double x, double) { return std::sin(x) + std::sin(x + x * x); },
                 {u(-1, 1, 20)}, {u(-1, 1, 20)}});
    r.push_back({"nguyen7", ExperimentMode::Nguyen, 1,
                 [](double x, double) { return std::log(x + 1.0) + std::log(x * x + 1.0); },
                 {u(0, 2, 20)}, {u(0, 2, 20)}});
    r.push_back({"nguyen8", ExperimentMode::Nguyen, 1,
                 [](double x, double) { return std::sqrt(x); },
                 {u(0, 4, 40)}, {u(0, 4, 40)}});
    r.push_back({"nguyen9", ExperimentMode::Nguyen, 2,
                 [](double x, double y) { return std::sin(x) + std::sin(y * y); },
                 {u(-1, 1, 100), u(-1, 1, 100)}, {u(-1, 1, 100), u(-1, 1, 100)}});
    r.push_back({"nguyen10", ExperimentMode::Nguyen, 2,
                 [](double x, double y) { return 2.0 * std::sin(x) * std::cos(y); },
                 {u(-1, 1, 100), u(-1, 1, 100)}, {u(-1, 1, 100), u(-1, 1, 100)}});
    return r;
  }();
  return registry;
}

inline const BenchmarkSpec& find_benchmark(const std::string& name) {
  for (const BenchmarkSpec& b : benchmark_registry())
    if (b.name == name) return b;
  throw ConfigError("unknown benchmark '" + name + "'");
}

inline Eigen::VectorXd target_eval(const BenchmarkSpec& spec,
                                   const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != spec.dims)
    throw ConfigError("input dimensionality mismatch for " + spec.name);
  Eigen::VectorXd out(inputs.rows());
  for (int i = 0; i < inputs.rows(); ++i) {
    const double x = inputs(i, 0);
    const double y = spec.dims == 2 ? inputs(i, 1) : 0.0;
    out[i] = spec.target(x, y);
    if (!std::isfinite(out[i]))
      throw ConfigError(spec.name + " target is non-finite inside its domain");
  }
  return out;
}

namespace detail {

inline Eigen::MatrixXd sample_inputs(const std::vector<SamplingSpec>& specs, Rng& rng) {
  const int dims = static_cast<int>(specs.size());
  // grids are 1-D only in the registered benchmarks
  if (specs[0].kind == SamplingSpec::Kind::Grid) {
    if (dims != 1) throw ConfigError("grid sampling is 1-D only");
    Eigen::VectorXd x = sample_grid(specs[0]);
    Eigen::MatrixXd m(x.size(), 1);
    m.col(0) = x;
    return m;
  }
  Eigen::MatrixXd m(static_cast<int>(specs[0].c), dims);
  for (int d = 0; d < dims; ++d) m.col(d) = sample_uniform(specs[d], rng);
  return m;
}

}  // namespace detail

// Training and testing datasets for one trial. Grids are deterministic;
// uniform train/test sets are drawn from independent per-trial streams, so
// the two sets share the interval but not the points.
inline std::pair<Dataset, Dataset> make_datasets(const BenchmarkSpec& spec,
                                                 std::uint64_t trial_seed) {
  Rng train_rng(derive_seed(trial_seed, 0xA11CE));
  Rng test_rng(derive_seed(trial_seed, 0xB0B01));
  Dataset train, test;
  train.inputs = detail::sample_inputs(spec.train, train_rng);
  test.inputs = detail::sample_inputs(spec.test, test_rng);
  train.targets = target_eval(spec, train.inputs);
  test.targets = target_eval(spec, test.inputs);
  return {std::move(train), std::move(test)};
}

struct Metrics {
  double rmse = 0.0;
  double max_abs_error = 0.0;
  double raw_fitness = 0.0;  // sum of absolute errors
};

inline Metrics metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  if (y.size() != t.size() || y.size() < 1)
    throw std::invalid_argument("metrics requires equal non-empty vectors");
  Eigen::ArrayXd err = (y - t).array().abs();
  Metrics m;
  m.rmse = std::sqrt(err.square().sum() / static_cast<double>(y.size()));
  m.max_abs_error = err.maxCoeff();
  m.raw_fitness = err.sum();
  return m;
}

struct StatSummary {
  double min = 0.0;
  double median = 0.0;  // lower middle element for even counts
  double max = 0.0;
  double mean = 0.0;
};

inline StatSummary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize requires >= 1 value");
  std::sort(values.begin(), values.end());
  StatSummary s;
  s.min = values.front();
  s.max = values.back();
  s.median = values[(values.size() - 1) / 2];
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

}  // namespace gprvm
