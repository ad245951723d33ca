#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gprvm/bench.hpp"
#include "gprvm/eval_cache.hpp"
#include "gprvm/gp.hpp"
#include "gprvm/rvm.hpp"

namespace gprvm {

class DegenerateTarget : public std::invalid_argument {
 public:
  DegenerateTarget() : std::invalid_argument("degenerate target") {}
};

class OverParameterized : public std::invalid_argument {
 public:
  OverParameterized() : std::invalid_argument("over-parameterized model") {}
};

inline double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  if (y.size() != t.size() || t.size() < 2)
    throw std::invalid_argument("r_squared requires equal vectors, N >= 2");
  const double mean = t.mean();
  const double sst = (t.array() - mean).square().sum();
  if (!(sst > 0.0)) throw DegenerateTarget();
  const double sse = (t - y).squaredNorm();
  return 1.0 - sse / sst;
}

// Adj.R^2 = R^2 - (1 - R^2) p / (N - p - 1); may be negative for poor models.
inline double adjusted_r_squared(double r2, int n, int p) {
  if (n - p - 1 < 1) throw OverParameterized();
  return r2 - (1.0 - r2) * static_cast<double>(p) / static_cast<double>(n - p - 1);
}

// Highest training Adj.R^2 wins; ties within 1e-12 go to fewer active
// functions, then to the earlier snapshot. Returns -1 when no snapshot
// admits the adjusted statistic (p too large for N).
inline int select_model(const std::vector<SparseLinearModel>& snapshots,
                        const Eigen::MatrixXd& pool_columns,
                        const Eigen::VectorXd& t) {
  if (snapshots.empty()) throw std::invalid_argument("select_model: no snapshots");
  const int n = static_cast<int>(t.size());
  int best = -1;
  double best_adj = -std::numeric_limits<double>::infinity();
  int best_p = 0;
  for (int idx = 0; idx < static_cast<int>(snapshots.size()); ++idx) {
    const SparseLinearModel& m = snapshots[idx];
    const int p = static_cast<int>(m.active.size());
    if (n - p - 1 < 1) continue;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < p; ++j) y += m.mean[j] * pool_columns.col(m.active[j]);
    const double adj = adjusted_r_squared(r_squared(y, t), n, p);
    if (best < 0 || adj > best_adj + 1e-12 ||
        (std::abs(adj - best_adj) <= 1e-12 && p < best_p)) {
      best = idx;
      best_adj = adj;
      best_p = p;
    }
  }
  return best;
}

// The current best complete solution: a sparse weighted sum of canonical
// feature expressions with its training fitness (Adj.R^2).
struct Standard {
  std::vector<CanonicalExpr> features;  // aligned with weights
  Eigen::VectorXd weights;
  double beta = 0.0;
  double fitness = -std::numeric_limits<double>::infinity();
  int iteration_found = 0;
  SparseLinearModel model;              // learner state at acceptance
  Eigen::VectorXd train_predictions;
};

struct KaizenConfig {
  ExperimentMode mode = ExperimentMode::Keijzer;
  int max_generations = 2000;      // generation budget (safety cap in nguyen mode)
  double fitness_stop = 0.99999;   // keijzer stopping fitness
  std::uint64_t node_eval_budget = 2000000;  // nguyen stopping budget
  double success_abs_error = 0.01;           // nguyen success threshold
  GpConfig gp;
  RvmConfig rvm;
  std::size_t cache_capacity = 100000;
};

inline NodePtr weighted_sum_tree(const std::vector<CanonicalExpr>& features,
                                 const Eigen::VectorXd& weights) {
  NodePtr sum;
  for (int j = 0; j < static_cast<int>(features.size()); ++j) {
    NodePtr term = Node::make(Op::Mul, Node::constant(weights[j]), features[j].expr);
    sum = sum ? Node::make(Op::Add, std::move(sum), std::move(term)) : std::move(term);
  }
  return sum ? sum : Node::constant(0.0);
}

struct TrialReport {
  std::string benchmark;
  std::uint64_t seed = 0;
  bool success = false;
  Metrics train, test;
  double adj_r2 = -std::numeric_limits<double>::infinity();
  std::uint64_t nfes = 0;
  std::uint64_t node_evals = 0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string final_expression;
  std::vector<double> weights;
  std::vector<std::string> feature_exprs;
  int dims = 1;
  double beta = 0.0;
  // learner health, aggregated across every fit in the run
  double min_action_rel_gain = std::numeric_limits<double>::infinity();
  double max_gamma_violation = 0.0;
  bool fitness_monotone = true;
};

// One PDCA run: Plan (GP proposes candidate features), Do (pool them with the
// standard's features and evaluate through the cache), Check (sequential RVM
// plus Adj.R^2 model selection), Act (accept only strict improvement).
class KaizenRun {
 public:
  KaizenRun(const KaizenConfig& cfg, const Dataset& train, std::uint64_t seed)
      : cfg_(cfg),
        train_(train),
        rng_(derive_seed(seed, 0x6E0)),
        cache_(train.inputs, cfg.cache_capacity) {
    cfg_.gp.validate();
    if (train_.targets.size() < 2) throw std::invalid_argument("need N >= 2");
    const double mean = train_.targets.mean();
    if (!((train_.targets.array() - mean).square().sum() > 0.0))
      throw DegenerateTarget();
    pop_ = init_population(cfg_.gp, rng_);
    fit_and_accept(subtree_pool(pop_.individuals));
  }

  // One Kaizen iteration; returns true when the standard improved.
  bool step() {
    std::vector<CanonicalExpr> candidates = propose_features(pop_, cfg_.gp, rng_);
    ++iteration_;
    const double before = standard_.fitness;
    const bool improved = fit_and_accept(candidates);
    if (standard_.fitness < before) fitness_monotone_ = false;
    return improved;
  }

  bool success() const {
    if (cfg_.mode == ExperimentMode::Keijzer)
      return standard_.fitness > cfg_.fitness_stop;
    if (standard_.train_predictions.size() == 0) return false;
    const double max_err =
        (standard_.train_predictions - train_.targets).cwiseAbs().maxCoeff();
    return max_err <= cfg_.success_abs_error;
  }

  bool stop_reached() const {
    if (cfg_.mode == ExperimentMode::Keijzer)
      return iteration_ >= cfg_.max_generations || standard_.fitness > cfg_.fitness_stop;
    return success() || cache_.node_evals() >= cfg_.node_eval_budget ||
           iteration_ >= cfg_.max_generations;
  }

  void run_to_stop() {
    while (!stop_reached()) step();
  }

  const Standard& standard() const { return standard_; }
  const Population& population() const { return pop_; }
  const EvalCache& cache() const { return cache_; }
  int iteration() const { return iteration_; }
  double min_action_rel_gain() const { return min_action_rel_gain_; }
  double max_gamma_violation() const { return max_gamma_violation_; }
  bool fitness_monotone() const { return fitness_monotone_; }

  TrialReport report(const Dataset& test, const std::string& benchmark_name,
                     std::uint64_t seed) const {
    TrialReport r;
    r.benchmark = benchmark_name;
    r.seed = seed;
    r.success = success();
    r.iterations = iteration_;
    r.nfes = cache_.feature_evals();
    r.node_evals = cache_.node_evals();
    r.adj_r2 = standard_.fitness;
    r.beta = standard_.beta;
    r.dims = static_cast<int>(train_.inputs.cols());
    r.min_action_rel_gain = min_action_rel_gain_;
    r.max_gamma_violation = max_gamma_violation_;
    r.fitness_monotone = fitness_monotone_;

    Eigen::VectorXd y_train = standard_.train_predictions.size() > 0
                                  ? standard_.train_predictions
                                  : Eigen::VectorXd::Zero(train_.targets.size());
    r.train = metrics(y_train, train_.targets);

    Eigen::VectorXd y_test = Eigen::VectorXd::Zero(test.targets.size());
    for (int j = 0; j < static_cast<int>(standard_.features.size()); ++j) {
      Eigen::ArrayXd col = eval_rows(*standard_.features[j].expr, test.inputs);
      y_test += standard_.weights[j] * col.matrix();
    }
    r.test = metrics(y_test, test.targets);

    r.final_expression = serialize(weighted_sum_tree(standard_.features, standard_.weights));
    for (int j = 0; j < static_cast<int>(standard_.features.size()); ++j) {
      r.weights.push_back(standard_.weights[j]);
      r.feature_exprs.push_back(standard_.features[j].key);
    }
    return r;
  }

 private:
  // Pool the standard's features with the new candidates, drop non-finite and
  // duplicate columns, fit, select by Adj.R^2, accept on strict improvement.
  bool fit_and_accept(const std::vector<CanonicalExpr>& candidates) {
    const int n = static_cast<int>(train_.targets.size());
    std::vector<CanonicalExpr> pool;
    std::vector<Eigen::VectorXd> columns;
    std::unordered_set<std::string> keys;
    std::unordered_set<std::uint64_t> column_hashes;

    auto offer = [&](const CanonicalExpr& ce) {
      if (!keys.insert(ce.key).second) return;
      std::optional<Eigen::VectorXd> col = cache_.evaluate(ce);
      if (!col) return;  // non-finite on the training grid
      const std::uint64_t h = fnv1a64(std::string_view(
          reinterpret_cast<const char*>(col->data()), sizeof(double) * col->size()));
      if (!column_hashes.insert(h).second) return;  // duplicate column
      pool.push_back(ce);
      columns.push_back(std::move(*col));
    };
    for (const CanonicalExpr& ce : standard_.features) offer(ce);
    for (const CanonicalExpr& ce : candidates) offer(ce);
    if (pool.empty()) return false;

    DesignMatrix dm;
    dm.columns.resize(n, static_cast<int>(pool.size()));
    dm.ids.resize(pool.size());
    for (int j = 0; j < static_cast<int>(pool.size()); ++j) {
      dm.columns.col(j) = columns[j];
      dm.ids[j] = j;
    }

    FitResult fit;
    try {
      fit = sequential_fit(dm, train_.targets, cfg_.rvm);
    } catch (const NoAdmissibleBasis&) {
      return false;
    }
    min_action_rel_gain_ =
        std::min(min_action_rel_gain_, fit.diagnostics.min_action_rel_gain);
    max_gamma_violation_ =
        std::max(max_gamma_violation_, fit.diagnostics.max_gamma_violation);

    const int best = select_model(fit.snapshots, dm.columns, train_.targets);
    if (best < 0) return false;
    const SparseLinearModel& mdl = fit.snapshots[best];
    const int p = static_cast<int>(mdl.active.size());

    // Ordered accumulation mirrors the serialized weighted-sum expression, so
    // the reported fitness reproduces bit-for-bit through a parse round-trip.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < p; ++j) y += mdl.mean[j] * dm.columns.col(mdl.active[j]);
    const double adj = adjusted_r_squared(r_squared(y, train_.targets), n, p);
    if (!(adj > standard_.fitness)) return false;

    standard_.features.clear();
    for (int j = 0; j < p; ++j) standard_.features.push_back(pool[mdl.active[j]]);
    standard_.weights = mdl.mean;
    standard_.beta = mdl.beta;
    standard_.fitness = adj;
    standard_.iteration_found = iteration_;
    standard_.model = mdl;
    standard_.train_predictions = std::move(y);
    return true;
  }

  KaizenConfig cfg_;
  Dataset train_;
  Rng rng_;
  EvalCache cache_;
  Population pop_;
  Standard standard_;
  int iteration_ = 0;
  double min_action_rel_gain_ = std::numeric_limits<double>::infinity();
  double max_gamma_violation_ = 0.0;
  bool fitness_monotone_ = true;
};

inline TrialReport run_trial(const KaizenConfig& cfg, const std::string& benchmark,
                             const Dataset& train, const Dataset& test,
                             std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  KaizenRun run(cfg, train, seed);
  run.run_to_stop();
  TrialReport r = run.report(test, benchmark, seed);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace gprvm
