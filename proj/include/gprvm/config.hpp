#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "gprvm/bench.hpp"
#include "gprvm/kaizen.hpp"
#include "gprvm/report.hpp"

namespace gprvm {

// A complete run specification. Defaults reproduce the benchmark-family
// settings (keijzer: population 8, 2000 generations or fitness > 0.99999;
// nguyen: population 4, node-evaluation budget with the 0.01 success check),
// so `run --benchmark X` alone runs the reference configuration.
struct RunConfig {
  std::string benchmark;
  ExperimentMode mode = ExperimentMode::Keijzer;
  int trials = 50;
  std::uint64_t seed = 1;
  int parallel = 0;  // worker threads; <= 1 means sequential
  KaizenConfig kaizen;
};

inline RunConfig default_config(const std::string& benchmark) {
  const BenchmarkSpec& spec = find_benchmark(benchmark);
  RunConfig cfg;
  cfg.benchmark = benchmark;
  cfg.mode = spec.mode;
  cfg.kaizen.mode = spec.mode;
  if (spec.mode == ExperimentMode::Keijzer) {
    cfg.trials = 50;
    cfg.kaizen.gp.population_size = 8;
    cfg.kaizen.gp.prims = PrimitiveSet::keijzer();
    cfg.kaizen.max_generations = 2000;
    cfg.kaizen.fitness_stop = 0.99999;
  } else {
    cfg.trials = 100;
    cfg.kaizen.gp.population_size = 4;
    cfg.kaizen.gp.prims = PrimitiveSet::nguyen(spec.dims);
    cfg.kaizen.node_eval_budget = 2000000;
    cfg.kaizen.success_abs_error = 0.01;
    cfg.kaizen.max_generations = 1000000;  // safety cap; budget rules the stop
  }
  return cfg;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& path) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown key at " + (path.empty() ? key : path + "." + key));
}

template <typename T>
T fetch(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value at " + (path.empty() ? key : path + "." + key));
  }
}

}  // namespace detail

// Applies a (possibly partial) JSON document over `cfg`. Unknown keys are
// rejected with their full path.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::fetch;
  detail::reject_unknown_keys(
      j, {"benchmark", "mode", "trials", "seed", "parallel", "gp", "kaizen", "rvm"}, "");
  if (j.contains("benchmark")) {
    cfg = default_config(j.at("benchmark").get<std::string>());
  }
  if (cfg.benchmark.empty()) throw ConfigError("missing required key: benchmark");
  if (j.contains("mode")) {
    const ExperimentMode m = mode_from_name(j.at("mode").get<std::string>());
    if (m != cfg.mode)
      throw ConfigError("mode does not match benchmark family of " + cfg.benchmark);
  }
  cfg.trials = fetch(j, "trials", "", cfg.trials);
  cfg.seed = fetch(j, "seed", "", cfg.seed);
  cfg.parallel = fetch(j, "parallel", "", cfg.parallel);
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.parallel < 0) throw ConfigError("parallel must be >= 0");

  if (j.contains("gp")) {
    const auto& g = j.at("gp");
    detail::reject_unknown_keys(
        g, {"population_size", "max_depth", "crossover_prob", "mutation_prob",
            "mutation_uniform_weight", "init_depth_min", "init_depth_max",
            "mutation_subtree_depth"}, "gp");
    GpConfig& gp = cfg.kaizen.gp;
    gp.population_size = fetch(g, "population_size", "gp", gp.population_size);
    gp.max_depth = fetch(g, "max_depth", "gp", gp.max_depth);
    gp.crossover_prob = fetch(g, "crossover_prob", "gp", gp.crossover_prob);
    gp.mutation_prob = fetch(g, "mutation_prob", "gp", gp.mutation_prob);
    gp.mutation_uniform_weight =
        fetch(g, "mutation_uniform_weight", "gp", gp.mutation_uniform_weight);
    gp.init_depth_min = fetch(g, "init_depth_min", "gp", gp.init_depth_min);
    gp.init_depth_max = fetch(g, "init_depth_max", "gp", gp.init_depth_max);
    gp.mutation_subtree_depth =
        fetch(g, "mutation_subtree_depth", "gp", gp.mutation_subtree_depth);
    try {
      gp.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("gp: ") + e.what());
    }
  }

  if (j.contains("kaizen")) {
    const auto& k = j.at("kaizen");
    detail::reject_unknown_keys(
        k, {"max_generations", "fitness_stop", "node_eval_budget",
            "success_abs_error", "cache_capacity"}, "kaizen");
    KaizenConfig& kz = cfg.kaizen;
    kz.max_generations = fetch(k, "max_generations", "kaizen", kz.max_generations);
    kz.fitness_stop = fetch(k, "fitness_stop", "kaizen", kz.fitness_stop);
    kz.node_eval_budget = fetch(k, "node_eval_budget", "kaizen", kz.node_eval_budget);
    kz.success_abs_error = fetch(k, "success_abs_error", "kaizen", kz.success_abs_error);
    kz.cache_capacity = fetch(k, "cache_capacity", "kaizen", kz.cache_capacity);
    if (kz.max_generations < 0) throw ConfigError("kaizen.max_generations must be >= 0");
  }

  if (j.contains("rvm")) {
    const auto& v = j.at("rvm");
    detail::reject_unknown_keys(
        v, {"alpha_ceiling", "beta_max", "tol_dln_alpha", "tol_dln_beta",
            "max_sweeps", "jitter_scale", "jitter_retries", "min_column_norm",
            "max_active_correlation"}, "rvm");
    RvmConfig& rv = cfg.kaizen.rvm;
    rv.alpha_ceiling = fetch(v, "alpha_ceiling", "rvm", rv.alpha_ceiling);
    rv.beta_max = fetch(v, "beta_max", "rvm", rv.beta_max);
    rv.tol_dln_alpha = fetch(v, "tol_dln_alpha", "rvm", rv.tol_dln_alpha);
    rv.tol_dln_beta = fetch(v, "tol_dln_beta", "rvm", rv.tol_dln_beta);
    rv.max_sweeps = fetch(v, "max_sweeps", "rvm", rv.max_sweeps);
    rv.jitter_scale = fetch(v, "jitter_scale", "rvm", rv.jitter_scale);
    rv.jitter_retries = fetch(v, "jitter_retries", "rvm", rv.jitter_retries);
    rv.min_column_norm = fetch(v, "min_column_norm", "rvm", rv.min_column_norm);
    rv.max_active_correlation =
        fetch(v, "max_active_correlation", "rvm", rv.max_active_correlation);
    if (rv.max_sweeps < 1) throw ConfigError("rvm.max_sweeps must be >= 1");
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

// Fully resolved configuration, embedded in every report for reproducibility.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  const GpConfig& gp = cfg.kaizen.gp;
  const KaizenConfig& kz = cfg.kaizen;
  const RvmConfig& rv = cfg.kaizen.rvm;
  return {
      {"benchmark", cfg.benchmark},
      {"mode", mode_name(cfg.mode)},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"parallel", cfg.parallel},
      {"gp",
       {{"population_size", gp.population_size},
        {"max_depth", gp.max_depth},
        {"crossover_prob", gp.crossover_prob},
        {"mutation_prob", gp.mutation_prob},
        {"mutation_uniform_weight", gp.mutation_uniform_weight},
        {"init_depth_min", gp.init_depth_min},
        {"init_depth_max", gp.init_depth_max},
        {"mutation_subtree_depth", gp.mutation_subtree_depth}}},
      {"kaizen",
       {{"max_generations", kz.max_generations},
        {"fitness_stop", kz.fitness_stop},
        {"node_eval_budget", kz.node_eval_budget},
        {"success_abs_error", kz.success_abs_error},
        {"cache_capacity", kz.cache_capacity}}},
      {"rvm",
       {{"alpha_ceiling", rv.alpha_ceiling},
        {"beta_max", rv.beta_max},
        {"tol_dln_alpha", rv.tol_dln_alpha},
        {"tol_dln_beta", rv.tol_dln_beta},
        {"max_sweeps", rv.max_sweeps},
        {"jitter_scale", rv.jitter_scale},
        {"jitter_retries", rv.jitter_retries},
        {"min_column_norm", rv.min_column_norm},
        {"max_active_correlation", rv.max_active_correlation}}}};
}

}  // namespace gprvm
