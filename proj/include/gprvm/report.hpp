#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprvm/bench.hpp"
#include "gprvm/kaizen.hpp"

namespace gprvm {

inline constexpr int kReportSchemaVersion = 1;

struct TrialStats {
  StatSummary adj_r2, rmse_train, rmse_test, max_abs_error_train,
      raw_fitness_train, nfes, node_evals;
  int success_count = 0;
  int trials = 0;
};

inline TrialStats aggregate(const std::vector<TrialReport>& trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate requires >= 1 trial");
  auto collect = [&](auto&& get) {
    std::vector<double> v;
    v.reserve(trials.size());
    for (const TrialReport& t : trials) v.push_back(get(t));
    return summarize(std::move(v));
  };
  TrialStats s;
  s.adj_r2 = collect([](const TrialReport& t) { return t.adj_r2; });
  s.rmse_train = collect([](const TrialReport& t) { return t.train.rmse; });
  s.rmse_test = collect([](const TrialReport& t) { return t.test.rmse; });
  s.max_abs_error_train = collect([](const TrialReport& t) { return t.train.max_abs_error; });
  s.raw_fitness_train = collect([](const TrialReport& t) { return t.train.raw_fitness; });
  s.nfes = collect([](const TrialReport& t) { return static_cast<double>(t.nfes); });
  s.node_evals = collect([](const TrialReport& t) { return static_cast<double>(t.node_evals); });
  for (const TrialReport& t : trials)
    if (t.success) ++s.success_count;
  s.trials = static_cast<int>(trials.size());
  return s;
}

struct ExperimentReport {
  int schema_version = kReportSchemaVersion;
  std::string benchmark;
  ExperimentMode mode = ExperimentMode::Keijzer;
  nlohmann::json config;  // fully resolved run configuration
  std::vector<TrialReport> trials;
  TrialStats stats;
};

namespace detail {

// JSON has no encoding for non-finite doubles; store them as null and read
// null back as NaN (test-set metrics can legitimately overflow).
inline nlohmann::json jnum(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}
inline double jget(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

inline nlohmann::json summary_to_json(const StatSummary& s) {
  return {{"min", jnum(s.min)}, {"median", jnum(s.median)},
          {"max", jnum(s.max)}, {"mean", jnum(s.mean)}};
}
inline StatSummary summary_from_json(const nlohmann::json& j) {
  return {jget(j.at("min")), jget(j.at("median")), jget(j.at("max")), jget(j.at("mean"))};
}

}  // namespace detail

inline std::string mode_name(ExperimentMode m) {
  return m == ExperimentMode::Keijzer ? "keijzer" : "nguyen";
}
inline ExperimentMode mode_from_name(const std::string& s) {
  if (s == "keijzer") return ExperimentMode::Keijzer;
  if (s == "nguyen") return ExperimentMode::Nguyen;
  throw ConfigError("unknown mode '" + s + "' (expected keijzer or nguyen)");
}

inline nlohmann::json trial_to_json(const TrialReport& t) {
  using detail::jnum;
  nlohmann::json j;
  j["benchmark"] = t.benchmark;
  j["seed"] = t.seed;
  j["success"] = t.success;
  j["train"] = {{"rmse", jnum(t.train.rmse)},
                {"max_abs_error", jnum(t.train.max_abs_error)},
                {"raw_fitness", jnum(t.train.raw_fitness)}};
  j["test"] = {{"rmse", jnum(t.test.rmse)},
               {"max_abs_error", jnum(t.test.max_abs_error)},
               {"raw_fitness", jnum(t.test.raw_fitness)}};
  j["adj_r2"] = jnum(t.adj_r2);
  j["nfes"] = t.nfes;
  j["node_evals"] = t.node_evals;
  j["iterations"] = t.iterations;
  j["wall_time_s"] = t.wall_time_s;
  j["final_expression"] = t.final_expression;
  j["model"] = {{"dims", t.dims},
                {"weights", t.weights},
                {"features", t.feature_exprs},
                {"beta", jnum(t.beta)}};
  j["diagnostics"] = {{"min_action_rel_gain", jnum(t.min_action_rel_gain)},
                      {"max_gamma_violation", jnum(t.max_gamma_violation)},
                      {"fitness_monotone", t.fitness_monotone}};
  return j;
}

inline TrialReport trial_from_json(const nlohmann::json& j) {
  using detail::jget;
  TrialReport t;
  t.benchmark = j.at("benchmark").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.success = j.at("success").get<bool>();
  t.train = {jget(j.at("train").at("rmse")), jget(j.at("train").at("max_abs_error")),
             jget(j.at("train").at("raw_fitness"))};
  t.test = {jget(j.at("test").at("rmse")), jget(j.at("test").at("max_abs_error")),
            jget(j.at("test").at("raw_fitness"))};
  t.adj_r2 = jget(j.at("adj_r2"));
  t.nfes = j.at("nfes").get<std::uint64_t>();
  t.node_evals = j.at("node_evals").get<std::uint64_t>();
  t.iterations = j.at("iterations").get<int>();
  t.wall_time_s = j.at("wall_time_s").get<double>();
  t.final_expression = j.at("final_expression").get<std::string>();
  t.dims = j.at("model").at("dims").get<int>();
  t.weights = j.at("model").at("weights").get<std::vector<double>>();
  t.feature_exprs = j.at("model").at("features").get<std::vector<std::string>>();
  t.beta = jget(j.at("model").at("beta"));
  t.min_action_rel_gain = jget(j.at("diagnostics").at("min_action_rel_gain"));
  t.max_gamma_violation = jget(j.at("diagnostics").at("max_gamma_violation"));
  t.fitness_monotone = j.at("diagnostics").at("fitness_monotone").get<bool>();
  return t;
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["benchmark"] = r.benchmark;
  j["mode"] = mode_name(r.mode);
  j["config"] = r.config;
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialReport& t : r.trials) trials.push_back(trial_to_json(t));
  j["trials"] = std::move(trials);
  j["aggregate"] = {{"trials", r.stats.trials},
                    {"success_count", r.stats.success_count},
                    {"adj_r2", detail::summary_to_json(r.stats.adj_r2)},
                    {"rmse_train", detail::summary_to_json(r.stats.rmse_train)},
                    {"rmse_test", detail::summary_to_json(r.stats.rmse_test)},
                    {"max_abs_error_train", detail::summary_to_json(r.stats.max_abs_error_train)},
                    {"raw_fitness_train", detail::summary_to_json(r.stats.raw_fitness_train)},
                    {"nfes", detail::summary_to_json(r.stats.nfes)},
                    {"node_evals", detail::summary_to_json(r.stats.node_evals)}};
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion)
    throw ConfigError("unsupported report schema version");
  r.benchmark = j.at("benchmark").get<std::string>();
  r.mode = mode_from_name(j.at("mode").get<std::string>());
  r.config = j.at("config");
  for (const auto& t : j.at("trials")) r.trials.push_back(trial_from_json(t));
  const auto& a = j.at("aggregate");
  r.stats.trials = a.at("trials").get<int>();
  r.stats.success_count = a.at("success_count").get<int>();
  r.stats.adj_r2 = detail::summary_from_json(a.at("adj_r2"));
  r.stats.rmse_train = detail::summary_from_json(a.at("rmse_train"));
  r.stats.rmse_test = detail::summary_from_json(a.at("rmse_test"));
  r.stats.max_abs_error_train = detail::summary_from_json(a.at("max_abs_error_train"));
  r.stats.raw_fitness_train = detail::summary_from_json(a.at("raw_fitness_train"));
  r.stats.nfes = detail::summary_from_json(a.at("nfes"));
  r.stats.node_evals = detail::summary_from_json(a.at("node_evals"));
  return r;
}

inline void write_report_json(const ExperimentReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << report_to_json(r).dump(2) << '\n';
}

inline ExperimentReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report file '" + path + "'");
  return report_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Result tables in the shape of the benchmark literature. Values use 3
// significant digits in scientific notation (1.00E+00); NFE counts print as
// integers and node evaluations in thousands.

namespace detail {

inline std::string sci3(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2E", v);
  return buf;
}
inline std::string fixed2(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string integer(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

// Min/Med./Max rows of training Adj.R^2, training RMSE and NFEs per report.
inline std::string render_keijzer_table(const std::vector<ExperimentReport>& reports,
                                        bool csv) {
  std::ostringstream out;
  const char* sep = csv ? "," : "";
  if (csv)
    out << "schema_version,benchmark,stat,adj_r2,rmse,nfes\n";
  else
    out << detail::pad("F", 12) << detail::pad("Stat", 6) << detail::pad("Adj. R^2", 12)
        << detail::pad("RMSE", 12) << "NFEs\n";
  for (const ExperimentReport& r : reports) {
    struct Row { const char* label; double adj, rmse, nfe; };
    const Row rows[3] = {
        {"Min", r.stats.adj_r2.min, r.stats.rmse_train.min, r.stats.nfes.min},
        {"Med.", r.stats.adj_r2.median, r.stats.rmse_train.median, r.stats.nfes.median},
        {"Max", r.stats.adj_r2.max, r.stats.rmse_train.max, r.stats.nfes.max}};
    for (int i = 0; i < 3; ++i) {
      if (csv) {
        out << kReportSchemaVersion << sep << r.benchmark << sep << rows[i].label
            << sep << detail::sci3(rows[i].adj) << sep << detail::sci3(rows[i].rmse)
            << sep << detail::integer(rows[i].nfe) << '\n';
      } else {
        out << detail::pad(i == 0 ? r.benchmark : "", 12)
            << detail::pad(rows[i].label, 6) << detail::pad(detail::sci3(rows[i].adj), 12)
            << detail::pad(detail::sci3(rows[i].rmse), 12)
            << detail::integer(rows[i].nfe) << '\n';
      }
    }
  }
  return out.str();
}

// One row per report: trial means of max error, raw fitness, train RMSE,
// function evaluations, node evaluations (thousands), test RMSE, plus the
// success count.
inline std::string render_nguyen_table(const std::vector<ExperimentReport>& reports,
                                       bool csv) {
  std::ostringstream out;
  if (csv)
    out << "schema_version,benchmark,max_error,raw_fitness,rmse_training,"
           "func_eval,node_eval_k,rmse_testing,succ_runs\n";
  else
    out << detail::pad("Problem", 12) << detail::pad("Max. Error", 12)
        << detail::pad("Raw Fitness", 13) << detail::pad("RMSE Training", 15)
        << detail::pad("Func. Eval.", 13) << detail::pad("Node Eval.(k)", 15)
        << detail::pad("RMSE Testing", 14) << "Succ. Runs\n";
  for (const ExperimentReport& r : reports) {
    const double node_k = r.stats.node_evals.mean / 1000.0;
    if (csv) {
      out << kReportSchemaVersion << ',' << r.benchmark << ','
          << detail::sci3(r.stats.max_abs_error_train.mean) << ','
          << detail::sci3(r.stats.raw_fitness_train.mean) << ','
          << detail::sci3(r.stats.rmse_train.mean) << ','
          << detail::fixed2(r.stats.nfes.mean) << ',' << detail::fixed2(node_k) << ','
          << detail::sci3(r.stats.rmse_test.mean) << ',' << r.stats.success_count << '\n';
    } else {
      out << detail::pad(r.benchmark, 12)
          << detail::pad(detail::sci3(r.stats.max_abs_error_train.mean), 12)
          << detail::pad(detail::sci3(r.stats.raw_fitness_train.mean), 13)
          << detail::pad(detail::sci3(r.stats.rmse_train.mean), 15)
          << detail::pad(detail::fixed2(r.stats.nfes.mean), 13)
          << detail::pad(detail::fixed2(node_k), 15)
          << detail::pad(detail::sci3(r.stats.rmse_test.mean), 14)
          << r.stats.success_count << '\n';
    }
  }
  return out.str();
}

inline std::string render_table(const std::vector<ExperimentReport>& reports, bool csv) {
  if (reports.empty()) throw ConfigError("table requires at least one report");
  const ExperimentMode mode = reports.front().mode;
  for (const ExperimentReport& r : reports)
    if (r.mode != mode)
      throw ConfigError("cannot mix keijzer and nguyen reports in one table");
  return mode == ExperimentMode::Keijzer ? render_keijzer_table(reports, csv)
                                         : render_nguyen_table(reports, csv);
}

// CSV summary written next to the JSON report by the run command.
inline void write_report_csv(const ExperimentReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  std::vector<ExperimentReport> one;
  one.push_back(r);
  out << render_table(one, /*csv=*/true);
}

}  // namespace gprvm
