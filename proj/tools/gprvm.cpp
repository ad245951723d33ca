#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gprvm/config.hpp"
#include "gprvm/experiment.hpp"
#include "gprvm/report.hpp"

namespace {

using namespace gprvm;

std::string csv_path_for(const std::string& json_path) {
  const std::string suffix = ".json";
  if (json_path.size() > suffix.size() &&
      json_path.compare(json_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return json_path.substr(0, json_path.size() - suffix.size()) + ".csv";
  return json_path + ".csv";
}

int cmd_run(const std::string& config_path, const std::string& benchmark,
            int trials, long long seed, int parallel, const std::string& out) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = load_config_file(config_path);
    if (!benchmark.empty() && benchmark != cfg.benchmark)
      throw ConfigError("--benchmark conflicts with the benchmark in " + config_path);
  } else {
    if (benchmark.empty())
      throw ConfigError("either --benchmark or --config is required");
    cfg = default_config(benchmark);
  }
  if (trials > 0) cfg.trials = trials;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (parallel >= 0) cfg.parallel = parallel;

  ExperimentReport report = run_experiment(cfg);
  write_report_json(report, out);
  write_report_csv(report, csv_path_for(out));

  std::vector<ExperimentReport> one;
  one.push_back(report);
  std::cout << render_table(one, /*csv=*/false);
  std::cout << "report: " << out << "\nsummary: " << csv_path_for(out) << "\n";
  return 0;
}

int cmd_table(const std::vector<std::string>& files, bool csv, const std::string& out) {
  std::vector<ExperimentReport> reports;
  for (const std::string& f : files) reports.push_back(read_report_json(f));
  const std::string text = render_table(reports, csv);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out);
    if (!os) throw ConfigError("cannot open output file '" + out + "'");
    os << text;
  }
  return 0;
}

struct StoredModel {
  int dims = 1;
  std::vector<double> weights;
  std::vector<std::string> features;
};

StoredModel model_from_json(const nlohmann::json& j) {
  StoredModel m;
  m.dims = j.at("dims").get<int>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.features = j.at("features").get<std::vector<std::string>>();
  if (m.weights.size() != m.features.size())
    throw ConfigError("model file: weights/features length mismatch");
  return m;
}

int cmd_predict(const std::string& model_path, int trial,
                const std::vector<double>& inputs) {
  std::ifstream in(model_path);
  if (!in) throw ConfigError("cannot open model file '" + model_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model parse error: ") + e.what());
  }

  StoredModel model;
  if (j.contains("trials")) {
    const auto& trials = j.at("trials");
    if (trials.empty()) throw ConfigError("report has no trials");
    int pick = trial;
    if (pick < 0) {  // best trial by Adj.R^2
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < static_cast<int>(trials.size()); ++k) {
        const auto& a = trials[k].at("adj_r2");
        const double v = a.is_null() ? -std::numeric_limits<double>::infinity()
                                     : a.get<double>();
        if (pick < 0 || v > best) { best = v; pick = k; }
      }
    }
    if (pick >= static_cast<int>(trials.size()))
      throw ConfigError("--trial out of range");
    model = model_from_json(trials[pick].at("model"));
  } else {
    model = model_from_json(j);
  }

  if (static_cast<int>(inputs.size()) != model.dims)
    throw ConfigError("arity mismatch: model has " + std::to_string(model.dims) +
                      " input(s), got " + std::to_string(inputs.size()));

  Eigen::MatrixXd x(1, model.dims);
  for (int d = 0; d < model.dims; ++d) x(0, d) = inputs[static_cast<std::size_t>(d)];
  double y = 0.0;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    NodePtr f = parse(model.features[i]);
    y += model.weights[i] * eval_rows(*f, x)[0];
  }
  std::printf("%.17g\n", y);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-RVM symbolic regression: benchmark runner and model tools"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run seeded benchmark trials");
  std::string run_benchmark, run_config, run_out = "report.json";
  int run_trials = -1, run_parallel = -1;
  long long run_seed = -1;
  run->add_option("--benchmark", run_benchmark, "benchmark name (keijzer1..9, nguyen1..10)");
  run->add_option("--config", run_config, "JSON config file");
  run->add_option("--trials", run_trials, "number of trials");
  run->add_option("--seed", run_seed, "base seed; trial k uses seed + k");
  run->add_option("--parallel", run_parallel, "worker threads (0/1 = sequential)");
  run->add_option("--out", run_out, "output report path (.json; CSV written alongside)");

  auto* table = app.add_subcommand("table", "render summary tables from reports");
  std::vector<std::string> table_files;
  bool table_csv = false;
  std::string table_out;
  table->add_option("files", table_files, "report JSON files")->required();
  table->add_flag("--csv", table_csv, "emit CSV instead of aligned text");
  table->add_option("--out", table_out, "write to file instead of stdout");

  auto* predict = app.add_subcommand("predict", "evaluate a stored model");
  std::string predict_model;
  int predict_trial = -1;
  std::vector<double> predict_inputs;
  predict->add_option("--model", predict_model, "report or model JSON file")->required();
  predict->add_option("--trial", predict_trial, "trial index (default: best Adj.R^2)");
  predict->add_option("--input", predict_inputs, "input value(s), one per dimension")
      ->required()
      ->expected(1, 2);

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return cmd_run(run_config, run_benchmark, run_trials, run_seed, run_parallel, run_out);
    if (table->parsed()) return cmd_table(table_files, table_csv, table_out);
    if (predict->parsed()) return cmd_predict(predict_model, predict_trial, predict_inputs);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  } catch (const gprvm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const gprvm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
