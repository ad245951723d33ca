#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "gprvm/config.hpp"
#include "gprvm/kaizen.hpp"
#include "gprvm/report.hpp"

namespace gprvm {

// Trial k runs with seed = base_seed + k and owns its full state, so results
// are independent of scheduling. Reports are assembled in trial order.
inline ExperimentReport run_experiment(const RunConfig& cfg) {
  const BenchmarkSpec& spec = find_benchmark(cfg.benchmark);
  std::vector<TrialReport> trials(static_cast<std::size_t>(cfg.trials));

  auto run_one = [&](int k) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
    auto [train, test] = make_datasets(spec, seed);
    trials[static_cast<std::size_t>(k)] =
        run_trial(cfg.kaizen, cfg.benchmark, train, test, seed);
  };

  if (cfg.parallel > 1) {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int nw = std::min(cfg.parallel, cfg.trials);
    workers.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
      workers.emplace_back([&] {
        for (int k = next.fetch_add(1); k < cfg.trials; k = next.fetch_add(1))
          run_one(k);
      });
    }
    for (std::thread& t : workers) t.join();
  } else {
    for (int k = 0; k < cfg.trials; ++k) run_one(k);
  }

  ExperimentReport report;
  report.benchmark = cfg.benchmark;
  report.mode = cfg.mode;
  report.config = config_to_json(cfg);
  report.trials = std::move(trials);
  report.stats = aggregate(report.trials);
  return report;
}

}  // namespace gprvm
