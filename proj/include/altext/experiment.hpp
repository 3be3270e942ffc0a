#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "altext/config.hpp"
#include "altext/engine.hpp"
#include "altext/metrics.hpp"

namespace altext {

struct SeedRun {
  std::uint64_t seed = 0;
  RunResult result;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;  // in config seed order
  std::vector<SummaryRow> summary;

  bool all_completed() const {
    for (const auto& r : runs)
      if (r.result.error) return false;
    return true;
  }
};

/// One run per seed. Static representations are built once and shared;
/// provider-backed ATAL runs execute sequentially because the provider is stateful.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Corpus& corpus,
                                       const std::function<void(const SeedRun&)>& on_run = {}) {
  ExperimentResult out;
  out.runs.resize(cfg.seeds.size());
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out.runs[i].seed = cfg.seeds[i];

  auto guarded = [&](SeedRun& run, auto&& body) {
    try {
      run.result = body();
    } catch (const std::exception& e) {
      run.result.error = e.what();
      run.result.curve.representation = cfg.loop.representation;
      run.result.curve.strategy = to_string(cfg.loop.strategy);
      run.result.curve.seed = run.seed;
    }
  };

  if (cfg.loop.atal) {
    auto provider = make_provider(cfg.representation);
    for (auto& run : out.runs) {
      guarded(run, [&] { return run_atal(corpus, *provider, cfg.representation.mode, cfg.loop, run.seed); });
      if (on_run) on_run(run);
    }
  } else {
    const auto matrix = build_representation(cfg.representation, corpus);
    std::mutex report;
    auto work = [&](std::size_t worker) {
      for (std::size_t i = worker; i < out.runs.size(); i += cfg.threads) {
        auto& run = out.runs[i];
        guarded(run, [&] { return run_simulation(corpus, matrix.values, cfg.loop, run.seed); });
        if (on_run) {
          std::lock_guard lock(report);
          on_run(run);
        }
      }
    };
    if (cfg.threads <= 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < cfg.threads; ++t) pool.emplace_back(work, t);
    }
  }

  std::vector<LearningCurve> completed;
  for (const auto& r : out.runs)
    if (!r.result.error && r.result.curve.points.size() >= 2) completed.push_back(r.result.curve);
  out.summary = summarize(completed);
  return out;
}

inline void write_curves_csv(std::ostream& os, const ExperimentResult& result) {
  os << "seed,round,labels_used,accuracy_plus\n";
  for (const auto& run : result.runs) {
    for (std::size_t i = 0; i < run.result.curve.points.size(); ++i) {
      const auto& p = run.result.curve.points[i];
      os << run.seed << ',' << i << ',' << p.labels_used << ',' << format_score(p.accuracy_plus) << '\n';
    }
  }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  os << "representation,strategy,aulc_mean,aulc_std,runs\n";
  for (const auto& row : result.summary) {
    os << row.representation << ',' << row.strategy << ',' << format_score(row.aulc_mean) << ','
       << format_score(row.aulc_std) << ',' << row.runs << '\n';
  }
}

inline nlohmann::json run_manifest(const ExperimentConfig& cfg, const ExperimentResult& result) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : result.runs) {
    nlohmann::json r = {{"seed", run.seed}, {"points", run.result.curve.points.size()}};
    if (run.result.error) {
      r["status"] = "failed";
      r["error"] = *run.result.error;
    } else {
      r["status"] = "completed";
      if (run.result.curve.points.size() >= 2) r["aulc"] = format_score(aulc(run.result.curve));
    }
    nlohmann::json tunes = nlohmann::json::array();
    for (const auto& t : run.result.fine_tunes)
      tunes.push_back({{"epochs_run", t.epochs_run}, {"best_epoch", t.best_epoch}, {"diverged", t.diverged}});
    if (!tunes.empty()) r["fine_tunes"] = tunes;
    runs.push_back(r);
  }
  return {{"corpus", cfg.corpus.string()},
          {"representation", cfg.loop.representation},
          {"strategy", to_string(cfg.loop.strategy)},
          {"batch_size", cfg.loop.batch_size},
          {"budget", cfg.loop.budget},
          {"cv_cadence", cfg.loop.cv_cadence},
          {"atal", cfg.loop.atal.has_value()},
          {"runs", runs}};
}

/// Writes curves.csv, summary.csv and manifest.json into `dir`.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                             const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("curves.csv");
    write_curves_csv(f, result);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, result);
  }
  auto f = open("manifest.json");
  f << run_manifest(cfg, result).dump(2) << '\n';
}

}  // namespace altext
