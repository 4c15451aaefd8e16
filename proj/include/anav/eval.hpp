#pragma once

// Navigation metrics, exploration statistics and the experiment harness.

#include <optional>
#include <string>
#include <vector>

#include "anav/training.hpp"

namespace anav {

enum class OracleScope { nav, all };

struct EpisodeMetrics {
  bool success = false;
  bool oracle_success = false;
  double ne = 0.0;
  double tl = 0.0;
  double tl_nav = 0.0;
  double tl_explore = 0.0;
  double shortest = 0.0;
  double spl = 0.0;
};

struct ExplorationStats {
  int nav_steps = 0;
  int explored_steps = 0;
  double exploration_rate = 0.0;
  // Undefined (nullopt) when no step explored / no decision changed.
  std::optional<double> avg_directions;
  std::optional<double> avg_steps_per_direction;
  std::optional<double> decision_change_rate;
  std::optional<double> corrected_rate;
  double tl_nav = 0.0;      // mean per episode
  double tl_explore = 0.0;  // mean per episode
};

struct MetricsReport {
  int episodes = 0;
  double sr = 0.0;
  double ne = 0.0;
  double tl = 0.0;
  double oracle = 0.0;
  double spl = 0.0;
  std::vector<EpisodeMetrics> rows;
  ExplorationStats stats;
};

/// `worlds[trace.world_index]` is the environment of each trace.
MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces,
                              const std::vector<world::Environment>& worlds, double radius = 3.0,
                              OracleScope scope = OracleScope::all);

ExplorationStats exploration_stats(const std::vector<EpisodeTrace>& traces);

std::string stats_to_json(const ExplorationStats& stats);
std::string metrics_csv_header();
/// Fixed column order, 6 decimals.
std::string metrics_csv_row(const std::string& label, const MetricsReport& report);

struct ExperimentVariant {
  std::string name;
  TrainConfig train;
  Mode eval_mode = Mode::basic;
  int eval_smax = 1;
};

struct ExperimentConfig {
  std::vector<ExperimentVariant> variants;
  std::vector<std::uint64_t> seeds{1};
  world::WorldConfig bench_world;
  world::TaskConfig bench_task;
  int bench_worlds = 10;
  int bench_tasks = 500;
  std::uint64_t bench_seed = 1000;
  bool eager_rows = false;  // also evaluate every variant with the eager strategy
  OracleScope scope = OracleScope::all;
};

/// {"base": <train config>, "variants": [{"name", ...overrides}], "seeds": [...],
///  "benchmark": {"worlds", "tasks", "seed", "world": {...}, "task": {...}},
///  "eager_rows": bool, "or_scope": "nav"|"all"}
ExperimentConfig experiment_config_from_json(const std::string& text);

struct ExperimentRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::string strategy;
  MetricsReport report;
};

/// Trains (or, with `resume`, loads `<out_dir>/<variant>_seed<seed>.ckpt.json`
/// when present) and evaluates every variant on the shared benchmark. Writes
/// results.csv and results.json into `out_dir` when it is non-empty.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                          bool resume);

}  // namespace anav
