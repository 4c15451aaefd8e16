// anav: command-line front end for world generation, training, evaluation,
// ablation grids, statistics and episode replay.
//
// Every output file is a pure function of the arguments, so repeated
// invocations produce byte-identical results.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "anav/eval.hpp"

namespace fs = std::filesystem;
using namespace anav;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string mode;
  std::optional<int> smax;
  bool lazy = false;
  bool eager = false;
  std::string out;
  std::string or_scope = "all";
  std::string reward_baseline;
};

struct Bench {
  int worlds = 10;
  int tasks = 500;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path out_dir(const Common& c) {
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

// The train config with command-line overrides applied.
TrainConfig effective_config(const Common& c) {
  TrainConfig cfg = c.config.empty() ? train_config_from_json("{}") : load_train_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.mode.empty()) cfg.mode = parse_mode(c.mode);
  if (c.eager) cfg.strategy = Strategy::eager;
  if (c.lazy) cfg.strategy = Strategy::lazy;
  if (!c.reward_baseline.empty()) {
    cfg.reward_baseline = c.reward_baseline == "step" ? RewardBaseline::step : RewardBaseline::round;
  }
  cfg.dims.landmark_dim = cfg.world.landmark_dim;
  return cfg;
}

Model load_model(const TrainConfig& cfg, const std::string& checkpoint) {
  Model model = Model::create(cfg.dims, Rng::derive(cfg.seed, 1));
  nc::load_checkpoint(model.params, checkpoint);
  return model;
}

RolloutOptions eval_options(const Common& c, const TrainConfig& cfg) {
  const int smax = c.smax ? *c.smax : cfg.smax_schedule.back();
  return {ExplorerFlags::for_mode(cfg.mode, smax), cfg.strategy, cfg.max_steps, cfg.success_radius};
}

Benchmark benchmark(const Common& c, const TrainConfig& cfg, const Bench& b) {
  return make_benchmark(cfg.world, cfg.task, b.worlds, b.tasks, c.seed ? *c.seed : 1000);
}

int cmd_gen_world(const Common& c) {
  const TrainConfig cfg = effective_config(c);
  const world::Environment env = world::generate_world(cfg.world, c.seed ? *c.seed : 1);
  const fs::path path = out_dir(c) / "world.json";
  world::save_environment(env, path.string());
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_train(const Common& c) {
  TrainConfig cfg = effective_config(c);
  if (c.smax) {
    cfg.smax_schedule.clear();
    for (int s = 1; s <= *c.smax; ++s) cfg.smax_schedule.push_back(s);
  }
  const fs::path dir = out_dir(c);
  write_file(dir / "config.json", train_config_to_json(cfg) + "\n");
  std::ofstream log(dir / "train_log.csv");
  log << train_log_csv_header() << '\n';
  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainLogRow& row) {
    log << train_log_csv_row(row) << '\n';
    log.flush();
    std::cerr << "stage " << row.stage << " smax " << row.smax << " epoch " << row.epoch
              << " val_sr " << row.val_sr << '\n';
  };
  hooks.on_stage = [&](int stage, int smax, const Model& m) {
    nc::save_checkpoint(m.params, (dir / ("stage" + std::to_string(stage) + "_smax" +
                                          std::to_string(smax) + ".ckpt.json")).string());
  };
  const TrainResult result = train(cfg, hooks);
  nc::save_checkpoint(result.model.params, (dir / "model.ckpt.json").string());
  return 0;
}

std::vector<EpisodeTrace> run_eval(const Common& c, const TrainConfig& cfg, const Bench& b,
                                   const std::string& checkpoint, Benchmark& bench) {
  const Model model = load_model(cfg, checkpoint);
  bench = benchmark(c, cfg, b);
  return evaluate(model, bench.worlds, bench.tasks, eval_options(c, cfg));
}

OracleScope scope_of(const Common& c) {
  return c.or_scope == "nav" ? OracleScope::nav : OracleScope::all;
}

int cmd_eval(const Common& c, const Bench& b, const std::string& checkpoint) {
  const TrainConfig cfg = effective_config(c);
  Benchmark bench;
  const std::vector<EpisodeTrace> traces = run_eval(c, cfg, b, checkpoint, bench);
  const MetricsReport report = compute_metrics(traces, bench.worlds, cfg.success_radius, scope_of(c));
  const fs::path dir = out_dir(c);
  const std::string row = metrics_csv_row(mode_name(cfg.mode), report);
  write_file(dir / "metrics.csv", metrics_csv_header() + "\n" + row + "\n");
  write_file(dir / "stats.json", stats_to_json(report.stats) + "\n");
  std::ofstream episodes(dir / "episodes.jsonl");
  std::ofstream steps(dir / "exploration_steps.jsonl");
  for (const EpisodeTrace& tr : traces) {
    episodes << episode_to_jsonl(tr);
    steps << exploration_steps_to_jsonl(tr);
  }
  std::cout << metrics_csv_header() << '\n' << row << '\n';
  return 0;
}

int cmd_stats(const Common& c, const Bench& b, const std::string& checkpoint) {
  const TrainConfig cfg = effective_config(c);
  Benchmark bench;
  const std::string json = stats_to_json(exploration_stats(run_eval(c, cfg, b, checkpoint, bench)));
  if (!c.out.empty()) write_file(out_dir(c) / "stats.json", json + "\n");
  std::cout << json << '\n';
  return 0;
}

int cmd_replay(const Common& c, const Bench& b, const std::string& checkpoint, int episode) {
  const TrainConfig cfg = effective_config(c);
  const Model model = load_model(cfg, checkpoint);
  const Benchmark bench = benchmark(c, cfg, b);
  if (episode < 0 || episode >= static_cast<int>(bench.tasks.size())) {
    throw std::invalid_argument("replay: episode index out of range");
  }
  const auto& task = bench.tasks[static_cast<std::size_t>(episode)];
  const std::vector<EpisodeTrace> traces = evaluate(model, bench.worlds, {task}, eval_options(c, cfg));
  const std::string text = episode_to_jsonl(traces.front()) + exploration_steps_to_jsonl(traces.front());
  if (!c.out.empty()) write_file(out_dir(c) / ("replay_" + std::to_string(episode) + ".jsonl"), text);
  std::cout << text;
  return 0;
}

int cmd_ablate(const Common& c, bool resume) {
  if (c.config.empty()) throw std::invalid_argument("ablate: --config is required");
  ExperimentConfig cfg = experiment_config_from_json(read_file(c.config));
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.eager) cfg.eager_rows = true;
  if (c.or_scope == "nav") cfg.scope = OracleScope::nav;
  for (ExperimentVariant& v : cfg.variants) {
    if (c.smax) v.eval_smax = *c.smax;
    if (!c.reward_baseline.empty()) {
      v.train.reward_baseline = c.reward_baseline == "step" ? RewardBaseline::step : RewardBaseline::round;
    }
  }
  const fs::path dir = out_dir(c);
  const auto rows = run_experiment(cfg, dir.string(), resume);
  std::cout << read_file((dir / "results.csv").string());
  (void)rows;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active exploration testbed for instruction-following navigation"};
  app.require_subcommand(1);
  Common c;
  Bench bench;
  std::string checkpoint;
  int episode = 0;
  bool resume = false;

  app.add_option("--seed", c.seed, "Seed (world for gen-world, training for train, benchmark for eval)");
  app.add_option("--config", c.config, "Train config JSON (experiment config for ablate)");
  app.add_option("--mode", c.mode, "Agent mode")->check(CLI::IsMember({"basic", "naive", "decision", "full"}));
  app.add_option("--smax", c.smax, "Maximum exploration steps")->check(CLI::PositiveNumber);
  auto* lazy = app.add_flag("--lazy", c.lazy, "Lazy travel (default)");
  app.add_flag("--eager", c.eager, "Eager travel")->excludes(lazy);
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--or-scope", c.or_scope, "Positions counted for oracle success")
      ->check(CLI::IsMember({"nav", "all"}));
  app.add_option("--reward-baseline", c.reward_baseline, "Exploration reward baseline")
      ->check(CLI::IsMember({"round", "step"}));

  auto add_bench = [&](CLI::App* sub) {
    sub->add_option("--bench-worlds", bench.worlds, "Benchmark worlds")->check(CLI::PositiveNumber);
    sub->add_option("--bench-tasks", bench.tasks, "Benchmark tasks")->check(CLI::PositiveNumber);
    sub->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  };
  CLI::App* gen = app.add_subcommand("gen-world", "Generate a world and write world.json");
  CLI::App* tr = app.add_subcommand("train", "Train with the curriculum; writes logs and checkpoints");
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a benchmark");
  add_bench(ev);
  CLI::App* st = app.add_subcommand("stats", "Exploration statistics of a checkpoint");
  add_bench(st);
  CLI::App* rp = app.add_subcommand("replay", "Replay one benchmark episode as JSONL");
  add_bench(rp);
  rp->add_option("--episode", episode, "Benchmark task index");
  CLI::App* ab = app.add_subcommand("ablate", "Train and evaluate an experiment grid");
  ab->add_flag("--resume", resume, "Reuse checkpoints found in the output directory");
  for (CLI::App* sub : {gen, tr, ev, st, rp, ab}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_gen_world(c);
    if (tr->parsed()) return cmd_train(c);
    if (ev->parsed()) return cmd_eval(c, bench, checkpoint);
    if (st->parsed()) return cmd_stats(c, bench, checkpoint);
    if (rp->parsed()) return cmd_replay(c, bench, checkpoint, episode);
    if (ab->parsed()) return cmd_ablate(c, resume);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
