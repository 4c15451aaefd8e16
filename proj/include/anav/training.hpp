#pragma once

// Rollouts, rewards, imitation and actor-critic losses, and the curriculum
// trainer.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anav/explorer.hpp"
#include "anav/memory.hpp"
#include "anav/model.hpp"
#include "anav/navigator.hpp"
#include "anav/numcore.hpp"
#include "anav/world.hpp"

namespace anav {

// ---------------------------------------------------------------- rewards

/// Non-final: geodesic(from, goal) - geodesic(to, goal). Final: +3 when
/// geodesic(to, goal) < radius, else -3 (`to` is the stop position).
double nav_reward(const world::Environment& env, int from, int to, int goal, bool is_final,
                  double radius = 3.0);

/// R_t = sum_{t' >= t} gamma^{t'-t} r_t'.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

/// (r_after - r_before) / S; the step penalty is added by the caller.
double exploration_reward(double r_after, double r_before, int steps);

// ---------------------------------------------------------------- traces

struct NavStep {
  int t = 0;
  int position = 0;
  std::vector<int> candidates;  // neighbor ids in candidate order
  ActionDistribution dist;      // over the updated views
  int action = 0;               // candidate index, or candidates.size() for STOP
  int teacher = 0;
  bool forced_stop = false;     // max steps reached: STOP without a policy choice
  nc::Var value;                // b_nv(h_nv)
  double value_v = 0.0;
  int pre_argmax = 0;           // greedy action over the views before exploration
  ExplorationTrace exploration;
  int next_position = 0;        // logical position after the action
  double reward = 0.0;
  double ret = 0.0;
};

/// Per-round exploration bookkeeping filled by compute_rewards.
struct RoundRewards {
  double base = 0.0;                 // (r_after - r_before) / S
  std::vector<double> step_rewards;  // base + beta, one per exploration move
  std::vector<double> returns;       // discounted, one per exploration move
};

enum class RewardBaseline { round, step };

struct EpisodeTrace {
  int world_index = 0;
  world::Task task;
  std::vector<NavStep> steps;
  int final_position = 0;
  bool success = false;
  TravelLog travel;
  std::vector<int> logical_walk;   // every logical position, exploration included
  std::vector<int> nav_route;      // start plus each navigation move target
  std::vector<int> physical_walk;
  std::vector<int> decisions;      // every choice made by the decision source, in order
  std::vector<std::vector<RoundRewards>> round_rewards;  // [t][round]
};

struct RolloutOptions {
  ExplorerFlags flags;
  Strategy strategy = Strategy::lazy;
  int max_steps = 15;
  double success_radius = 3.0;
};

/// Runs one episode: exploration, navigation decision, move, until STOP or
/// the step limit (the last step is a forced STOP).
EpisodeTrace rollout_episode(nc::Tape& tape, const Model& model, const world::Environment& env,
                             const world::Task& task, const RolloutOptions& options,
                             DecisionSource& source);

struct RewardConfig {
  double gamma = 0.9;
  double beta = -0.1;
  double success_radius = 3.0;
  RewardBaseline baseline = RewardBaseline::round;
};

/// Fills navigation rewards/returns and exploration round rewards.
void compute_rewards(EpisodeTrace& trace, const world::Environment& env, const RewardConfig& cfg);

// ---------------------------------------------------------------- losses

/// Advantages taken from the critic values unless `frozen` is supplied (one
/// entry per critic term, in the order the loss visits them).
struct RlLoss {
  nc::Var policy;
  nc::Var critic;
  nc::Var total;
  std::vector<double> advantages;
};

nc::Var il_nav_loss(nc::Tape& tape, const EpisodeTrace& trace);
nc::Var il_explore_loss(nc::Tape& tape, const EpisodeTrace& trace);
RlLoss rl_nav_loss(nc::Tape& tape, const EpisodeTrace& trace,
                   const std::vector<double>* frozen = nullptr);
RlLoss rl_explore_loss(nc::Tape& tape, const EpisodeTrace& trace,
                       const std::vector<double>* frozen = nullptr);

// ---------------------------------------------------------------- trainer

struct LossSwitches {
  bool il_nv = true;
  bool rl_nv = true;
  bool il_ep = true;
  bool rl_ep = true;
};

struct TrainConfig {
  double gamma = 0.9;
  double beta = -0.1;
  double success_radius = 3.0;
  double lambda_il = 0.2;
  double lr = 0.05;
  double clip_norm = 5.0;
  std::vector<int> smax_schedule{1, 2, 3, 4};
  int epochs_per_stage = 4;
  int episodes_per_epoch = 400;
  int batch_size = 8;
  Mode mode = Mode::full;
  LossSwitches losses;
  RewardBaseline reward_baseline = RewardBaseline::round;
  int max_steps = 15;
  std::uint64_t seed = 1;
  ModelDims dims;
  world::WorldConfig world;
  world::TaskConfig task;
  int train_worlds = 16;
  int val_worlds = 4;
  int val_tasks = 100;
  Strategy strategy = Strategy::lazy;
  /// IL rollouts sample gate decisions instead of following the teacher.
  bool il_gate_sampling = false;
  /// Fixed task list to train on instead of sampling (empty = sample).
  std::vector<std::pair<int, world::Task>> fixed_tasks;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);

/// Worlds and a fixed task list.
struct Benchmark {
  std::vector<world::Environment> worlds;
  std::vector<std::pair<int, world::Task>> tasks;  // (world index, task)
};

/// Deterministic given (world config, task config, seed).
Benchmark make_benchmark(const world::WorldConfig& wc, const world::TaskConfig& tc, int n_worlds,
                         int n_tasks, std::uint64_t seed);
std::vector<world::Environment> make_worlds(const world::WorldConfig& wc, int n,
                                            std::uint64_t seed);

struct TrainLogRow {
  int stage = 0;
  int smax = 1;
  int epoch = 0;
  double il_nv = 0.0;
  double il_ep = 0.0;
  double rl_nv = 0.0;
  double rl_ep = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
  double val_sr = 0.0;
  double val_tl = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainHooks {
  /// Called after each stage with the stage index and its S_max.
  std::function<void(int, int, const Model&)> on_stage;
  std::function<void(const TrainLogRow&)> on_epoch;
};

struct TrainResult {
  Model model;
  std::vector<TrainLogRow> log;
};

/// Curriculum over the S_max schedule; each stage starts from the previous
/// stage's parameters. `init` (optional) replaces the seeded initialization.
TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {},
                  const Model* init = nullptr);

/// Greedy rollouts over a task list; returns the traces.
std::vector<EpisodeTrace> evaluate(const Model& model, const std::vector<world::Environment>& worlds,
                                   const std::vector<std::pair<int, world::Task>>& tasks,
                                   const RolloutOptions& options);

std::string train_log_csv_header();
std::string train_log_csv_row(const TrainLogRow& row);

// ---------------------------------------------------------------- trace dumps

/// One JSON object per episode.
std::string episode_to_jsonl(const EpisodeTrace& trace);
/// One JSON object per exploration step: t, k, s, position, action, log_prob, value.
std::string exploration_steps_to_jsonl(const EpisodeTrace& trace);

}  // namespace anav
