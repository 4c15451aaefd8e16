#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anav/rng.hpp"
#include "anav/training.hpp"

namespace anav {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(beta <= 0.0)) fail("beta must be <= 0");
  if (!(success_radius > 0.0)) fail("success_radius must be > 0");
  if (!(lambda_il >= 0.0)) fail("lambda_il must be >= 0");
  if (!(lr >= 0.0)) fail("lr must be >= 0");
  if (smax_schedule.empty()) fail("smax_schedule is empty");
  for (std::size_t i = 0; i < smax_schedule.size(); ++i) {
    if (smax_schedule[i] < 1) fail("smax_schedule entries must be >= 1");
    if (i > 0 && smax_schedule[i] < smax_schedule[i - 1]) fail("smax_schedule must be nondecreasing");
  }
  if (epochs_per_stage < 0 || episodes_per_epoch < 0) fail("epoch counts must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (train_worlds < 1 || val_worlds < 1 || val_tasks < 0) fail("world/task counts");
  if (dims.hidden < 1) fail("hidden must be >= 1");
}

namespace {

json world_to_json(const world::WorldConfig& w) {
  return {{"n_viewpoints", w.n_viewpoints},   {"landmark_dim", w.landmark_dim},
          {"k_max", w.k_max},                 {"ambiguity", w.ambiguity},
          {"duplicate_noise", w.duplicate_noise}, {"landmark_scale", w.landmark_scale},
          {"extra_edge_prob", w.extra_edge_prob}, {"planar", w.planar},
          {"elevation_jitter", w.elevation_jitter}};
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(std::string("train config: bad value for '") + key + "'");
    }
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) {
      throw std::invalid_argument(std::string("train config: unknown key '") + it.key() + "' in " +
                                  where);
    }
  }
}

}  // namespace

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["gamma"] = c.gamma;
  j["beta"] = c.beta;
  j["success_radius"] = c.success_radius;
  j["lambda_il"] = c.lambda_il;
  j["lr"] = c.lr;
  j["clip_norm"] = c.clip_norm;
  j["smax_schedule"] = c.smax_schedule;
  j["epochs_per_stage"] = c.epochs_per_stage;
  j["episodes_per_epoch"] = c.episodes_per_epoch;
  j["batch_size"] = c.batch_size;
  j["mode"] = mode_name(c.mode);
  j["losses"] = {{"il_nv", c.losses.il_nv}, {"rl_nv", c.losses.rl_nv},
                 {"il_ep", c.losses.il_ep}, {"rl_ep", c.losses.rl_ep}};
  j["reward_baseline"] = c.reward_baseline == RewardBaseline::round ? "round" : "step";
  j["max_steps"] = c.max_steps;
  j["seed"] = c.seed;
  j["hidden"] = c.dims.hidden;
  j["world"] = world_to_json(c.world);
  j["task"] = {{"min_hops", c.task.min_hops},
               {"max_hops", c.task.max_hops},
               {"sigma", c.task.noise.sigma},
               {"first_token_corruption", c.task.noise.first_token_corruption}};
  j["train_worlds"] = c.train_worlds;
  j["val_worlds"] = c.val_worlds;
  j["val_tasks"] = c.val_tasks;
  j["strategy"] = c.strategy == Strategy::lazy ? "lazy" : "eager";
  j["il_gate"] = c.il_gate_sampling ? "sample" : "teacher";
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("train config: expected an object");
  reject_unknown(j,
                 {"gamma", "beta", "success_radius", "lambda_il", "lr", "clip_norm", "smax_schedule",
                  "epochs_per_stage", "episodes_per_epoch", "batch_size", "mode", "losses",
                  "reward_baseline", "max_steps", "seed", "hidden", "world", "task", "train_worlds",
                  "val_worlds", "val_tasks", "strategy", "il_gate"},
                 "root");
  TrainConfig c;
  read(j, "gamma", c.gamma);
  read(j, "beta", c.beta);
  read(j, "success_radius", c.success_radius);
  read(j, "lambda_il", c.lambda_il);
  read(j, "lr", c.lr);
  read(j, "clip_norm", c.clip_norm);
  read(j, "smax_schedule", c.smax_schedule);
  read(j, "epochs_per_stage", c.epochs_per_stage);
  read(j, "episodes_per_epoch", c.episodes_per_epoch);
  read(j, "batch_size", c.batch_size);
  std::string s;
  if (j.contains("mode")) {
    read(j, "mode", s);
    c.mode = parse_mode(s);
  }
  if (j.contains("losses")) {
    const json& l = j["losses"];
    reject_unknown(l, {"il_nv", "rl_nv", "il_ep", "rl_ep"}, "losses");
    read(l, "il_nv", c.losses.il_nv);
    read(l, "rl_nv", c.losses.rl_nv);
    read(l, "il_ep", c.losses.il_ep);
    read(l, "rl_ep", c.losses.rl_ep);
  }
  if (j.contains("reward_baseline")) {
    read(j, "reward_baseline", s);
    if (s != "round" && s != "step") throw std::invalid_argument("train config: reward_baseline");
    c.reward_baseline = s == "round" ? RewardBaseline::round : RewardBaseline::step;
  }
  read(j, "max_steps", c.max_steps);
  read(j, "seed", c.seed);
  read(j, "hidden", c.dims.hidden);
  if (j.contains("world")) {
    const json& w = j["world"];
    reject_unknown(w,
                   {"n_viewpoints", "landmark_dim", "k_max", "ambiguity", "duplicate_noise",
                    "landmark_scale", "extra_edge_prob", "planar", "elevation_jitter"},
                   "world");
    read(w, "n_viewpoints", c.world.n_viewpoints);
    read(w, "landmark_dim", c.world.landmark_dim);
    read(w, "k_max", c.world.k_max);
    read(w, "ambiguity", c.world.ambiguity);
    read(w, "duplicate_noise", c.world.duplicate_noise);
    read(w, "landmark_scale", c.world.landmark_scale);
    read(w, "extra_edge_prob", c.world.extra_edge_prob);
    read(w, "planar", c.world.planar);
    read(w, "elevation_jitter", c.world.elevation_jitter);
  }
  if (j.contains("task")) {
    const json& t = j["task"];
    reject_unknown(t, {"min_hops", "max_hops", "sigma", "first_token_corruption"}, "task");
    read(t, "min_hops", c.task.min_hops);
    read(t, "max_hops", c.task.max_hops);
    read(t, "sigma", c.task.noise.sigma);
    read(t, "first_token_corruption", c.task.noise.first_token_corruption);
  }
  read(j, "train_worlds", c.train_worlds);
  read(j, "val_worlds", c.val_worlds);
  read(j, "val_tasks", c.val_tasks);
  if (j.contains("strategy")) {
    read(j, "strategy", s);
    if (s != "lazy" && s != "eager") throw std::invalid_argument("train config: strategy");
    c.strategy = s == "lazy" ? Strategy::lazy : Strategy::eager;
  }
  if (j.contains("il_gate")) {
    read(j, "il_gate", s);
    if (s != "teacher" && s != "sample") throw std::invalid_argument("train config: il_gate");
    c.il_gate_sampling = s == "sample";
  }
  c.dims.landmark_dim = c.world.landmark_dim;
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return train_config_from_json(buf.str());
}

std::vector<world::Environment> make_worlds(const world::WorldConfig& wc, int n,
                                            std::uint64_t seed) {
  std::vector<world::Environment> worlds;
  for (int i = 0; i < n; ++i) {
    worlds.push_back(world::generate_world(wc, Rng::derive(seed, static_cast<std::uint64_t>(i))));
  }
  return worlds;
}

Benchmark make_benchmark(const world::WorldConfig& wc, const world::TaskConfig& tc, int n_worlds,
                         int n_tasks, std::uint64_t seed) {
  Benchmark b;
  b.worlds = make_worlds(wc, n_worlds, Rng::derive(seed, 0));
  Rng rng(Rng::derive(seed, 1));
  for (int i = 0; i < n_tasks; ++i) {
    const int w = i % n_worlds;
    b.tasks.emplace_back(w, world::sample_task(b.worlds[static_cast<std::size_t>(w)], tc,
                                               rng.next_u64()));
  }
  return b;
}

std::vector<EpisodeTrace> evaluate(const Model& model, const std::vector<world::Environment>& worlds,
                                   const std::vector<std::pair<int, world::Task>>& tasks,
                                   const RolloutOptions& options) {
  std::vector<EpisodeTrace> traces;
  traces.reserve(tasks.size());
  RewardConfig rc;
  rc.success_radius = options.success_radius;
  for (const auto& [w, task] : tasks) {
    nc::Tape tape(model.params);
    PolicySource greedy(SelectMode::greedy, nullptr);
    const world::Environment& env = worlds.at(static_cast<std::size_t>(w));
    EpisodeTrace trace = rollout_episode(tape, model, env, task, options, greedy);
    trace.world_index = w;
    compute_rewards(trace, env, rc);
    traces.push_back(std::move(trace));
  }
  return traces;
}

TrainResult train(const TrainConfig& cfg_in, const TrainHooks& hooks, const Model* init) {
  TrainConfig cfg = cfg_in;
  cfg.dims.landmark_dim = cfg.world.landmark_dim;
  cfg.validate();
  TrainResult result{init != nullptr ? *init : Model::create(cfg.dims, Rng::derive(cfg.seed, 1)), {}};
  Model& model = result.model;
  const std::vector<world::Environment> worlds =
      make_worlds(cfg.world, cfg.train_worlds, Rng::derive(cfg.seed, 2));
  const Benchmark val =
      make_benchmark(cfg.world, cfg.task, cfg.val_worlds, cfg.val_tasks, Rng::derive(cfg.seed, 3));
  const std::uint64_t episode_seed = Rng::derive(cfg.seed, 4);
  const bool il = cfg.losses.il_nv || cfg.losses.il_ep;
  const bool rl = cfg.losses.rl_nv || cfg.losses.rl_ep;
  RewardConfig rc{cfg.gamma, cfg.beta, cfg.success_radius, cfg.reward_baseline};

  std::uint64_t episode = 0;
  for (std::size_t stage = 0; stage < cfg.smax_schedule.size(); ++stage) {
    const int smax = cfg.smax_schedule[stage];
    RolloutOptions opts{ExplorerFlags::for_mode(cfg.mode, smax), cfg.strategy, cfg.max_steps,
                        cfg.success_radius};
    for (int epoch = 0; epoch < cfg.epochs_per_stage; ++epoch) {
      TrainLogRow row;
      row.stage = static_cast<int>(stage);
      row.smax = smax;
      row.epoch = epoch;
      int updates = 0;
      for (int done = 0; done < cfg.episodes_per_epoch; done += cfg.batch_size) {
        const int batch = std::min(cfg.batch_size, cfg.episodes_per_epoch - done);
        const double inv = 1.0 / static_cast<double>(batch);
        std::vector<nc::Tensor> grads = model.params.make_gradients();
        for (int e = 0; e < batch; ++e, ++episode) {
          Rng rng(Rng::derive(episode_seed, episode));
          int w = 0;
          world::Task task;
          if (!cfg.fixed_tasks.empty()) {
            const auto& ft = cfg.fixed_tasks[episode % cfg.fixed_tasks.size()];
            w = ft.first;
            task = ft.second;
          } else {
            w = rng.index(static_cast<int>(worlds.size()));
            task = world::sample_task(worlds[static_cast<std::size_t>(w)], cfg.task, rng.next_u64());
          }
          const world::Environment& env = worlds.at(static_cast<std::size_t>(w));
          if (il) {
            nc::Tape tape(model.params);
            TeacherSource teacher;
            GateSamplingTeacherSource gate_sampler(&rng);
            DecisionSource& source = cfg.il_gate_sampling ? static_cast<DecisionSource&>(gate_sampler)
                                                          : static_cast<DecisionSource&>(teacher);
            const EpisodeTrace trace = rollout_episode(tape, model, env, task, opts, source);
            std::vector<nc::Var> parts;
            if (cfg.losses.il_nv) {
              parts.push_back(il_nav_loss(tape, trace));
              row.il_nv += parts.back().item();
            }
            if (cfg.losses.il_ep) {
              parts.push_back(il_explore_loss(tape, trace));
              row.il_ep += parts.back().item();
            }
            const nc::Var loss = tape.scale(tape.sum(tape.concat(parts)), cfg.lambda_il * inv);
            tape.backward(loss, grads);
          }
          if (rl) {
            nc::Tape tape(model.params);
            PolicySource sampler(SelectMode::sample, &rng);
            EpisodeTrace trace = rollout_episode(tape, model, env, task, opts, sampler);
            compute_rewards(trace, env, rc);
            std::vector<nc::Var> parts;
            if (cfg.losses.rl_nv) {
              parts.push_back(rl_nav_loss(tape, trace).total);
              row.rl_nv += parts.back().item();
            }
            if (cfg.losses.rl_ep) {
              parts.push_back(rl_explore_loss(tape, trace).total);
              row.rl_ep += parts.back().item();
            }
            const nc::Var loss = tape.scale(tape.sum(tape.concat(parts)), inv);
            tape.backward(loss, grads);
          }
        }
        model.params.add_gradients(grads);
        row.grad_norm += nc::sgd_update(model.params, cfg.lr, cfg.clip_norm);
        ++updates;
        if (!std::isfinite(row.grad_norm)) {
          throw DivergenceError("training diverged: non-finite gradient at stage " +
                                std::to_string(stage) + " epoch " + std::to_string(epoch));
        }
      }
      const double n = std::max(1, cfg.episodes_per_epoch);
      row.il_nv /= n;
      row.il_ep /= n;
      row.rl_nv /= n;
      row.rl_ep /= n;
      row.total = row.rl_nv + row.rl_ep + cfg.lambda_il * (row.il_nv + row.il_ep);
      if (updates > 0) row.grad_norm /= updates;
      if (!std::isfinite(row.total)) {
        throw DivergenceError("training diverged: non-finite loss at stage " +
                              std::to_string(stage) + " epoch " + std::to_string(epoch));
      }
      const std::vector<EpisodeTrace> traces = evaluate(model, val.worlds, val.tasks, opts);
      for (const EpisodeTrace& t : traces) {
        row.val_sr += t.success ? 1.0 : 0.0;
        row.val_tl += t.travel.total;
      }
      if (!traces.empty()) {
        row.val_sr /= static_cast<double>(traces.size());
        row.val_tl /= static_cast<double>(traces.size());
      }
      result.log.push_back(row);
      if (hooks.on_epoch) hooks.on_epoch(row);
    }
    if (hooks.on_stage) hooks.on_stage(static_cast<int>(stage), smax, model);
  }
  return result;
}

std::string train_log_csv_header() {
  return "stage,smax,epoch,il_nv,il_ep,rl_nv,rl_ep,total,grad_norm,val_sr,val_tl";
}

std::string train_log_csv_row(const TrainLogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", r.stage, r.smax,
                r.epoch, r.il_nv, r.il_ep, r.rl_nv, r.rl_ep, r.total, r.grad_norm, r.val_sr,
                r.val_tl);
  return buf;
}

}  // namespace anav
