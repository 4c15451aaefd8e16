#include <doctest.h>

#include <cmath>

#include "../loss_check.hpp"
#include "../support.hpp"
#include "anav/training.hpp"

using namespace anav;
using nc::Tape;
using nc::Var;

namespace {

NavStep uniform_step(Tape& tape, int k, int teacher) {
  NavStep s;
  for (int i = 0; i < k; ++i) s.candidates.push_back(i + 1);
  std::vector<int> actions;
  for (int i = 0; i <= k; ++i) actions.push_back(i);
  s.dist = make_distribution(tape.constant(std::vector<double>(static_cast<std::size_t>(k + 1), 0.0)), actions, k);
  s.teacher = teacher;
  s.action = teacher;
  return s;
}

world::WorldConfig small_world() {
  world::WorldConfig wc;
  wc.n_viewpoints = 12;
  wc.landmark_dim = 3;
  wc.ambiguity = 0.3;
  return wc;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.world = small_world();
  c.task = {2, 4, {0.1, 0.0}};
  c.dims.hidden = 4;
  c.smax_schedule = {1, 2};
  c.epochs_per_stage = 1;
  c.episodes_per_epoch = 8;
  c.batch_size = 4;
  c.train_worlds = 2;
  c.val_worlds = 1;
  c.val_tasks = 4;
  c.max_steps = 6;
  return c;
}

}  // namespace

TEST_CASE("nav_reward") {
  // Goal at the far end of a 1.8 + 3.2 line: 5.0 -> 3.2 earns 1.8.
  const world::Environment env = test::line3(1.8, 3.2);
  CHECK(nav_reward(env, 0, 1, 2, false) == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(nav_reward(env, 1, 0, 2, false) == doctest::Approx(-1.8).epsilon(1e-15));
  const world::Environment stops = test::line3(2.9, 0.1);
  CHECK(nav_reward(stops, 0, 0, 1, true) == 3.0);   // 2.9 m away
  CHECK(nav_reward(stops, 0, 0, 2, true) == -3.0);  // 3.0 m away: strict boundary
  CHECK(nav_reward(stops, 2, 2, 2, true) == 3.0);
}

TEST_CASE("discounted_returns") {
  CHECK(discounted_returns({2.5}, 0.9) == std::vector<double>{2.5});
  const std::vector<double> two = discounted_returns({1.0, -3.0}, 0.9);
  CHECK(two[0] == doctest::Approx(-1.7).epsilon(1e-15));
  CHECK(two[1] == -3.0);
  CHECK(discounted_returns({}, 0.9).empty());
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r;
    for (int i = 0; i < 1 + rng.index(12); ++i) r.push_back(rng.uniform(-3, 3));
    const double gamma = rng.uniform(0.1, 1.0);
    const std::vector<double> got = discounted_returns(r, gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
      double direct = 0.0;
      for (std::size_t u = t; u < r.size(); ++u) direct += std::pow(gamma, static_cast<double>(u - t)) * r[u];
      CHECK(got[t] == doctest::Approx(direct).epsilon(1e-12));
    }
    const std::vector<double> suffix = discounted_returns(r, 1.0);
    const std::vector<double> same = discounted_returns(r, 0.0);
    double acc = 0.0;
    for (std::size_t t = r.size(); t-- > 0;) {
      acc += r[t];
      CHECK(suffix[t] == doctest::Approx(acc).epsilon(1e-12));
      CHECK(same[t] == r[t]);
    }
  }
}

TEST_CASE("exploration_reward") {
  CHECK(exploration_reward(1.3, 1.3, 3) == 0.0);
  CHECK(exploration_reward(1.5, 0.5, 2) == 0.5);
  const double beta = -0.1;
  const double step = exploration_reward(1.5, 0.5, 2) + beta;
  CHECK(step == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(discounted_returns({step, step}, 0.9)[0] == doctest::Approx(0.76).epsilon(1e-14));
  CHECK_THROWS_AS(exploration_reward(1.0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("imitation losses") {
  const Model model = test::small_model(3, 4, 1);
  Tape tape(model.params);
  SUBCASE("certain teacher actions give zero") {
    EpisodeTrace tr;
    for (int t = 0; t < 3; ++t) {
      NavStep s = uniform_step(tape, 2, 1);
      s.dist = make_distribution(tape.constant(std::vector<double>{-900, 900, -900}), {0, 1, 2}, 2);
      tr.steps.push_back(s);
    }
    CHECK(il_nav_loss(tape, tr).item() == doctest::Approx(0.0));
    CHECK(il_explore_loss(tape, tr).item() == 0.0);
  }
  SUBCASE("uniform over four actions for three steps") {
    EpisodeTrace tr;
    for (int t = 0; t < 3; ++t) tr.steps.push_back(uniform_step(tape, 3, t));
    CHECK(il_nav_loss(tape, tr).item() == doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-14));
  }
  SUBCASE("one exploration step, uniform over three candidates and STOP") {
    EpisodeTrace tr;
    tr.steps.push_back(uniform_step(tape, 3, 0));
    ExplorationRound round;
    ExplorationStep es;
    es.dist = make_distribution(tape.constant(std::vector<double>(4, 0.0)), {0, 1, 2, 3}, 3);
    es.teacher = 2;
    round.steps.push_back(es);
    tr.steps[0].exploration.rounds.push_back(round);
    CHECK(il_explore_loss(tape, tr).item() == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
}

TEST_CASE("actor-critic losses") {
  Model model = test::small_model(3, 4, 2);
  Tape tape(model.params);
  SUBCASE("returns equal to the baseline give zero") {
    EpisodeTrace tr;
    for (int t = 0; t < 2; ++t) {
      NavStep s = uniform_step(tape, 2, 0);
      s.value = tape.constant(std::vector<double>{0.7});
      s.value_v = 0.7;
      s.ret = 0.7;
      tr.steps.push_back(s);
    }
    tr.round_rewards.assign(2, {});
    const RlLoss l = rl_nav_loss(tape, tr);
    CHECK(l.total.item() == 0.0);
    CHECK(rl_explore_loss(tape, tr).total.item() == 0.0);
  }
  SUBCASE("single navigation step by hand") {
    EpisodeTrace tr;
    NavStep s = uniform_step(tape, 2, 0);
    s.dist = make_distribution(tape.constant(std::vector<double>{0.3, -0.2, 0.0}), {0, 1, 2}, 2);
    s.action = 1;
    s.value = tape.constant(std::vector<double>{0.5});
    s.value_v = 0.5;
    s.ret = 2.0;
    tr.steps.push_back(s);
    const double logp = -0.2 - std::log(std::exp(0.3) + std::exp(-0.2) + 1.0);
    const RlLoss l = rl_nav_loss(tape, tr);
    CHECK(l.advantages == std::vector<double>{1.5});
    CHECK(l.policy.item() == doctest::Approx(-1.5 * logp).epsilon(1e-14));
    CHECK(l.critic.item() == doctest::Approx(2.25).epsilon(1e-15));
    // A forced stop keeps its critic term and drops the policy term.
    tr.steps[0].forced_stop = true;
    CHECK(rl_nav_loss(tape, tr).policy.item() == 0.0);
    CHECK(rl_nav_loss(tape, tr).critic.item() == doctest::Approx(2.25).epsilon(1e-15));
  }
  SUBCASE("single one-step exploration by hand") {
    EpisodeTrace tr;
    NavStep s = uniform_step(tape, 2, 0);
    s.value = tape.constant(std::vector<double>{0.0});
    ExplorationTrace& ex = s.exploration;
    GateDecision gate;
    gate.dist = make_distribution(tape.constant(std::vector<double>{0.4, 0.0, 0.0}), {0, 1, 2}, 2);
    gate.action = 0;
    gate.value = tape.constant(std::vector<double>{0.1});
    gate.value_v = 0.1;
    ex.gates.push_back(gate);
    ExplorationRound round;
    round.gate_index = 0;
    round.steps_taken = 1;
    ExplorationStep es;
    es.dist = make_distribution(tape.constant(std::vector<double>{1.0, 0.0}), {0, 1}, 1);
    es.action = 1;
    es.value = tape.constant(std::vector<double>{-0.2});
    es.value_v = -0.2;
    round.steps.push_back(es);
    ex.rounds.push_back(round);
    tr.steps.push_back(s);
    RoundRewards rr;
    rr.base = 1.0;
    rr.step_rewards = {0.9};
    rr.returns = {0.9};
    tr.round_rewards = {{rr}};
    const double lp_gate = 0.4 - std::log(std::exp(0.4) + 2.0);
    const double lp_step = -std::log(std::exp(1.0) + 1.0);
    const RlLoss l = rl_explore_loss(tape, tr);
    CHECK(l.advantages.size() == 2u);
    CHECK(l.advantages[0] == doctest::Approx(0.8));
    CHECK(l.advantages[1] == doctest::Approx(1.1));
    CHECK(l.policy.item() == doctest::Approx(-0.8 * lp_gate - 1.1 * lp_step).epsilon(1e-14));
    CHECK(l.critic.item() == doctest::Approx(0.64 + 1.21).epsilon(1e-14));
  }
}

TEST_CASE("frozen advantages isolate the critic from the policy term") {
  Model model = test::small_model(3, 4, 5);
  const world::Environment env = world::generate_world(small_world(), 6);
  const world::Task task = world::sample_task(env, {2, 4, {0.1, 0.0}}, 6);
  const RolloutOptions opts{ExplorerFlags::for_mode(Mode::full, 2), Strategy::lazy, 6, 3.0};
  std::vector<int> choices;
  std::vector<double> frozen;
  auto policy_term = [&](const std::vector<double>* adv) {
    Tape tape(model.params);
    EpisodeTrace tr;
    if (choices.empty()) {
      Rng rng(8);
      PolicySource sampler(SelectMode::sample, &rng);
      tr = rollout_episode(tape, model, env, task, opts, sampler);
      choices = tr.decisions;
    } else {
      ReplaySource replay(choices);
      tr = rollout_episode(tape, model, env, task, opts, replay);
    }
    compute_rewards(tr, env, {});
    const RlLoss l = rl_nav_loss(tape, tr, adv);
    if (frozen.empty()) frozen = l.advantages;
    return l.policy.item();
  };
  const double base = policy_term(nullptr);
  model.params[model.id.bnv_w].value[0] += 0.25;
  CHECK(policy_term(&frozen) == base);
  CHECK(policy_term(nullptr) != base);
}

TEST_CASE("every loss passes a gradient check on randomized traces") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const test::LossCheck r = test::check_losses(seed);
    CHECK_MESSAGE(r.il_nv <= 1e-4, "seed " << seed);
    CHECK_MESSAGE(r.il_ep <= 1e-4, "seed " << seed);
    CHECK_MESSAGE(r.rl_nv <= 1e-4, "seed " << seed);
    CHECK_MESSAGE(r.rl_ep <= 1e-4, "seed " << seed);
    CHECK_MESSAGE(r.critic <= 1e-4, "seed " << seed);
  }
}

TEST_CASE("rollouts") {
  world::WorldConfig wc = small_world();
  wc.n_viewpoints = 16;
  const Model model = test::small_model(3, 4, 7);
  SUBCASE("basic mode never explores") {
    const world::Environment env = world::generate_world(wc, 2);
    for (std::uint64_t s = 1; s <= 10; ++s) {
      Tape tape(model.params);
      Rng rng(s);
      PolicySource sampler(SelectMode::sample, &rng);
      const EpisodeTrace tr = rollout_episode(tape, model, env, world::sample_task(env, {2, 5, {}}, s),
                                              {ExplorerFlags::for_mode(Mode::basic, 1), Strategy::lazy, 10, 3.0}, sampler);
      for (const NavStep& st : tr.steps) {
        CHECK(st.exploration.rounds.empty());
        CHECK(st.exploration.gates.empty());
      }
      CHECK(tr.travel.explore == 0.0);
    }
  }
  SUBCASE("teacher rollouts succeed and their rewards telescope") {
    for (std::uint64_t w = 1; w <= 5; ++w) {
      const world::Environment env = world::generate_world(wc, w);
      for (std::uint64_t s = 1; s <= 20; ++s) {
        const world::Task task = world::sample_task(env, {2, 7, {}}, s);
        for (Mode mode : {Mode::basic, Mode::full}) {
          Tape tape(model.params);
          TeacherSource teacher;
          EpisodeTrace tr = rollout_episode(tape, model, env, task, {ExplorerFlags::for_mode(mode, 2), Strategy::lazy, 15, 3.0}, teacher);
          compute_rewards(tr, env, {});
          double sum = 0.0;
          for (const NavStep& st : tr.steps) sum += st.reward;
          CHECK(tr.success);
          CHECK(tr.final_position == task.goal_id);
          CHECK(sum == doctest::Approx(env.geodesic(task.start_id, task.goal_id) + 3.0).epsilon(1e-12));
          CHECK(std::fabs(tr.steps.back().reward) == 3.0);
        }
      }
    }
  }
  SUBCASE("exploration that keeps the decision earns no base reward") {
    const world::Environment env = world::generate_world(wc, 3);
    int unchanged = 0;
    for (std::uint64_t s = 1; s <= 40; ++s) {
      Tape tape(model.params);
      Rng rng(s);
      PolicySource sampler(SelectMode::sample, &rng);
      EpisodeTrace tr = rollout_episode(tape, model, env, world::sample_task(env, {2, 5, {}}, s),
                                        {ExplorerFlags::for_mode(Mode::full, 3), Strategy::lazy, 8, 3.0}, sampler);
      compute_rewards(tr, env, {});
      for (std::size_t t = 0; t < tr.steps.size(); ++t) {
        const auto& rounds = tr.steps[t].exploration.rounds;
        REQUIRE(tr.round_rewards[t].size() == rounds.size());
        for (std::size_t r = 0; r < rounds.size(); ++r) {
          const RoundRewards& rr = tr.round_rewards[t][r];
          CHECK(rr.step_rewards.size() == static_cast<std::size_t>(rounds[r].steps_taken));
          if (rounds[r].post_argmax == rounds[r].pre_argmax) {
            ++unchanged;
            CHECK(rr.base == 0.0);
            for (double x : rr.step_rewards) CHECK(x == -0.1);
          }
        }
      }
    }
    CHECK(unchanged > 0);
  }
  SUBCASE("the travel strategy does not change any loss") {
    const world::Environment env = world::generate_world(wc, 4);
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const world::Task task = world::sample_task(env, {2, 5, {}}, s);
      auto losses = [&](Strategy strategy) {
        Tape tape(model.params);
        Rng rng(s);
        PolicySource sampler(SelectMode::sample, &rng);
        EpisodeTrace tr = rollout_episode(tape, model, env, task, {ExplorerFlags::for_mode(Mode::full, 2), strategy, 8, 3.0}, sampler);
        compute_rewards(tr, env, {});
        return std::vector<double>{il_nav_loss(tape, tr).item(), il_explore_loss(tape, tr).item(),
                                   rl_nav_loss(tape, tr).total.item(), rl_explore_loss(tape, tr).total.item(),
                                   tr.travel.total};
      };
      std::vector<double> lazy = losses(Strategy::lazy);
      std::vector<double> eager = losses(Strategy::eager);
      CHECK(lazy.back() <= eager.back() + 1e-9);
      lazy.pop_back();
      eager.pop_back();
      CHECK(lazy == eager);
    }
  }
}

TEST_CASE("train") {
  SUBCASE("all losses off leaves the parameters unchanged") {
    TrainConfig c = tiny_config();
    c.losses = {false, false, false, false};
    const TrainResult r = train(c);
    const Model fresh = Model::create({3, 4}, Rng::derive(c.seed, 1));
    for (std::size_t i = 0; i < fresh.params.size(); ++i) {
      CHECK(r.model.params[static_cast<nc::ParamId>(i)].value.storage() == fresh.params[static_cast<nc::ParamId>(i)].value.storage());
    }
  }
  SUBCASE("stage hooks fire once per curriculum stage and training is deterministic") {
    TrainConfig c = tiny_config();
    std::vector<std::pair<int, int>> stages;
    TrainHooks hooks;
    hooks.on_stage = [&](int stage, int smax, const Model&) { stages.emplace_back(stage, smax); };
    const TrainResult a = train(c, hooks);
    CHECK(stages == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    CHECK(a.log.size() == 2u);
    const TrainResult b = train(c);
    for (std::size_t i = 0; i < a.model.params.size(); ++i) {
      CHECK(a.model.params[static_cast<nc::ParamId>(i)].value.storage() == b.model.params[static_cast<nc::ParamId>(i)].value.storage());
    }
    CHECK(train_log_csv_row(a.log[1]) == train_log_csv_row(b.log[1]));
  }
  SUBCASE("a runaway learning rate is reported as divergence") {
    TrainConfig c = tiny_config();
    c.lr = 1e200;
    c.clip_norm = 0.0;
    c.epochs_per_stage = 3;
    CHECK_THROWS_AS(train(c), DivergenceError);
  }
}

TEST_CASE("imitation overfits a single task") {
  TrainConfig c = tiny_config();
  c.mode = Mode::basic;
  c.smax_schedule = {1};
  c.losses = {true, false, false, false};
  c.lambda_il = 1.0;
  c.lr = 0.5;
  c.clip_norm = 5.0;
  c.epochs_per_stage = 100;
  c.episodes_per_epoch = 4;
  c.batch_size = 4;
  const std::vector<world::Environment> worlds = make_worlds(c.world, c.train_worlds, Rng::derive(c.seed, 2));
  const world::Task task = world::sample_task(worlds[0], c.task, 5);
  c.fixed_tasks = {{0, task}};
  const TrainResult r = train(c);
  CHECK(r.log.back().il_nv < 0.05);
  const RolloutOptions opts{ExplorerFlags::for_mode(Mode::basic, 1), Strategy::lazy, c.max_steps, 3.0};
  CHECK(evaluate(r.model, worlds, c.fixed_tasks, opts).front().success);
}

TEST_CASE("train config JSON") {
  TrainConfig c = tiny_config();
  c.mode = Mode::decision;
  c.reward_baseline = RewardBaseline::step;
  c.losses.rl_ep = false;
  c.il_gate_sampling = true;
  c.strategy = Strategy::eager;
  const std::string text = train_config_to_json(c);
  CHECK(train_config_to_json(train_config_from_json(text)) == text);
  CHECK(train_config_from_json(text).il_gate_sampling);
  CHECK(train_config_from_json("{}").lambda_il == 0.2);
  CHECK_THROWS_AS(train_config_from_json(R"({"gamma": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(R"({"beta": 0.1})"), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(R"({"smax_schedule": [2, 1]})"), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(R"({"gamam": 0.9})"), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(R"({"il_gate": "maybe"})"), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json("[1, 2"), std::invalid_argument);
}
