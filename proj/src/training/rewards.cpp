#include <stdexcept>

#include "anav/training.hpp"

namespace anav {

double nav_reward(const world::Environment& env, int from, int to, int goal, bool is_final,
                  double radius) {
  if (is_final) return env.geodesic(to, goal) < radius ? 3.0 : -3.0;
  return env.geodesic(from, goal) - env.geodesic(to, goal);
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

double exploration_reward(double r_after, double r_before, int steps) {
  if (steps < 1) throw std::invalid_argument("exploration_reward: S must be >= 1");
  return (r_after - r_before) / static_cast<double>(steps);
}

namespace {

// Distance gain of a navigation action from `pos`; STOP gains nothing.
double action_gain(const world::Environment& env, const NavStep& step, int action, int goal) {
  if (action >= static_cast<int>(step.candidates.size())) return 0.0;
  return nav_reward(env, step.position, step.candidates[static_cast<std::size_t>(action)], goal,
                    false);
}

}  // namespace

void compute_rewards(EpisodeTrace& trace, const world::Environment& env, const RewardConfig& cfg) {
  const int goal = trace.task.goal_id;
  std::vector<double> rewards;
  for (NavStep& step : trace.steps) {
    const bool stop = step.action == static_cast<int>(step.candidates.size());
    step.reward = stop ? nav_reward(env, step.position, step.position, goal, true, cfg.success_radius)
                       : nav_reward(env, step.position, step.next_position, goal, false);
    rewards.push_back(step.reward);
  }
  const std::vector<double> returns = discounted_returns(rewards, cfg.gamma);
  for (std::size_t t = 0; t < trace.steps.size(); ++t) trace.steps[t].ret = returns[t];

  trace.round_rewards.assign(trace.steps.size(), {});
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const NavStep& step = trace.steps[t];
    for (const ExplorationRound& round : step.exploration.rounds) {
      const int before = cfg.baseline == RewardBaseline::round ? round.pre_argmax : step.pre_argmax;
      RoundRewards rr;
      rr.base = exploration_reward(action_gain(env, step, round.post_argmax, goal),
                                   action_gain(env, step, before, goal), round.steps_taken);
      rr.step_rewards.assign(static_cast<std::size_t>(round.steps_taken), rr.base + cfg.beta);
      rr.returns = discounted_returns(rr.step_rewards, cfg.gamma);
      trace.round_rewards[t].push_back(std::move(rr));
    }
  }
}

}  // namespace anav
