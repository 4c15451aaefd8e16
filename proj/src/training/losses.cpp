#include <stdexcept>

#include "anav/training.hpp"

namespace anav {

using nc::Var;

namespace {

Var sum_terms(nc::Tape& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.zeros(1);
  return tape.sum(tape.concat(terms));
}

class RlBuilder {
 public:
  RlBuilder(nc::Tape& tape, const std::vector<double>* frozen) : tape_(tape), frozen_(frozen) {}

  // One critic term per call; the policy term only when `log_prob` is valid.
  void add(double ret, Var value, double value_v, Var log_prob) {
    const std::size_t i = advantages_.size();
    double adv = ret - value_v;
    if (frozen_ != nullptr) {
      if (i >= frozen_->size()) throw std::invalid_argument("rl loss: frozen advantages too short");
      adv = (*frozen_)[i];
    }
    advantages_.push_back(adv);
    if (log_prob.valid()) policy_.push_back(tape_.scale(log_prob, -adv));
    critic_.push_back(tape_.square(tape_.sub(tape_.constant(std::vector<double>{ret}), value)));
  }

  RlLoss finish() {
    RlLoss out;
    out.policy = sum_terms(tape_, policy_);
    out.critic = sum_terms(tape_, critic_);
    out.total = tape_.add(out.policy, out.critic);
    out.advantages = std::move(advantages_);
    return out;
  }

 private:
  nc::Tape& tape_;
  const std::vector<double>* frozen_;
  std::vector<Var> policy_;
  std::vector<Var> critic_;
  std::vector<double> advantages_;
};

}  // namespace

Var il_nav_loss(nc::Tape& tape, const EpisodeTrace& trace) {
  std::vector<Var> terms;
  for (const NavStep& step : trace.steps) {
    terms.push_back(tape.scale(step.dist.log_prob(step.teacher), -1.0));
  }
  return sum_terms(tape, terms);
}

Var il_explore_loss(nc::Tape& tape, const EpisodeTrace& trace) {
  std::vector<Var> terms;
  for (const NavStep& step : trace.steps) {
    for (const GateDecision& gate : step.exploration.gates) {
      if (gate.teacher >= 0 && gate.dist.entry_of(gate.teacher) >= 0) {
        terms.push_back(tape.scale(gate.dist.log_prob(gate.teacher), -1.0));
      }
    }
    for (const ExplorationRound& round : step.exploration.rounds) {
      for (const ExplorationStep& s : round.steps) {
        if (s.teacher >= 0) terms.push_back(tape.scale(s.dist.log_prob(s.teacher), -1.0));
      }
    }
  }
  return sum_terms(tape, terms);
}

RlLoss rl_nav_loss(nc::Tape& tape, const EpisodeTrace& trace, const std::vector<double>* frozen) {
  RlBuilder b(tape, frozen);
  for (const NavStep& step : trace.steps) {
    b.add(step.ret, step.value, step.value_v,
          step.forced_stop ? Var() : step.dist.log_prob(step.action));
  }
  return b.finish();
}

RlLoss rl_explore_loss(nc::Tape& tape, const EpisodeTrace& trace,
                       const std::vector<double>* frozen) {
  if (trace.round_rewards.size() != trace.steps.size()) {
    throw std::logic_error("rl_explore_loss: rewards not computed");
  }
  RlBuilder b(tape, frozen);
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const ExplorationTrace& ex = trace.steps[t].exploration;
    for (std::size_t r = 0; r < ex.rounds.size(); ++r) {
      const ExplorationRound& round = ex.rounds[r];
      const RoundRewards& rr = trace.round_rewards[t][r];
      if (round.gate_index >= 0) {
        const GateDecision& gate = ex.gates[static_cast<std::size_t>(round.gate_index)];
        b.add(rr.returns.front(), gate.value, gate.value_v, gate.dist.log_prob(gate.action));
      }
      for (std::size_t s = 0; s < round.steps.size(); ++s) {
        const ExplorationStep& step = round.steps[s];
        b.add(rr.returns[s], step.value, step.value_v,
              step.forced_stop ? Var() : step.dist.log_prob(step.action));
      }
    }
  }
  return b.finish();
}

}  // namespace anav
