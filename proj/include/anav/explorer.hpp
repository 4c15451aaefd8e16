#pragma once

// Active exploration: where-to-explore decisions, multi-step exploration
// rounds, knowledge gathering and storage, and residual knowledge updates.

#include <string>
#include <vector>

#include "anav/memory.hpp"
#include "anav/model.hpp"
#include "anav/navigator.hpp"
#include "anav/numcore.hpp"
#include "anav/rng.hpp"
#include "anav/world.hpp"

namespace anav {

enum class Mode { basic, naive, decision, full };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct ExplorerFlags {
  bool explore = false;  // false only for the basic agent
  bool gate = false;     // learned where-to-explore decisions
  bool direct = false;   // one-step direct attention update instead of the recurrent path
  int s_max = 1;

  /// Flags for a mode. naive and decision force s_max = 1.
  static ExplorerFlags for_mode(Mode mode, int s_max);
};

/// Masked where-to-explore distribution. Action codes are direction indices
/// 0..K-1 for unmasked directions and K for STOP. Masked directions are absent
/// (probability exactly 0).
ActionDistribution explore_decision(nc::Tape& tape, const Model& model, nc::Var h_nv,
                                    const std::vector<nc::Var>& views,
                                    const std::vector<bool>& mask);

/// y_hat = att(Y, h_ep).
nc::Var gather(nc::Tape& tape, const Model& model, nc::Var views, nc::Var h_ep);

/// Knowledge-storage LSTM step.
nc::LstmState store(nc::Tape& tape, const Model& model, nc::Var y_hat, const nc::LstmState& kw);

/// Exploration-state LSTM step over [h_nv, y_prev, a_prev].
nc::LstmState explore_state_step(nc::Tape& tape, const Model& model, const nc::LstmState& ep,
                                 nc::Var y_prev, nc::Var a_prev, nc::Var h_nv);

/// Distribution over the K' views of Y plus STOP from [h_kw, h_ep]. Action
/// codes 0..K'-1 and K' (STOP).
ActionDistribution explore_policy(nc::Tape& tape, const Model& model, nc::Var h_kw, nc::Var h_ep,
                                  const std::vector<nc::Var>& views);

/// v + W_o h_kw.
nc::Var update_knowledge(nc::Tape& tape, const Model& model, nc::Var v, nc::Var h_kw);
/// v + W_o_view o_hat (one-step case).
nc::Var update_knowledge_direct(nc::Tape& tape, const Model& model, nc::Var v, nc::Var o_hat);

enum class DecisionKind { nav, gate, step };

/// What a decision source may look at.
struct DecisionContext {
  DecisionKind kind = DecisionKind::nav;
  const world::Environment* env = nullptr;
  int goal = -1;
  int position = -1;                              // logical viewpoint
  const world::PanoramicObservation* obs = nullptr;  // observation at `position`
  int round = 0;                                  // gate decisions: rounds already run
  const std::vector<bool>* explored = nullptr;    // gate decisions: directions already explored
  int teacher = -1;                               // supervision label (action code)
};

/// Chooses actions for every decision point of a rollout.
class DecisionSource {
 public:
  virtual ~DecisionSource() = default;
  virtual int choose(const ActionDistribution& dist, const DecisionContext& ctx) = 0;
};

/// Greedy or sampled choices from the model's own distributions.
class PolicySource : public DecisionSource {
 public:
  PolicySource(SelectMode mode, Rng* rng) : mode_(mode), rng_(rng) {}
  int choose(const ActionDistribution& dist, const DecisionContext& ctx) override;

 private:
  SelectMode mode_;
  Rng* rng_;
};

/// Follows the supervision label at every decision.
class TeacherSource : public DecisionSource {
 public:
  int choose(const ActionDistribution& dist, const DecisionContext& ctx) override;
};

/// Teacher labels for navigation and exploration steps; gate decisions are
/// sampled from the model so the navigator also sees explorations of
/// non-teacher directions.
class GateSamplingTeacherSource : public DecisionSource {
 public:
  explicit GateSamplingTeacherSource(Rng* rng) : rng_(rng) {}
  int choose(const ActionDistribution& dist, const DecisionContext& ctx) override;

 private:
  Rng* rng_;
};

/// Replays a recorded sequence of choices, in decision order.
class ReplaySource : public DecisionSource {
 public:
  explicit ReplaySource(std::vector<int> choices) : choices_(std::move(choices)) {}
  int choose(const ActionDistribution& dist, const DecisionContext& ctx) override;

 private:
  std::vector<int> choices_;
  std::size_t next_ = 0;
};

/// Supervision label of a decision: gate -> teacher direction while it is
/// unexplored, STOP once it has been explored; step/nav -> teacher_action at
/// the position.
int teacher_label(const DecisionContext& ctx);

struct ExplorationStep {
  int s = 0;                // 1-based exploration step
  int position = 0;         // viewpoint where the policy was evaluated
  ActionDistribution dist;  // explore_policy over Y_s (+ STOP)
  int action = 0;           // taken action code (STOP when forced)
  int teacher = 0;          // supervision label
  bool forced_stop = false; // s == s_max: no policy action taken
  nc::Var value;            // b_ep(h_ep_s)
  double value_v = 0.0;
  int moved_to = -1;        // next viewpoint, -1 on STOP
};

struct GateDecision {
  ActionDistribution dist;
  int action = 0;   // direction index or STOP code
  int teacher = 0;
  nc::Var value;    // b_ep(h_nv)
  double value_v = 0.0;
};

struct ExplorationRound {
  int direction = 0;          // candidate index k
  int direction_id = 0;       // neighbor viewpoint id
  int gate_index = -1;        // index into ExplorationTrace::gates, -1 without gate
  std::vector<ExplorationStep> steps;  // empty for the direct path
  int steps_taken = 0;        // S_{t,k}: exploration moves in the round
  std::vector<int> visited;   // viewpoints reached, in order
  int pre_argmax = 0;         // nav argmax before the round
  int post_argmax = 0;        // nav argmax after the update
};

struct ExplorationTrace {
  std::vector<GateDecision> gates;
  std::vector<ExplorationRound> rounds;
};

struct ExplorationResult {
  std::vector<nc::Var> views;  // updated V~_t rows
  ExplorationTrace trace;
};

struct ExplorationInput {
  nc::Var h_nv;
  const world::PanoramicObservation* obs = nullptr;  // V_t
  std::vector<nc::Var> views;                         // V_t rows on the tape
  int goal = -1;                                      // for supervision labels only
};

/// Runs exploration rounds from the memory's logical position until the gate
/// stops or all directions are explored. All moves go through `memory`; the
/// logical position is restored after each round.
ExplorationResult run_exploration(nc::Tape& tape, const Model& model, const ExplorerFlags& flags,
                                  const world::Environment& env, MemoryGraph& memory,
                                  const ExplorationInput& input, DecisionSource& source);

}  // namespace anav
