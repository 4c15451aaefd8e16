#pragma once

// Instruction encoding, the recurrent navigation state and the navigation
// policy over candidate views plus STOP.

#include <vector>

#include "anav/model.hpp"
#include "anav/numcore.hpp"
#include "anav/rng.hpp"
#include "anav/world.hpp"

namespace anav {

struct InstructionEncoding {
  nc::Var states;  // T x H, one row per token
  int length = 0;
};

InstructionEncoding encode_instruction(nc::Tape& tape, const Model& model,
                                       const world::InstructionTokens& tokens);

struct NavigatorState {
  nc::LstmState lstm;
  int t = 0;
};

NavigatorState initial_nav_state(nc::Tape& tape, const Model& model);

/// K x d_v matrix of the candidate embeddings of an observation.
nc::Var view_matrix(nc::Tape& tape, const world::PanoramicObservation& obs);
/// One row per candidate embedding.
std::vector<nc::Var> view_rows(nc::Tape& tape, const world::PanoramicObservation& obs);

/// LSTM step over [att(X, h), att(V_prev, h), prev_action]. `prev_views` may
/// be an empty Var (no previous panorama), in which case the panorama context
/// is zero.
NavigatorState nav_step(nc::Tape& tape, const Model& model, const NavigatorState& state,
                        nc::Var prev_views, nc::Var prev_action, const InstructionEncoding& x);

/// A distribution over a subset of action codes. `actions[i]` is the action
/// code of entry i (candidate index, or the STOP code); `log_probs` is the
/// matching log-probability vector on the tape.
struct ActionDistribution {
  nc::Var log_probs;
  std::vector<double> probs;
  std::vector<double> log_p;  // numeric copy of log_probs, valid after the tape is gone
  std::vector<int> actions;
  int stop_code = 0;

  int size() const { return static_cast<int>(actions.size()); }
  /// Entry index of an action code, or -1 when it is not available.
  int entry_of(int action) const;
  /// Probability of an action code (0 for unavailable codes).
  double prob(int action) const;
  /// Log-probability Var of an available action code.
  nc::Var log_prob(int action) const;
  /// Action code with the highest probability; ties go to the lowest entry.
  int argmax() const;
};

/// Builds a distribution from logits over `actions` (entry i has logit i).
ActionDistribution make_distribution(nc::Var logits, std::vector<int> actions, int stop_code);

/// p_k = softmax_k(v_k^T W_nv h) over K candidates plus a STOP entry with logit 0.
/// Action codes are 0..K-1 and K (STOP).
ActionDistribution nav_policy(nc::Tape& tape, const Model& model, nc::Var h,
                              const std::vector<nc::Var>& candidates);

enum class SelectMode { greedy, sample };

int select_action(const ActionDistribution& dist, SelectMode mode, Rng* rng);

/// Scalar critic b(h) = w . h + b on the detached state.
nc::Var critic(nc::Tape& tape, nc::ParamId w, nc::ParamId b, nc::Var h);

}  // namespace anav
