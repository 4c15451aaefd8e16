#include "anav/navigator.hpp"

#include <cmath>
#include <stdexcept>

namespace anav {

using nc::Var;

InstructionEncoding encode_instruction(nc::Tape& tape, const Model& model,
                                       const world::InstructionTokens& tokens) {
  if (tokens.tokens.empty()) throw std::invalid_argument("encode_instruction: empty instruction");
  const int h = model.dims.hidden;
  const Var w = tape.param(model.id.enc_w);
  const Var b = tape.param(model.id.enc_b);
  nc::LstmState state{tape.zeros(h), tape.zeros(h)};
  std::vector<Var> rows;
  for (const auto& token : tokens.tokens) {
    if (static_cast<int>(token.size()) != model.dims.landmark_dim) {
      throw std::invalid_argument("encode_instruction: token dimension mismatch");
    }
    state = nc::lstm_step(w, b, tape.constant(token), state);
    rows.push_back(state.h);
  }
  return {tape.stack(rows), tokens.size()};
}

NavigatorState initial_nav_state(nc::Tape& tape, const Model& model) {
  const int h = model.dims.hidden;
  return {{tape.zeros(h), tape.zeros(h)}, 0};
}

Var view_matrix(nc::Tape& tape, const world::PanoramicObservation& obs) {
  const int k = obs.size();
  const int d = obs.embedding_dim;
  nc::Tensor m(k, d);
  for (int r = 0; r < k; ++r) {
    const auto& e = obs.candidates[static_cast<std::size_t>(r)].embedding;
    for (int c = 0; c < d; ++c) m.at(r, c) = e[static_cast<std::size_t>(c)];
  }
  return tape.constant(std::move(m));
}

std::vector<Var> view_rows(nc::Tape& tape, const world::PanoramicObservation& obs) {
  std::vector<Var> rows;
  rows.reserve(obs.candidates.size());
  for (const auto& c : obs.candidates) rows.push_back(tape.constant(c.embedding));
  return rows;
}

NavigatorState nav_step(nc::Tape& tape, const Model& model, const NavigatorState& state,
                        Var prev_views, Var prev_action, const InstructionEncoding& x) {
  const int dv = model.dims.view_dim();
  if (prev_action.size() != dv) throw std::invalid_argument("nav_step: action embedding dim");
  const Var h = state.lstm.h;
  const Var instr = nc::attend(x.states, h, tape.param(model.id.att_instr)).context;
  Var pano;
  if (prev_views.valid() && prev_views.value().rows() > 0) {
    if (prev_views.value().cols() != dv) throw std::invalid_argument("nav_step: view dim");
    pano = nc::attend(prev_views, h, tape.param(model.id.att_pano)).context;
  } else {
    pano = tape.zeros(dv);
  }
  const Var parts[3] = {instr, pano, prev_action};
  NavigatorState next;
  next.lstm = nc::lstm_step(tape.param(model.id.nav_w), tape.param(model.id.nav_b),
                            tape.concat(parts), state.lstm);
  next.t = state.t + 1;
  return next;
}

int ActionDistribution::entry_of(int action) const {
  for (int i = 0; i < size(); ++i) {
    if (actions[static_cast<std::size_t>(i)] == action) return i;
  }
  return -1;
}

double ActionDistribution::prob(int action) const {
  const int e = entry_of(action);
  return e < 0 ? 0.0 : probs[static_cast<std::size_t>(e)];
}

Var ActionDistribution::log_prob(int action) const {
  const int e = entry_of(action);
  if (e < 0) throw std::out_of_range("ActionDistribution: action not available");
  return log_probs.tape()->pick(log_probs, e);
}

int ActionDistribution::argmax() const {
  int best = 0;
  for (int i = 1; i < size(); ++i) {
    if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
  }
  return actions[static_cast<std::size_t>(best)];
}

ActionDistribution make_distribution(Var logits, std::vector<int> actions, int stop_code) {
  if (logits.size() != static_cast<int>(actions.size()) || actions.empty()) {
    throw std::invalid_argument("make_distribution: logits/actions mismatch");
  }
  ActionDistribution d;
  d.log_probs = logits.tape()->log_softmax(logits);
  d.actions = std::move(actions);
  d.stop_code = stop_code;
  // Probabilities from the same normalization as the log-probabilities.
  const auto& lp = d.log_probs.value();
  d.log_p = lp.storage();
  d.probs.resize(d.actions.size());
  for (int i = 0; i < lp.size(); ++i) d.probs[static_cast<std::size_t>(i)] = std::exp(lp[i]);
  return d;
}

ActionDistribution nav_policy(nc::Tape& tape, const Model& model, Var h,
                              const std::vector<Var>& candidates) {
  const int k = static_cast<int>(candidates.size());
  std::vector<int> actions(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) actions[static_cast<std::size_t>(i)] = i;
  const Var stop = tape.zeros(1);
  if (k == 0) return make_distribution(stop, std::move(actions), 0);
  const Var u = tape.matvec(tape.param(model.id.nv), h);
  const Var scores = tape.matvec(tape.stack(candidates), u);
  const Var parts[2] = {scores, stop};
  return make_distribution(tape.concat(parts), std::move(actions), k);
}

int select_action(const ActionDistribution& dist, SelectMode mode, Rng* rng) {
  if (mode == SelectMode::greedy) return dist.argmax();
  if (rng == nullptr) throw std::invalid_argument("select_action: sampling needs an rng");
  const double u = rng->uniform();
  double cum = 0.0;
  int last = 0;
  for (int i = 0; i < dist.size(); ++i) {
    const double p = dist.probs[static_cast<std::size_t>(i)];
    if (p <= 0.0) continue;
    cum += p;
    last = i;
    if (u < cum) return dist.actions[static_cast<std::size_t>(i)];
  }
  return dist.actions[static_cast<std::size_t>(last)];
}

Var critic(nc::Tape& tape, nc::ParamId w, nc::ParamId b, Var h) {
  return tape.add(tape.matvec(tape.param(w), tape.detach(h)), tape.param(b));
}

}  // namespace anav
