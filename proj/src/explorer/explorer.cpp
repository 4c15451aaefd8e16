#include "anav/explorer.hpp"

#include <stdexcept>

namespace anav {

using nc::Var;

Mode parse_mode(const std::string& name) {
  if (name == "basic") return Mode::basic;
  if (name == "naive") return Mode::naive;
  if (name == "decision") return Mode::decision;
  if (name == "full") return Mode::full;
  throw std::invalid_argument("unknown mode '" + name + "' (basic, naive, decision, full)");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::basic: return "basic";
    case Mode::naive: return "naive";
    case Mode::decision: return "decision";
    case Mode::full: return "full";
  }
  return "?";
}

ExplorerFlags ExplorerFlags::for_mode(Mode mode, int s_max) {
  if (s_max < 1) throw std::invalid_argument("s_max must be >= 1");
  switch (mode) {
    case Mode::basic: return {false, false, false, 1};
    case Mode::naive: return {true, false, true, 1};
    case Mode::decision: return {true, true, true, 1};
    case Mode::full: return {true, true, false, s_max};
  }
  return {};
}

ActionDistribution explore_decision(nc::Tape& tape, const Model& model, Var h_nv,
                                    const std::vector<Var>& views, const std::vector<bool>& mask) {
  const int k = static_cast<int>(views.size());
  if (static_cast<int>(mask.size()) != k) throw std::invalid_argument("explore_decision: mask size");
  std::vector<int> open;
  for (int i = 0; i < k; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) open.push_back(i);
  }
  std::vector<int> actions = open;
  actions.push_back(k);
  if (open.empty()) return make_distribution(tape.zeros(1), std::move(actions), k);
  const Var stacked = tape.stack(views);
  const Var v_hat = nc::attend(stacked, h_nv, tape.param(model.id.att_decision)).context;
  const Var ctx_parts[2] = {v_hat, h_nv};
  const Var q = tape.matvec(tape.param(model.id.ep_dir), tape.concat(ctx_parts));
  const Var scores = tape.matvec(stacked, q);
  const Var parts[2] = {tape.select(scores, open), tape.zeros(1)};
  return make_distribution(tape.concat(parts), std::move(actions), k);
}

Var gather(nc::Tape& tape, const Model& model, Var views, Var h_ep) {
  return nc::attend(views, h_ep, tape.param(model.id.att_gather)).context;
}

nc::LstmState store(nc::Tape& tape, const Model& model, Var y_hat, const nc::LstmState& kw) {
  return nc::lstm_step(tape.param(model.id.kw_w), tape.param(model.id.kw_b), y_hat, kw);
}

nc::LstmState explore_state_step(nc::Tape& tape, const Model& model, const nc::LstmState& ep,
                                 Var y_prev, Var a_prev, Var h_nv) {
  const Var parts[3] = {h_nv, y_prev, a_prev};
  return nc::lstm_step(tape.param(model.id.ep_w), tape.param(model.id.ep_b), tape.concat(parts), ep);
}

ActionDistribution explore_policy(nc::Tape& tape, const Model& model, Var h_kw, Var h_ep,
                                  const std::vector<Var>& views) {
  const int k = static_cast<int>(views.size());
  std::vector<int> actions(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) actions[static_cast<std::size_t>(i)] = i;
  if (k == 0) return make_distribution(tape.zeros(1), std::move(actions), 0);
  const Var state_parts[2] = {h_kw, h_ep};
  const Var q = tape.matvec(tape.param(model.id.ep_step), tape.concat(state_parts));
  const Var parts[2] = {tape.matvec(tape.stack(views), q), tape.zeros(1)};
  return make_distribution(tape.concat(parts), std::move(actions), k);
}

Var update_knowledge(nc::Tape& tape, const Model& model, Var v, Var h_kw) {
  return tape.add(v, tape.matvec(tape.param(model.id.o), h_kw));
}

Var update_knowledge_direct(nc::Tape& tape, const Model& model, Var v, Var o_hat) {
  return tape.add(v, tape.matvec(tape.param(model.id.o_view), o_hat));
}

int PolicySource::choose(const ActionDistribution& dist, const DecisionContext&) {
  return select_action(dist, mode_, rng_);
}

int TeacherSource::choose(const ActionDistribution& dist, const DecisionContext& ctx) {
  if (ctx.teacher < 0 || dist.entry_of(ctx.teacher) < 0) {
    throw std::logic_error("TeacherSource: no valid supervision label");
  }
  return ctx.teacher;
}

int GateSamplingTeacherSource::choose(const ActionDistribution& dist, const DecisionContext& ctx) {
  if (ctx.kind == DecisionKind::gate) return select_action(dist, SelectMode::sample, rng_);
  return TeacherSource().choose(dist, ctx);
}

int ReplaySource::choose(const ActionDistribution& dist, const DecisionContext&) {
  if (next_ >= choices_.size()) throw std::logic_error("ReplaySource: recorded choices exhausted");
  const int a = choices_[next_++];
  if (dist.entry_of(a) < 0) throw std::logic_error("ReplaySource: recorded choice not available");
  return a;
}

int teacher_label(const DecisionContext& ctx) {
  if (ctx.env == nullptr || ctx.goal < 0 || ctx.obs == nullptr) return -1;
  const int a = world::teacher_action(*ctx.env, ctx.position, ctx.goal);
  if (ctx.kind == DecisionKind::gate && ctx.explored != nullptr && a < ctx.obs->stop_index() &&
      (*ctx.explored)[static_cast<std::size_t>(a)]) {
    return ctx.obs->stop_index();
  }
  return a;
}

ExplorationResult run_exploration(nc::Tape& tape, const Model& model, const ExplorerFlags& flags,
                                  const world::Environment& env, MemoryGraph& memory,
                                  const ExplorationInput& input, DecisionSource& source) {
  ExplorationResult result;
  result.views = input.views;
  if (!flags.explore) return result;
  const world::PanoramicObservation& obs = *input.obs;
  const int k_count = obs.size();
  const int origin = memory.logical_position();
  std::vector<bool> mask(static_cast<std::size_t>(k_count), false);
  auto& views = result.views;

  for (int round = 0; round < k_count; ++round) {
    int k = -1;
    int gate_index = -1;
    if (flags.gate) {
      GateDecision gate;
      gate.dist = explore_decision(tape, model, input.h_nv, views, mask);
      DecisionContext ctx{DecisionKind::gate, &env, input.goal, origin, &obs, round, &mask, -1};
      ctx.teacher = teacher_label(ctx);
      gate.teacher = ctx.teacher;
      gate.action = source.choose(gate.dist, ctx);
      gate.value = critic(tape, model.id.bep_w, model.id.bep_b, input.h_nv);
      gate.value_v = gate.value.item();
      result.trace.gates.push_back(std::move(gate));
      gate_index = static_cast<int>(result.trace.gates.size()) - 1;
      if (result.trace.gates.back().action == k_count) break;
      k = result.trace.gates.back().action;
    } else {
      k = round;
    }
    mask[static_cast<std::size_t>(k)] = true;

    ExplorationRound rec;
    rec.direction = k;
    rec.direction_id = obs.candidates[static_cast<std::size_t>(k)].neighbor_id;
    rec.gate_index = gate_index;
    rec.pre_argmax = nav_policy(tape, model, input.h_nv, views).argmax();

    memory.resolve_move(rec.direction_id, Phase::explore);
    rec.visited.push_back(rec.direction_id);
    rec.steps_taken = 1;

    if (flags.direct) {
      const Var o = view_matrix(tape, memory.observation(rec.direction_id));
      const Var o_hat = gather(tape, model, o, input.h_nv);
      views[static_cast<std::size_t>(k)] =
          update_knowledge_direct(tape, model, views[static_cast<std::size_t>(k)], o_hat);
    } else {
      const int h = model.dims.hidden;
      nc::LstmState ep{input.h_nv, tape.zeros(h)};
      nc::LstmState kw{tape.zeros(h), tape.zeros(h)};
      Var y_prev = gather(tape, model, tape.stack(input.views), input.h_nv);
      Var a_prev = input.views[static_cast<std::size_t>(k)];
      for (int s = 1;; ++s) {
        ep = explore_state_step(tape, model, ep, y_prev, a_prev, input.h_nv);
        const int pos = memory.logical_position();
        const world::PanoramicObservation& y_obs = memory.observation(pos);
        const std::vector<Var> y_rows = view_rows(tape, y_obs);
        const Var y_hat = gather(tape, model, tape.stack(y_rows), ep.h);
        kw = store(tape, model, y_hat, kw);

        ExplorationStep step;
        step.s = s;
        step.position = pos;
        step.dist = explore_policy(tape, model, kw.h, ep.h, y_rows);
        DecisionContext ctx{DecisionKind::step, &env, input.goal, pos, &y_obs, round, nullptr, -1};
        ctx.teacher = teacher_label(ctx);
        step.teacher = ctx.teacher;
        step.value = critic(tape, model.id.bep_w, model.id.bep_b, ep.h);
        step.value_v = step.value.item();
        step.forced_stop = s >= flags.s_max;
        step.action = step.forced_stop ? y_obs.stop_index() : source.choose(step.dist, ctx);
        const int action = step.action;
        if (action != y_obs.stop_index()) {
          step.moved_to = y_obs.candidates[static_cast<std::size_t>(action)].neighbor_id;
        }
        rec.steps.push_back(std::move(step));
        if (action == y_obs.stop_index()) break;
        const int next = rec.steps.back().moved_to;
        memory.resolve_move(next, Phase::explore);
        rec.visited.push_back(next);
        ++rec.steps_taken;
        y_prev = y_hat;
        a_prev = y_rows[static_cast<std::size_t>(action)];
      }
      views[static_cast<std::size_t>(k)] =
          update_knowledge(tape, model, views[static_cast<std::size_t>(k)], kw.h);
    }

    memory.return_to(origin);
    rec.post_argmax = nav_policy(tape, model, input.h_nv, views).argmax();
    result.trace.rounds.push_back(std::move(rec));
  }
  return result;
}

}  // namespace anav
