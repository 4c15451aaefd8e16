#include "anav/training.hpp"

namespace anav {

using nc::Var;

namespace {

class RecordingSource : public DecisionSource {
 public:
  RecordingSource(DecisionSource& inner, std::vector<int>& out) : inner_(inner), out_(out) {}
  int choose(const ActionDistribution& dist, const DecisionContext& ctx) override {
    const int a = inner_.choose(dist, ctx);
    out_.push_back(a);
    return a;
  }

 private:
  DecisionSource& inner_;
  std::vector<int>& out_;
};

}  // namespace

EpisodeTrace rollout_episode(nc::Tape& tape, const Model& model, const world::Environment& env,
                             const world::Task& task, const RolloutOptions& options,
                             DecisionSource& source) {
  if (options.max_steps < 1) throw std::invalid_argument("rollout_episode: max_steps must be >= 1");
  EpisodeTrace trace;
  trace.task = task;
  RecordingSource recorder(source, trace.decisions);
  MemoryGraph memory(env, task.start_id, task.start_heading, options.strategy);

  const InstructionEncoding x = encode_instruction(tape, model, task.instruction);
  NavigatorState state = initial_nav_state(tape, model);
  Var prev_views;
  Var prev_action = tape.zeros(model.dims.view_dim());
  trace.nav_route.push_back(task.start_id);

  for (int t = 0; t < options.max_steps; ++t) {
    const int pos = memory.logical_position();
    const world::PanoramicObservation& obs = memory.observation(pos);
    const std::vector<Var> rows = view_rows(tape, obs);
    state = nav_step(tape, model, state, prev_views, prev_action, x);

    NavStep step;
    step.t = t;
    step.position = pos;
    for (const auto& c : obs.candidates) step.candidates.push_back(c.neighbor_id);
    step.value = critic(tape, model.id.bnv_w, model.id.bnv_b, state.lstm.h);
    step.value_v = step.value.item();
    step.forced_stop = t == options.max_steps - 1;
    step.teacher = world::teacher_action(env, pos, task.goal_id);

    ActionDistribution pre = nav_policy(tape, model, state.lstm.h, rows);
    step.pre_argmax = pre.argmax();
    if (options.flags.explore && !step.forced_stop) {
      ExplorationInput input{state.lstm.h, &obs, rows, task.goal_id};
      ExplorationResult ex = run_exploration(tape, model, options.flags, env, memory, input, recorder);
      step.exploration = std::move(ex.trace);
      step.dist = step.exploration.rounds.empty() ? std::move(pre)
                                                  : nav_policy(tape, model, state.lstm.h, ex.views);
    } else {
      step.dist = std::move(pre);
    }

    const int stop = obs.stop_index();
    if (step.forced_stop) {
      step.action = stop;
    } else {
      DecisionContext ctx{DecisionKind::nav, &env, task.goal_id, pos, &obs, 0, nullptr, step.teacher};
      step.action = recorder.choose(step.dist, ctx);
    }
    if (step.action == stop) {
      step.next_position = pos;
      trace.steps.push_back(std::move(step));
      break;
    }
    const int target = obs.candidates[static_cast<std::size_t>(step.action)].neighbor_id;
    memory.resolve_move(target, Phase::nav);
    step.next_position = target;
    trace.nav_route.push_back(target);
    prev_views = tape.stack(rows);
    prev_action = rows[static_cast<std::size_t>(step.action)];
    trace.steps.push_back(std::move(step));
  }

  trace.final_position = memory.logical_position();
  trace.travel = memory.finalize();
  trace.success = env.geodesic(trace.final_position, task.goal_id) < options.success_radius;
  trace.logical_walk = memory.logical_walk();
  trace.physical_walk = memory.physical_walk();
  return trace;
}

}  // namespace anav
