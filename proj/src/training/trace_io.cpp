#include <json.hpp>

#include "anav/training.hpp"

namespace anav {

using nlohmann::ordered_json;

std::string episode_to_jsonl(const EpisodeTrace& trace) {
  ordered_json j;
  j["world"] = trace.world_index;
  j["start"] = trace.task.start_id;
  j["goal"] = trace.task.goal_id;
  j["shortest"] = trace.task.shortest_distance;
  j["final"] = trace.final_position;
  j["success"] = trace.success;
  j["tl"] = trace.travel.total;
  j["tl_nav"] = trace.travel.nav;
  j["tl_explore"] = trace.travel.explore;
  j["nav_route"] = trace.nav_route;
  j["logical_walk"] = trace.logical_walk;
  j["physical_walk"] = trace.physical_walk;
  j["decisions"] = trace.decisions;
  ordered_json steps = ordered_json::array();
  for (const NavStep& s : trace.steps) {
    ordered_json js;
    js["t"] = s.t;
    js["position"] = s.position;
    js["action"] = s.action;
    js["teacher"] = s.teacher;
    js["pre_argmax"] = s.pre_argmax;
    js["forced_stop"] = s.forced_stop;
    js["log_prob"] = s.dist.log_p[static_cast<std::size_t>(s.dist.entry_of(s.action))];
    js["value"] = s.value_v;
    js["reward"] = s.reward;
    ordered_json rounds = ordered_json::array();
    for (const ExplorationRound& r : s.exploration.rounds) {
      rounds.push_back({{"direction", r.direction},
                        {"steps", r.steps_taken},
                        {"visited", r.visited},
                        {"pre_argmax", r.pre_argmax},
                        {"post_argmax", r.post_argmax}});
    }
    js["rounds"] = rounds;
    steps.push_back(std::move(js));
  }
  j["steps"] = steps;
  return j.dump();
}

std::string exploration_steps_to_jsonl(const EpisodeTrace& trace) {
  std::string out;
  for (const NavStep& nav : trace.steps) {
    for (const ExplorationRound& r : nav.exploration.rounds) {
      auto emit = [&](int s, int position, int action, double log_prob, double value) {
        ordered_json j;
        j["t"] = nav.t;
        j["k"] = r.direction;
        j["s"] = s;
        j["position"] = position;
        j["action"] = action;
        j["log_prob"] = log_prob;
        j["value"] = value;
        out += j.dump();
        out += '\n';
      };
      if (r.gate_index >= 0) {
        const GateDecision& g = nav.exploration.gates[static_cast<std::size_t>(r.gate_index)];
        emit(0, nav.position, g.action, g.dist.log_p[static_cast<std::size_t>(g.dist.entry_of(g.action))],
             g.value_v);
      }
      for (const ExplorationStep& st : r.steps) {
        emit(st.s, st.position, st.action,
             st.dist.log_p[static_cast<std::size_t>(st.dist.entry_of(st.action))], st.value_v);
      }
      if (r.steps.empty()) emit(1, r.direction_id, -1, 0.0, 0.0);
    }
  }
  return out;
}

}  // namespace anav
