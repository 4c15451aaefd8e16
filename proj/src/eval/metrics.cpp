#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "anav/eval.hpp"

namespace anav {

MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces,
                              const std::vector<world::Environment>& worlds, double radius,
                              OracleScope scope) {
  MetricsReport report;
  report.episodes = static_cast<int>(traces.size());
  for (const EpisodeTrace& tr : traces) {
    const world::Environment& env = worlds.at(static_cast<std::size_t>(tr.world_index));
    const int goal = tr.task.goal_id;
    EpisodeMetrics m;
    m.ne = env.geodesic(tr.final_position, goal);
    m.success = m.ne < radius;
    const std::vector<int>& seen = scope == OracleScope::all ? tr.logical_walk : tr.nav_route;
    m.oracle_success = m.success;
    for (int v : seen) m.oracle_success = m.oracle_success || env.geodesic(v, goal) < radius;
    m.tl = tr.travel.total;
    m.tl_nav = tr.travel.nav;
    m.tl_explore = tr.travel.explore;
    m.shortest = tr.task.shortest_distance;
    m.spl = m.success ? m.shortest / std::max(m.tl, m.shortest) : 0.0;
    report.rows.push_back(m);
  }
  for (const EpisodeMetrics& m : report.rows) {
    report.sr += m.success ? 1.0 : 0.0;
    report.oracle += m.oracle_success ? 1.0 : 0.0;
    report.ne += m.ne;
    report.tl += m.tl;
    report.spl += m.spl;
  }
  if (report.episodes > 0) {
    const double n = report.episodes;
    report.sr /= n;
    report.oracle /= n;
    report.ne /= n;
    report.tl /= n;
    report.spl /= n;
  }
  report.stats = exploration_stats(traces);
  return report;
}

ExplorationStats exploration_stats(const std::vector<EpisodeTrace>& traces) {
  ExplorationStats s;
  long directions = 0;
  long moves = 0;
  int changed = 0;
  int corrected = 0;
  for (const EpisodeTrace& tr : traces) {
    s.tl_nav += tr.travel.nav;
    s.tl_explore += tr.travel.explore;
    for (const NavStep& step : tr.steps) {
      ++s.nav_steps;
      const auto& rounds = step.exploration.rounds;
      if (rounds.empty()) continue;
      ++s.explored_steps;
      directions += static_cast<long>(rounds.size());
      for (const ExplorationRound& r : rounds) moves += r.steps_taken;
      if (step.action != step.pre_argmax) {
        ++changed;
        if (step.action == step.teacher) ++corrected;
      }
    }
  }
  if (!traces.empty()) {
    s.tl_nav /= static_cast<double>(traces.size());
    s.tl_explore /= static_cast<double>(traces.size());
  }
  if (s.nav_steps > 0) s.exploration_rate = static_cast<double>(s.explored_steps) / s.nav_steps;
  if (s.explored_steps > 0) {
    s.avg_directions = static_cast<double>(directions) / s.explored_steps;
    s.avg_steps_per_direction = static_cast<double>(moves) / static_cast<double>(directions);
    s.decision_change_rate = static_cast<double>(changed) / s.explored_steps;
  }
  if (changed > 0) s.corrected_rate = static_cast<double>(corrected) / changed;
  return s;
}

std::string stats_to_json(const ExplorationStats& s) {
  nlohmann::ordered_json j;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["nav_steps"] = s.nav_steps;
  j["explored_steps"] = s.explored_steps;
  j["exploration_rate"] = s.exploration_rate;
  j["avg_directions"] = opt(s.avg_directions);
  j["avg_steps_per_direction"] = opt(s.avg_steps_per_direction);
  j["decision_change_rate"] = opt(s.decision_change_rate);
  j["corrected_rate"] = opt(s.corrected_rate);
  j["tl_nav"] = s.tl_nav;
  j["tl_explore"] = s.tl_explore;
  return j.dump(2);
}

std::string metrics_csv_header() {
  return "label,episodes,sr,ne,tl,or,spl,tl_nav,tl_explore,exploration_rate";
}

std::string metrics_csv_row(const std::string& label, const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", label.c_str(),
                r.episodes, r.sr, r.ne, r.tl, r.oracle, r.spl, r.stats.tl_nav, r.stats.tl_explore,
                r.stats.exploration_rate);
  return buf;
}

}  // namespace anav
