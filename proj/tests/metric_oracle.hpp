#pragma once

// Randomized traces and a brute-force per-episode metric recomputation that
// shares nothing with the library's metric code or shortest paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "anav/eval.hpp"

namespace anav::test {

// All-pairs geodesics by Floyd-Warshall over the edge list.
inline std::vector<std::vector<double>> all_pairs(const world::Environment& env) {
  const std::size_t n = static_cast<std::size_t>(env.size());
  std::vector<std::vector<double>> d(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0.0;
    for (int j : env.neighbors(static_cast<int>(i))) {
      const auto& a = env.viewpoint(static_cast<int>(i)).position;
      const auto& b = env.viewpoint(j).position;
      d[i][static_cast<std::size_t>(j)] = std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

struct RandomBatch {
  std::vector<world::Environment> worlds;
  std::vector<EpisodeTrace> traces;
};

inline RandomBatch random_traces(int n, std::uint64_t seed) {
  RandomBatch b;
  world::WorldConfig wc;
  wc.n_viewpoints = 14;
  wc.landmark_dim = 2;
  for (std::uint64_t w = 0; w < 4; ++w) b.worlds.push_back(world::generate_world(wc, seed + w));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    EpisodeTrace tr;
    tr.world_index = rng.index(4);
    const world::Environment& env = b.worlds[static_cast<std::size_t>(tr.world_index)];
    tr.task = world::sample_task(env, {1, 6, {}}, rng.next_u64());
    tr.final_position = rng.index(env.size());
    tr.nav_route = {tr.task.start_id};
    tr.logical_walk = {tr.task.start_id};
    for (int k = rng.index(6); k > 0; --k) {
      const int v = rng.index(env.size());
      tr.logical_walk.push_back(v);
      if (rng.uniform() < 0.5) tr.nav_route.push_back(v);
    }
    tr.nav_route.push_back(tr.final_position);
    tr.logical_walk.push_back(tr.final_position);
    // Some lengths sit exactly on the shortest distance.
    tr.travel.nav = rng.uniform() < 0.2 ? tr.task.shortest_distance : rng.uniform(0.0, 40.0);
    tr.travel.explore = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 30.0);
    tr.travel.total = tr.travel.nav + tr.travel.explore;
    b.traces.push_back(std::move(tr));
  }
  return b;
}

struct OracleRow {
  bool success;
  bool oracle_success;
  double ne;
  double spl;
};

inline std::vector<OracleRow> oracle_metrics(const RandomBatch& b, double radius, bool all_scope) {
  std::vector<std::vector<std::vector<double>>> dist;
  for (const auto& env : b.worlds) dist.push_back(all_pairs(env));
  std::vector<OracleRow> out;
  for (const EpisodeTrace& tr : b.traces) {
    const auto& d = dist[static_cast<std::size_t>(tr.world_index)];
    const auto goal = static_cast<std::size_t>(tr.task.goal_id);
    OracleRow r{};
    r.ne = d[static_cast<std::size_t>(tr.final_position)][goal];
    r.success = r.ne < radius;
    r.oracle_success = r.success;
    for (int v : all_scope ? tr.logical_walk : tr.nav_route) {
      if (d[static_cast<std::size_t>(v)][goal] < radius) r.oracle_success = true;
    }
    const double shortest = d[static_cast<std::size_t>(tr.task.start_id)][goal];
    const double tl = tr.travel.nav + tr.travel.explore;
    r.spl = r.success ? shortest / (tl > shortest ? tl : shortest) : 0.0;
    out.push_back(r);
  }
  return out;
}

// Largest disagreement between compute_metrics and the oracle, per episode
// and in the aggregates; flag mismatches count as 1.
inline double metric_mismatch(const RandomBatch& b, OracleScope scope) {
  const MetricsReport rep = compute_metrics(b.traces, b.worlds, 3.0, scope);
  const std::vector<OracleRow> ref = oracle_metrics(b, 3.0, scope == OracleScope::all);
  double worst = 0.0;
  double sr = 0.0, orc = 0.0, ne = 0.0, spl = 0.0, tl = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const EpisodeMetrics& m = rep.rows[i];
    if (m.success != ref[i].success || m.oracle_success != ref[i].oracle_success) worst = 1.0;
    worst = std::max({worst, std::abs(m.ne - ref[i].ne), std::abs(m.spl - ref[i].spl),
                      std::abs(m.tl - (b.traces[i].travel.nav + b.traces[i].travel.explore))});
    sr += ref[i].success;
    orc += ref[i].oracle_success;
    ne += ref[i].ne;
    spl += ref[i].spl;
    tl += b.traces[i].travel.nav + b.traces[i].travel.explore;
  }
  const double n = static_cast<double>(ref.size());
  worst = std::max({worst, std::abs(rep.sr - sr / n), std::abs(rep.oracle - orc / n),
                    std::abs(rep.ne - ne / n), std::abs(rep.spl - spl / n), std::abs(rep.tl - tl / n)});
  return worst;
}

}  // namespace anav::test
