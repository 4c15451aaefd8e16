#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>

#include "anav/rng.hpp"
#include "anav/world.hpp"

namespace anav::world {

namespace {

struct Layout {
  std::vector<Vec3> positions;
  std::vector<std::pair<int, int>> edges;
};

// Grows a triangulated layout: every new node is placed at edge-length range
// from both endpoints of an existing edge and linked to them, so the graph is
// connected and every node has degree >= 2 from creation on.
std::optional<Layout> grow_layout(const WorldConfig& cfg, Rng& rng) {
  const int n = cfg.n_viewpoints;
  const double lo = cfg.min_edge + 0.15 * (cfg.max_edge - cfg.min_edge);
  const double hi = cfg.max_edge - 0.15 * (cfg.max_edge - cfg.min_edge);
  Layout layout;
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  std::set<std::pair<int, int>> edge_set;

  auto link = [&](int a, int b) {
    edge_set.insert(std::minmax(a, b));
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  };
  auto elevation = [&](double base) {
    return cfg.planar ? 0.0 : base + rng.uniform(-cfg.elevation_jitter, cfg.elevation_jitter) * 0.5;
  };

  layout.positions.push_back({0.0, 0.0, 0.0});
  {
    const double r = rng.uniform(lo, hi);
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    layout.positions.push_back({r * std::cos(th), r * std::sin(th), elevation(0.0)});
    link(0, 1);
  }

  for (int i = 2; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
      std::vector<std::pair<int, int>> open;
      for (const auto& e : edge_set) {
        if (degree[static_cast<std::size_t>(e.first)] < cfg.k_max &&
            degree[static_cast<std::size_t>(e.second)] < cfg.k_max) {
          open.push_back(e);
        }
      }
      if (open.empty()) return std::nullopt;
      const auto [a, b] = open[static_cast<std::size_t>(rng.index(static_cast<int>(open.size())))];
      const Vec3& pa = layout.positions[static_cast<std::size_t>(a)];
      const Vec3& pb = layout.positions[static_cast<std::size_t>(b)];
      const double ra = rng.uniform(lo, hi);
      const double rb = rng.uniform(lo, hi);
      const double dx = pb.x - pa.x;
      const double dy = pb.y - pa.y;
      const double d = std::hypot(dx, dy);
      if (d <= 1e-9 || d > ra + rb || d < std::abs(ra - rb)) continue;
      // Intersection of the two circles in the horizontal plane.
      const double along = (ra * ra - rb * rb + d * d) / (2.0 * d);
      const double h2 = ra * ra - along * along;
      if (h2 <= 0.0) continue;
      const double h = std::sqrt(h2);
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      Vec3 p{pa.x + along * dx / d - side * h * dy / d, pa.y + along * dy / d + side * h * dx / d,
             elevation(0.5 * (pa.z + pb.z))};
      const double la = distance(p, pa);
      const double lb = distance(p, pb);
      if (la < cfg.min_edge || la > cfg.max_edge || lb < cfg.min_edge || lb > cfg.max_edge) continue;
      bool clear = true;
      for (const Vec3& q : layout.positions) {
        if (distance(p, q) < cfg.min_edge) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      layout.positions.push_back(p);
      link(a, i);
      link(b, i);
      placed = true;
    }
    if (!placed) return std::nullopt;
  }

  // Extra edges between nearby pairs, in deterministic pair order.
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (edge_set.contains({a, b})) continue;
      const double len = distance(layout.positions[static_cast<std::size_t>(a)],
                                  layout.positions[static_cast<std::size_t>(b)]);
      const bool eligible = len >= cfg.min_edge && len <= cfg.max_edge &&
                            degree[static_cast<std::size_t>(a)] < cfg.k_max &&
                            degree[static_cast<std::size_t>(b)] < cfg.k_max;
      if (eligible && rng.uniform() < cfg.extra_edge_prob) link(a, b);
    }
  }
  layout.edges.assign(edge_set.begin(), edge_set.end());
  return layout;
}

std::vector<double> random_landmark(int dim, double scale, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (double& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

Environment generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  if (cfg.n_viewpoints < 4) throw std::invalid_argument("generate_world: n_viewpoints must be >= 4");
  if (cfg.k_max < 2) throw std::invalid_argument("generate_world: k_max must be >= 2");
  if (cfg.landmark_dim < 2) throw std::invalid_argument("generate_world: landmark_dim must be >= 2");
  if (cfg.ambiguity < 0.0 || cfg.ambiguity > 1.0) {
    throw std::invalid_argument("generate_world: ambiguity must be in [0, 1]");
  }

  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(Rng::derive(seed, attempt));
    auto layout = grow_layout(cfg, rng);
    if (!layout) continue;

    const int n = cfg.n_viewpoints;
    std::vector<Viewpoint> viewpoints;
    for (int i = 0; i < n; ++i) {
      viewpoints.push_back(Viewpoint{i, layout->positions[static_cast<std::size_t>(i)],
                                     random_landmark(cfg.landmark_dim, cfg.landmark_scale, rng)});
    }

    // "Two doors": a viewpoint b next to hub h copies the landmark of another
    // neighbor a of h, up to small noise.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& [a, b] : layout->edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    const int copies = static_cast<int>(std::floor(cfg.ambiguity * n / 2.0));
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    int made = 0;
    for (int tries = 0; made < copies && tries < 50 * n; ++tries) {
      const int hub = rng.index(n);
      const auto& nb = adj[static_cast<std::size_t>(hub)];
      const int a = nb[static_cast<std::size_t>(rng.index(static_cast<int>(nb.size())))];
      const int b = nb[static_cast<std::size_t>(rng.index(static_cast<int>(nb.size())))];
      if (a == b || used[static_cast<std::size_t>(a)] || used[static_cast<std::size_t>(b)]) continue;
      used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = 1;
      auto& target = viewpoints[static_cast<std::size_t>(b)].landmark;
      const auto& source = viewpoints[static_cast<std::size_t>(a)].landmark;
      for (std::size_t j = 0; j < target.size(); ++j) {
        target[j] = source[j] + cfg.duplicate_noise * cfg.landmark_scale * rng.normal();
      }
      ++made;
    }

    Environment env = Environment::build(std::move(viewpoints), layout->edges);
    validate_generator_contract(env, cfg.k_max, cfg.min_edge, cfg.max_edge);
    return env;
  }
  throw std::invalid_argument("generate_world: could not realise a valid layout for this config");
}

InstructionTokens synth_instruction(const Environment& env, const std::vector<int>& path,
                                    const InstructionNoise& noise, std::uint64_t seed) {
  if (path.empty()) throw std::invalid_argument("synth_instruction: empty path");
  Rng rng(seed);
  InstructionTokens out;
  const std::size_t first = path.size() == 1 ? 0 : 1;
  for (std::size_t i = first; i < path.size(); ++i) {
    std::vector<double> token = env.viewpoint(path[i]).landmark;
    if (noise.sigma > 0.0) {
      for (double& x : token) x += noise.sigma * rng.normal();
    }
    out.tokens.push_back(std::move(token));
  }
  if (noise.first_token_corruption > 0.0 && rng.uniform() < noise.first_token_corruption) {
    // Same scale as the landmarks it replaces.
    double sq = 0.0;
    for (double x : out.tokens.front()) sq += x * x;
    const double scale = std::sqrt(sq / static_cast<double>(out.tokens.front().size()));
    for (double& x : out.tokens.front()) x = scale * rng.normal();
  }
  return out;
}

Task sample_task(const Environment& env, const TaskConfig& config, std::uint64_t seed) {
  if (config.min_hops < 1 || config.max_hops < config.min_hops) {
    throw std::invalid_argument("sample_task: invalid hop bounds");
  }
  Rng rng(seed);
  const int n = env.size();
  std::vector<std::pair<int, int>> pairs;
  std::vector<ShortestPath> paths;
  for (int s = 0; s < n; ++s) {
    for (int g = 0; g < n; ++g) {
      if (s == g) continue;
      ShortestPath sp = shortest_path(env, s, g);
      const int hops = static_cast<int>(sp.path.size()) - 1;
      if (hops >= config.min_hops && hops <= config.max_hops) {
        pairs.emplace_back(s, g);
        paths.push_back(std::move(sp));
      }
    }
  }
  if (pairs.empty()) throw WorldError("sample_task: no start/goal pair within the hop bounds");
  const std::size_t pick = static_cast<std::size_t>(rng.index(static_cast<int>(pairs.size())));
  Task task;
  task.start_id = pairs[pick].first;
  task.goal_id = pairs[pick].second;
  task.start_heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
  task.teacher_path = paths[pick].path;
  task.shortest_distance = paths[pick].distance;
  task.instruction = synth_instruction(env, task.teacher_path, config.noise, rng.next_u64());
  return task;
}

}  // namespace anav::world
