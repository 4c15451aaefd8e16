#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <queue>

#include "../support.hpp"
#include "anav/world.hpp"

using namespace anav;
using namespace anav::world;

namespace {

bool connected(const Environment& env) {
  std::vector<bool> seen(static_cast<std::size_t>(env.size()), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const Edge& e : env.edges()) {
      int v = -1;
      if (e.a == u) v = e.b;
      if (e.b == u) v = e.a;
      if (v >= 0 && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == env.size();
}

// Minimum over every simple path, by exhaustive depth-first enumeration.
void enumerate(const Environment& env, int at, int to, double acc, std::vector<bool>& on_path,
               double& best) {
  if (at == to) {
    best = std::min(best, acc);
    return;
  }
  for (int nb : env.neighbors(at)) {
    if (on_path[static_cast<std::size_t>(nb)]) continue;
    on_path[static_cast<std::size_t>(nb)] = true;
    enumerate(env, nb, to, acc + env.edge_length(at, nb), on_path, best);
    on_path[static_cast<std::size_t>(nb)] = false;
  }
}

double brute_force_distance(const Environment& env, int from, int to) {
  std::vector<bool> on_path(static_cast<std::size_t>(env.size()), false);
  on_path[static_cast<std::size_t>(from)] = true;
  double best = std::numeric_limits<double>::infinity();
  enumerate(env, from, to, 0.0, on_path, best);
  return best;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("generate_world is deterministic and connected for n=4") {
  WorldConfig cfg;
  cfg.n_viewpoints = 4;
  const Environment a = generate_world(cfg, 7);
  const Environment b = generate_world(cfg, 7);
  CHECK(a.size() == 4);
  CHECK(connected(a));
  CHECK(environment_to_json(a) == environment_to_json(b));
}

TEST_CASE("generate_world rejects degenerate sizes") {
  WorldConfig cfg;
  cfg.n_viewpoints = 1;
  CHECK_THROWS_AS(generate_world(cfg, 1), std::invalid_argument);
  cfg.n_viewpoints = 10;
  cfg.k_max = 1;
  CHECK_THROWS_AS(generate_world(cfg, 1), std::invalid_argument);
}

TEST_CASE("ambiguous worlds contain near-duplicate landmarks") {
  WorldConfig cfg;
  cfg.n_viewpoints = 40;
  cfg.ambiguity = 0.3;
  const Environment env = generate_world(cfg, 1);
  double best = -1.0;
  for (int i = 0; i < env.size(); ++i) {
    for (int j = i + 1; j < env.size(); ++j) {
      best = std::max(best, cosine(env.viewpoint(i).landmark, env.viewpoint(j).landmark));
    }
  }
  CHECK(best > 0.95);
}

TEST_CASE("generated worlds satisfy the structural invariants") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    WorldConfig cfg;
    cfg.n_viewpoints = 8 + static_cast<int>(seed % 30);
    cfg.planar = seed % 3 == 0;
    const Environment env = generate_world(cfg, seed);
    CAPTURE(seed);
    CHECK(connected(env));
    for (int v = 0; v < env.size(); ++v) {
      const auto& nb = env.neighbors(v);
      CHECK(static_cast<int>(nb.size()) >= 2);
      CHECK(static_cast<int>(nb.size()) <= cfg.k_max);
      CHECK(std::is_sorted(nb.begin(), nb.end()));
      for (int u : nb) CHECK(env.has_edge(u, v));
    }
    for (const Edge& e : env.edges()) {
      CHECK(e.length >= 1.0);
      CHECK(e.length <= 3.0);
      CHECK(e.length == distance(env.viewpoint(e.a).position, env.viewpoint(e.b).position));
    }
    CHECK_NOTHROW(validate_generator_contract(env, cfg.k_max));
  }
}

TEST_CASE("Environment::build rejects malformed graphs") {
  const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(test::make_env(pos, {{0, 1}}), WorldError);            // disconnected
  CHECK_THROWS_AS(test::make_env(pos, {{0, 1}, {1, 1}, {1, 2}}), WorldError);  // self loop
  CHECK_THROWS_AS(test::make_env(pos, {{0, 1}, {1, 0}, {1, 2}}), WorldError);  // duplicate
  CHECK_THROWS_AS(test::make_env({{0, 0, 0}, {0, 0, 0}}, {{0, 1}}), WorldError);  // zero length
}

TEST_CASE("shortest_path on small graphs") {
  const Environment env = test::line3(1.5, 2.0);
  SUBCASE("identity") {
    const ShortestPath p = shortest_path(env, 1, 1);
    CHECK(p.path == std::vector<int>{1});
    CHECK(p.distance == 0.0);
  }
  SUBCASE("unique path on a line") {
    const ShortestPath p = shortest_path(env, 0, 2);
    CHECK(p.path == std::vector<int>{0, 1, 2});
    CHECK(p.distance == doctest::Approx(3.5).epsilon(1e-12));
  }
}

TEST_CASE("shortest_path matches exhaustive enumeration on random worlds") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    WorldConfig cfg;
    cfg.n_viewpoints = 20;
    cfg.k_max = 4;
    cfg.extra_edge_prob = 0.3;
    const Environment env = generate_world(cfg, seed);
    for (int from = 0; from < env.size(); from += 3) {
      for (int to = 0; to < env.size(); to += 4) {
        const ShortestPath p = shortest_path(env, from, to);
        const double oracle = brute_force_distance(env, from, to);
        CHECK(p.distance == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(env.geodesic(from, to) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(p.distance == doctest::Approx(shortest_path(env, to, from).distance).epsilon(1e-12));
        double sum = 0.0;
        for (std::size_t i = 1; i < p.path.size(); ++i) {
          REQUIRE(env.has_edge(p.path[i - 1], p.path[i]));
          sum += env.edge_length(p.path[i - 1], p.path[i]);
        }
        CHECK(sum == doctest::Approx(p.distance).epsilon(1e-12));
        CHECK(p.distance == shortest_path(env, to, from).distance);
      }
    }
  }
}

TEST_CASE("teacher_action") {
  const Environment line = test::line3(1.5, 2.0);
  CHECK(teacher_action(line, 2, 2) == observe(line, 2, 0.0).stop_index());
  CHECK(teacher_action(line, 0, 2) == observe(line, 0, 0.0).index_of(1));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    WorldConfig cfg;
    cfg.n_viewpoints = 25;
    const Environment env = generate_world(cfg, seed);
    for (int t = 0; t < 20; ++t) {
      const Task task = sample_task(env, TaskConfig{}, seed * 100 + static_cast<std::uint64_t>(t));
      int at = task.start_id;
      int steps = 0;
      while (true) {
        const PanoramicObservation obs = observe(env, at, 0.0);
        const int a = teacher_action(env, at, task.goal_id);
        if (a == obs.stop_index()) break;
        const int next = obs.candidates[static_cast<std::size_t>(a)].neighbor_id;
        CHECK(env.geodesic(next, task.goal_id) < env.geodesic(at, task.goal_id));
        at = next;
        ++steps;
        REQUIRE(steps <= env.size());
      }
      CHECK(at == task.goal_id);
      CHECK(steps == static_cast<int>(task.teacher_path.size()) - 1);
    }
  }
}

TEST_CASE("observe") {
  const Environment env = test::six_node(3);
  SUBCASE("three neighbors give three candidates and a zero STOP") {
    const PanoramicObservation obs = observe(env, 0, 0.3);
    CHECK(obs.size() == 3);
    CHECK(obs.stop_index() == 3);
    CHECK(obs.embedding_dim == 7);
    for (double x : obs.stop_embedding()) CHECK(x == 0.0);
    CHECK(obs.candidates[0].neighbor_id == 1);
    CHECK(obs.candidates[2].neighbor_id == 3);
  }
  SUBCASE("orientation descriptor is periodic and normalized") {
    const PanoramicObservation a = observe(env, 0, 0.7);
    const PanoramicObservation b = observe(env, 0, 0.7 + 2 * std::numbers::pi);
    for (int k = 0; k < a.size(); ++k) {
      const auto& ea = a.candidates[static_cast<std::size_t>(k)].embedding;
      const auto& eb = b.candidates[static_cast<std::size_t>(k)].embedding;
      REQUIRE(ea.size() == 7u);
      for (std::size_t i = 0; i < ea.size(); ++i) CHECK(ea[i] == doctest::Approx(eb[i]).epsilon(1e-12));
      CHECK(ea[3] * ea[3] + ea[4] * ea[4] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(ea[5] * ea[5] + ea[6] * ea[6] == doctest::Approx(1.0).epsilon(1e-9));
      for (std::size_t i = 3; i < 7; ++i) CHECK(std::fabs(ea[i]) <= 1.0);
    }
  }
  SUBCASE("neighbor straight ahead at equal elevation") {
    const PanoramicObservation obs = observe(env, 0, 0.0);
    const auto& e = obs.candidates[static_cast<std::size_t>(obs.index_of(2))].embedding;
    CHECK(e[3] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e[4] == 1.0);
    CHECK(e[5] == 0.0);
    CHECK(e[6] == 1.0);
    for (int i = 0; i < 3; ++i) CHECK(e[static_cast<std::size_t>(i)] == env.viewpoint(2).landmark[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("sample_task") {
  WorldConfig wc;
  wc.n_viewpoints = 30;
  const Environment env = generate_world(wc, 3);
  TaskConfig tc;
  tc.noise.sigma = 0.1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Task a = sample_task(env, tc, seed);
    const Task b = sample_task(env, tc, seed);
    CHECK(a.start_id == b.start_id);
    CHECK(a.goal_id == b.goal_id);
    CHECK(a.start_heading == b.start_heading);
    CHECK(a.instruction.tokens == b.instruction.tokens);
    const int hops = static_cast<int>(a.teacher_path.size()) - 1;
    CHECK(hops >= tc.min_hops);
    CHECK(hops <= tc.max_hops);
    CHECK(a.instruction.size() >= 3);
    CHECK(a.instruction.size() <= 8);
    CHECK(a.shortest_distance == doctest::Approx(env.geodesic(a.start_id, a.goal_id)).epsilon(1e-12));
    CHECK(a.teacher_path == shortest_path(env, a.start_id, a.goal_id).path);
  }
  TaskConfig impossible;
  impossible.min_hops = 40;
  impossible.max_hops = 50;
  CHECK_THROWS_AS(sample_task(env, impossible, 1), WorldError);
}

TEST_CASE("synth_instruction noise") {
  WorldConfig wc;
  wc.n_viewpoints = 12;
  const Environment env = generate_world(wc, 5);
  const std::vector<int> path = shortest_path(env, 0, env.size() - 1).path;
  SUBCASE("sigma 0 copies landmarks bitwise") {
    const InstructionTokens t = synth_instruction(env, path, {}, 9);
    REQUIRE(t.size() == static_cast<int>(path.size()) - 1);
    for (int i = 0; i < t.size(); ++i) {
      CHECK(t.tokens[static_cast<std::size_t>(i)] == env.viewpoint(path[static_cast<std::size_t>(i) + 1]).landmark);
    }
  }
  SUBCASE("sigma 0.1 is deterministic") {
    const InstructionNoise n{0.1, 0.0};
    CHECK(synth_instruction(env, path, n, 4).tokens == synth_instruction(env, path, n, 4).tokens);
    CHECK(synth_instruction(env, path, n, 4).tokens != synth_instruction(env, path, n, 5).tokens);
  }
  SUBCASE("mean perturbation norm is sigma * sqrt(d)") {
    const double sigma = 0.2;
    const InstructionNoise n{sigma, 0.0};
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; count < 10000; ++seed) {
      const InstructionTokens t = synth_instruction(env, path, n, seed);
      for (int i = 0; i < t.size() && count < 10000; ++i, ++count) {
        const auto& lm = env.viewpoint(path[static_cast<std::size_t>(i) + 1]).landmark;
        double sq = 0.0;
        for (std::size_t d = 0; d < lm.size(); ++d) {
          const double diff = t.tokens[static_cast<std::size_t>(i)][d] - lm[d];
          sq += diff * diff;
        }
        total += std::sqrt(sq);
      }
    }
    const double expected = sigma * std::sqrt(static_cast<double>(env.landmark_dim()));
    CHECK(total / count == doctest::Approx(expected).epsilon(0.10));
  }
}

TEST_CASE("environment JSON round trip is bit exact") {
  WorldConfig wc;
  wc.n_viewpoints = 15;
  wc.ambiguity = 0.2;
  const Environment env = generate_world(wc, 21);
  const std::string text = environment_to_json(env);
  const Environment back = environment_from_json(text, wc.k_max);
  REQUIRE(back.size() == env.size());
  for (int i = 0; i < env.size(); ++i) {
    const Viewpoint& a = env.viewpoint(i);
    const Viewpoint& b = back.viewpoint(i);
    CHECK(a.position.x == b.position.x);
    CHECK(a.position.y == b.position.y);
    CHECK(a.position.z == b.position.z);
    CHECK(a.landmark == b.landmark);
  }
  CHECK(environment_to_json(back) == text);

  const auto path = (std::filesystem::temp_directory_path() / "anav_world_roundtrip.json").string();
  save_environment(env, path);
  CHECK(environment_to_json(load_environment(path)) == text);
  std::filesystem::remove(path);
}

TEST_CASE("environment loader diagnostics name the field") {
  auto message = [](const std::string& text) {
    try {
      environment_from_json(text);
    } catch (const WorldError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string ok_vps =
      R"([{"id":0,"pos":[0,0,0],"landmark":[1,2]},{"id":1,"pos":[1,0,0],"landmark":[3,4]}])";
  CHECK(message(R"({"viewpoints":)" + ok_vps + R"(,"edges":[[0,1]]})") == "no error");
  CHECK(message(R"({"viewpoints":[{"id":0,"pos":[0,0],"landmark":[1,2]}],"edges":[]})")
            .find("viewpoints[0].pos") != std::string::npos);
  CHECK(message(R"({"viewpoints":)" + ok_vps + R"(,"edges":[[0,"x"]]})").find("edges[0][1]") !=
        std::string::npos);
  CHECK(message(R"({"viewpoints":)" + ok_vps + R"(})").find("edges") != std::string::npos);
  CHECK(message("{\"viewpoints\": [\n  1,\n").find("line") != std::string::npos);
}
