#pragma once

// Procedural graph worlds: viewpoints with positions and landmark features,
// navigable edges, panoramic observations, synthetic instructions and the
// shortest-path teacher.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anav::world {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

struct Viewpoint {
  int id = 0;
  Vec3 position;
  std::vector<double> landmark;
};

struct Edge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

/// Thrown when a world description violates an invariant.
class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable navigation graph. Viewpoint ids are 0..n-1 and edge lengths are
/// the Euclidean distances between endpoint positions. Safe to share between
/// threads once built.
class Environment {
 public:
  /// Validates structure: ids contiguous from 0, equal landmark dims (>= 2),
  /// finite values, no self loops or duplicate edges, positive lengths and a
  /// connected graph. Throws WorldError naming the first violation.
  static Environment build(std::vector<Viewpoint> viewpoints,
                           const std::vector<std::pair<int, int>>& edges);

  int size() const { return static_cast<int>(viewpoints_.size()); }
  int landmark_dim() const { return landmark_dim_; }
  int view_dim() const { return landmark_dim_ + 4; }
  bool contains(int id) const { return id >= 0 && id < size(); }

  const Viewpoint& viewpoint(int id) const;
  const std::vector<Viewpoint>& viewpoints() const { return viewpoints_; }
  /// Neighbor ids in ascending order.
  const std::vector<int>& neighbors(int id) const;
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(int a, int b) const;
  double edge_length(int a, int b) const;
  int max_degree() const;
  int min_degree() const;

  /// Geodesic (shortest-path) distance under edge lengths.
  double geodesic(int from, int to) const;

 private:
  Environment() = default;
  void require(int id) const;

  int landmark_dim_ = 0;
  std::vector<Viewpoint> viewpoints_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<double>> adjacency_length_;
  std::vector<double> geodesic_;  // n x n
};

/// Checks the generator contract on top of Environment::build's structural
/// checks: degrees in [2, k_max] and edge lengths in [min_edge, max_edge].
void validate_generator_contract(const Environment& env, int k_max, double min_edge = 1.0,
                                 double max_edge = 3.0);

struct WorldConfig {
  int n_viewpoints = 30;
  int landmark_dim = 16;
  int k_max = 6;
  /// Fraction of viewpoints whose landmark is a near-copy of a sibling's
  /// (two neighbors of a common viewpoint that look alike).
  double ambiguity = 0.0;
  double duplicate_noise = 0.05;
  double landmark_scale = 1.0;
  /// Probability of adding an edge between two nodes within max_edge of each other.
  double extra_edge_prob = 0.5;
  bool planar = false;
  double elevation_jitter = 0.3;
  double min_edge = 1.0;
  double max_edge = 3.0;
};

/// Deterministic given (config, seed). Throws std::invalid_argument for
/// configs that cannot produce a valid world (n < 4, k_max < 2, landmark_dim < 2).
Environment generate_world(const WorldConfig& config, std::uint64_t seed);

struct ViewFeature {
  int neighbor_id = 0;
  /// [landmark..., sin(heading), cos(heading), sin(elevation), cos(elevation)]
  std::vector<double> embedding;
};

struct PanoramicObservation {
  int source_id = 0;
  std::vector<ViewFeature> candidates;  // ascending neighbor_id
  int embedding_dim = 0;

  int size() const { return static_cast<int>(candidates.size()); }
  /// STOP is the index one past the last candidate.
  int stop_index() const { return size(); }
  std::vector<double> stop_embedding() const {
    return std::vector<double>(static_cast<std::size_t>(embedding_dim), 0.0);
  }
  int index_of(int neighbor_id) const;
};

/// Panorama at `at` with orientations measured relative to `heading` (radians,
/// counter-clockwise from +x).
PanoramicObservation observe(const Environment& env, int at, double heading);

/// Heading of the move from `from` to `to` in the horizontal plane.
double heading_between(const Environment& env, int from, int to);

struct ShortestPath {
  std::vector<int> path;
  double distance = 0.0;
};

/// Geodesic shortest path; ties resolve to the lexicographically smallest id
/// sequence. `distance` is the sum of edge lengths along `path`.
ShortestPath shortest_path(const Environment& env, int from, int to);

/// STOP (== observation size) when current == goal, otherwise the candidate
/// index of the next viewpoint on shortest_path(current, goal).
int teacher_action(const Environment& env, int current, int goal);

struct InstructionTokens {
  std::vector<std::vector<double>> tokens;
  int size() const { return static_cast<int>(tokens.size()); }
};

struct InstructionNoise {
  double sigma = 0.0;
  /// Probability of replacing the first token by an unrelated random landmark.
  double first_token_corruption = 0.0;
};

/// One token per waypoint after the start: landmark + N(0, sigma^2).
InstructionTokens synth_instruction(const Environment& env, const std::vector<int>& path,
                                    const InstructionNoise& noise, std::uint64_t seed);

struct TaskConfig {
  int min_hops = 3;
  int max_hops = 7;
  InstructionNoise noise;
};

struct Task {
  int start_id = 0;
  int goal_id = 0;
  double start_heading = 0.0;
  std::vector<int> teacher_path;
  double shortest_distance = 0.0;
  InstructionTokens instruction;
};

/// Throws WorldError when no start/goal pair satisfies the hop bounds.
Task sample_task(const Environment& env, const TaskConfig& config, std::uint64_t seed);

// Environment file: {"viewpoints":[{"id","pos":[x,y,z],"landmark":[...]}],"edges":[[a,b],...]}
std::string environment_to_json(const Environment& env);
/// Parses and validates; with `k_max` > 0 the generator contract is also enforced.
Environment environment_from_json(const std::string& text, int k_max = 0);
void save_environment(const Environment& env, const std::string& path);
Environment load_environment(const std::string& path, int k_max = 0);

}  // namespace anav::world
