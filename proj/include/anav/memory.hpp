#pragma once

// Memory graph of visited viewpoints and late action-taking: the agent moves
// logically over known territory and travels physically only when a move
// reaches a viewpoint it has never seen.

#include <map>
#include <set>
#include <vector>

#include "anav/world.hpp"

namespace anav {

enum class Phase { nav, explore };
enum class Strategy { lazy, eager };

struct MoveEvent {
  int from = 0;
  int to = 0;
  double meters = 0.0;
  Phase phase = Phase::nav;
};

struct TravelLog {
  double total = 0.0;
  double nav = 0.0;
  double explore = 0.0;
  std::vector<MoveEvent> events;
};

class MemoryGraph {
 public:
  /// Starts at `start`, observing it with `heading`.
  MemoryGraph(const world::Environment& env, int start, double heading,
              Strategy strategy = Strategy::lazy);

  Strategy strategy() const { return strategy_; }
  int physical_position() const { return physical_; }
  int logical_position() const { return logical_; }
  bool known(int id) const { return observations_.contains(id); }
  const std::set<int>& known_nodes() const { return nodes_; }
  const std::set<std::pair<int, int>>& known_edges() const { return edges_; }
  std::vector<int> known_neighbors(int id) const;

  /// Stores the observation of `id` (idempotent) and links it to known neighbors.
  void record_visit(int id, const world::PanoramicObservation& obs);
  /// The stored observation; throws std::out_of_range for unknown ids.
  const world::PanoramicObservation& observation(int id) const;

  /// Moves one hop from the logical position to `target` (must be an
  /// environment neighbor). Returns meters traveled physically.
  double resolve_move(int target, Phase phase);
  /// Ends an exploration round: the logical position returns to `origin`.
  /// The eager strategy walks back physically along the memory graph.
  double return_to(int origin, Phase phase = Phase::explore);
  /// Walks physically to the logical position (nav phase) and returns the log.
  const TravelLog& finalize();

  const TravelLog& log() const { return log_; }
  /// Every physically visited viewpoint in order, starting at the start node.
  const std::vector<int>& physical_walk() const { return walk_; }
  /// Every logical position taken, in order.
  const std::vector<int>& logical_walk() const { return logical_walk_; }

  /// Shortest path between known viewpoints inside the memory graph.
  std::vector<int> memory_path(int from, int to) const;

 private:
  double walk(const std::vector<int>& path, Phase phase);

  const world::Environment* env_;
  Strategy strategy_;
  int physical_;
  int logical_;
  double heading_;
  std::map<int, world::PanoramicObservation> observations_;
  std::set<int> nodes_;
  std::set<std::pair<int, int>> edges_;
  TravelLog log_;
  std::vector<int> walk_;
  std::vector<int> logical_walk_;
};

}  // namespace anav
