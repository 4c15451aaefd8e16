#include "anav/memory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace anav {

MemoryGraph::MemoryGraph(const world::Environment& env, int start, double heading,
                         Strategy strategy)
    : env_(&env), strategy_(strategy), physical_(start), logical_(start), heading_(heading) {
  record_visit(start, world::observe(env, start, heading));
  walk_.push_back(start);
  logical_walk_.push_back(start);
}

std::vector<int> MemoryGraph::known_neighbors(int id) const {
  std::vector<int> out;
  for (int w : env_->neighbors(id)) {
    if (edges_.contains(std::minmax(id, w))) out.push_back(w);
  }
  return out;
}

void MemoryGraph::record_visit(int id, const world::PanoramicObservation& obs) {
  if (known(id)) return;
  observations_.emplace(id, obs);
  nodes_.insert(id);
  for (int w : env_->neighbors(id)) {
    if (known(w)) edges_.insert(std::minmax(id, w));
  }
}

const world::PanoramicObservation& MemoryGraph::observation(int id) const {
  auto it = observations_.find(id);
  if (it == observations_.end()) {
    throw std::out_of_range("memory: viewpoint " + std::to_string(id) + " not visited");
  }
  return it->second;
}

std::vector<int> MemoryGraph::memory_path(int from, int to) const {
  if (!known(from) || !known(to)) throw std::out_of_range("memory_path: unknown viewpoint");
  if (from == to) return {from};
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::map<int, double> dist;
  for (int n : nodes_) dist[n] = inf;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[to] = 0.0;
  queue.emplace(0.0, to);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (int w : known_neighbors(u)) {
      const double nd = d + env_->edge_length(u, w);
      if (nd < dist[w]) {
        dist[w] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  if (!std::isfinite(dist[from])) throw std::logic_error("memory_path: disconnected memory");
  // Greedy walk towards `to`, smallest id first among tight neighbors.
  std::vector<int> path{from};
  int u = from;
  while (u != to) {
    const double du = dist[u];
    const double tol = 1e-9 * std::max(1.0, du);
    int next = -1;
    for (int w : known_neighbors(u)) {
      if (std::abs(env_->edge_length(u, w) + dist[w] - du) <= tol) {
        next = w;
        break;
      }
    }
    path.push_back(next);
    u = next;
  }
  return path;
}

double MemoryGraph::walk(const std::vector<int>& path, Phase phase) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double m = env_->edge_length(path[i - 1], path[i]);
    log_.events.push_back({path[i - 1], path[i], m, phase});
    (phase == Phase::nav ? log_.nav : log_.explore) += m;
    log_.total = log_.nav + log_.explore;
    walk_.push_back(path[i]);
    total += m;
  }
  if (!path.empty()) physical_ = path.back();
  return total;
}

double MemoryGraph::resolve_move(int target, Phase phase) {
  if (!env_->contains(target) || !env_->has_edge(logical_, target)) {
    throw std::invalid_argument("resolve_move: " + std::to_string(target) +
                                " is not adjacent to logical position " + std::to_string(logical_));
  }
  const int from = logical_;
  heading_ = world::heading_between(*env_, from, target);
  double meters = 0.0;
  if (strategy_ == Strategy::eager) {
    meters = walk(memory_path(physical_, from), phase);
    meters += walk({from, target}, phase);
  } else if (!known(target)) {
    std::vector<int> path = memory_path(physical_, from);
    path.push_back(target);
    meters = walk(path, phase);
  }
  if (!known(target)) record_visit(target, world::observe(*env_, target, heading_));
  logical_ = target;
  logical_walk_.push_back(target);
  return meters;
}

double MemoryGraph::return_to(int origin, Phase phase) {
  if (!known(origin)) throw std::invalid_argument("return_to: origin not in memory");
  double meters = 0.0;
  if (strategy_ == Strategy::eager) meters = walk(memory_path(physical_, origin), phase);
  if (logical_ != origin) {
    logical_ = origin;
    logical_walk_.push_back(origin);
  }
  return meters;
}

const TravelLog& MemoryGraph::finalize() {
  walk(memory_path(physical_, logical_), Phase::nav);
  return log_;
}

}  // namespace anav
