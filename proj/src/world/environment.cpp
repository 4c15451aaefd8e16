#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <string>

#include "anav/world.hpp"

namespace anav::world {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> dijkstra(const std::vector<std::vector<int>>& adj,
                             const std::vector<std::vector<double>>& len, int source) {
  std::vector<double> dist(adj.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(source)] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    const auto& nbrs = adj[static_cast<std::size_t>(u)];
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const int w = nbrs[i];
      const double nd = d + len[static_cast<std::size_t>(u)][i];
      if (nd < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  return dist;
}

// Sum in ascending order so a path and its reverse give the same bits.
double canonical_length(std::vector<double> lengths) {
  std::sort(lengths.begin(), lengths.end());
  double total = 0.0;
  for (double l : lengths) total += l;
  return total;
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Environment Environment::build(std::vector<Viewpoint> viewpoints,
                               const std::vector<std::pair<int, int>>& edges) {
  if (viewpoints.empty()) throw WorldError("viewpoints: empty");
  std::sort(viewpoints.begin(), viewpoints.end(),
            [](const Viewpoint& a, const Viewpoint& b) { return a.id < b.id; });
  const int n = static_cast<int>(viewpoints.size());
  const int dim = static_cast<int>(viewpoints.front().landmark.size());
  if (dim < 2) throw WorldError("viewpoints[0].landmark: dimension must be >= 2");
  for (int i = 0; i < n; ++i) {
    const Viewpoint& v = viewpoints[static_cast<std::size_t>(i)];
    const std::string where = "viewpoint id " + std::to_string(v.id);
    if (v.id != i) throw WorldError(where + ": ids must be unique and contiguous from 0");
    if (static_cast<int>(v.landmark.size()) != dim) throw WorldError(where + ".landmark: dimension mismatch");
    for (double x : v.landmark)
      if (!std::isfinite(x)) throw WorldError(where + ".landmark: non-finite entry");
    if (!std::isfinite(v.position.x) || !std::isfinite(v.position.y) || !std::isfinite(v.position.z)) {
      throw WorldError(where + ".pos: non-finite coordinate");
    }
  }

  Environment env;
  env.landmark_dim_ = dim;
  env.adjacency_.assign(static_cast<std::size_t>(n), {});
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    const std::string where = "edges[" + std::to_string(e) + "]";
    if (a < 0 || a >= n || b < 0 || b >= n) throw WorldError(where + ": unknown viewpoint id");
    if (a == b) throw WorldError(where + ": self loop");
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second) throw WorldError(where + ": duplicate edge");
    const double len = distance(viewpoints[static_cast<std::size_t>(a)].position,
                                viewpoints[static_cast<std::size_t>(b)].position);
    if (!(len > 0.0)) throw WorldError(where + ": zero length (coincident positions)");
    env.edges_.push_back(Edge{key.first, key.second, len});
    env.adjacency_[static_cast<std::size_t>(a)].push_back(b);
    env.adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  std::sort(env.edges_.begin(), env.edges_.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  env.adjacency_length_.assign(static_cast<std::size_t>(n), {});
  for (int u = 0; u < n; ++u) {
    auto& nbrs = env.adjacency_[static_cast<std::size_t>(u)];
    std::sort(nbrs.begin(), nbrs.end());
    for (int w : nbrs) {
      env.adjacency_length_[static_cast<std::size_t>(u)].push_back(
          distance(viewpoints[static_cast<std::size_t>(u)].position,
                   viewpoints[static_cast<std::size_t>(w)].position));
    }
  }
  env.viewpoints_ = std::move(viewpoints);

  // Connectivity by traversal.
  std::vector<char> reached(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  reached[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : env.adjacency_[static_cast<std::size_t>(u)]) {
      if (!reached[static_cast<std::size_t>(w)]) {
        reached[static_cast<std::size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  if (count != n) throw WorldError("edges: graph is not connected");

  // All-pairs geodesics. Dijkstra fixes the distances; each entry is then
  // re-summed along the tie-broken path so that geodesic(), shortest_path()
  // and the reversed direction agree bit for bit.
  std::vector<std::vector<double>> raw(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    raw[static_cast<std::size_t>(s)] = dijkstra(env.adjacency_, env.adjacency_length_, s);
  }
  env.geodesic_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const auto& to_b = raw[static_cast<std::size_t>(b)];
      std::vector<double> lengths;
      int u = a;
      while (u != b) {
        const auto& nbrs = env.adjacency_[static_cast<std::size_t>(u)];
        const auto& lens = env.adjacency_length_[static_cast<std::size_t>(u)];
        const double du = to_b[static_cast<std::size_t>(u)];
        const double tol = 1e-9 * std::max(1.0, du);
        int next = -1;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
          if (std::abs(lens[i] + to_b[static_cast<std::size_t>(nbrs[i])] - du) <= tol) {
            next = static_cast<int>(i);
            break;
          }
        }
        lengths.push_back(lens[static_cast<std::size_t>(next)]);
        u = nbrs[static_cast<std::size_t>(next)];
      }
      env.geodesic_[static_cast<std::size_t>(a * n + b)] = canonical_length(std::move(lengths));
    }
  }
  return env;
}

void Environment::require(int id) const {
  if (!contains(id)) throw std::out_of_range("unknown viewpoint id " + std::to_string(id));
}

const Viewpoint& Environment::viewpoint(int id) const {
  require(id);
  return viewpoints_[static_cast<std::size_t>(id)];
}

const std::vector<int>& Environment::neighbors(int id) const {
  require(id);
  return adjacency_[static_cast<std::size_t>(id)];
}

bool Environment::has_edge(int a, int b) const {
  require(a);
  require(b);
  const auto& nbrs = adjacency_[static_cast<std::size_t>(a)];
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

double Environment::edge_length(int a, int b) const {
  require(a);
  require(b);
  const auto& nbrs = adjacency_[static_cast<std::size_t>(a)];
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b);
  if (it == nbrs.end() || *it != b) {
    throw std::out_of_range("no edge between " + std::to_string(a) + " and " + std::to_string(b));
  }
  return adjacency_length_[static_cast<std::size_t>(a)][static_cast<std::size_t>(it - nbrs.begin())];
}

int Environment::max_degree() const {
  std::size_t d = 0;
  for (const auto& nbrs : adjacency_) d = std::max(d, nbrs.size());
  return static_cast<int>(d);
}

int Environment::min_degree() const {
  std::size_t d = std::numeric_limits<std::size_t>::max();
  for (const auto& nbrs : adjacency_) d = std::min(d, nbrs.size());
  return static_cast<int>(d);
}

double Environment::geodesic(int from, int to) const {
  require(from);
  require(to);
  return geodesic_[static_cast<std::size_t>(from * size() + to)];
}

void validate_generator_contract(const Environment& env, int k_max, double min_edge,
                                 double max_edge) {
  for (int u = 0; u < env.size(); ++u) {
    const int deg = static_cast<int>(env.neighbors(u).size());
    if (deg < 2 || deg > k_max) {
      throw WorldError("viewpoint id " + std::to_string(u) + ": degree " + std::to_string(deg) +
                       " outside [2, " + std::to_string(k_max) + "]");
    }
  }
  for (const Edge& e : env.edges()) {
    if (e.length < min_edge || e.length > max_edge) {
      throw WorldError("edge [" + std::to_string(e.a) + "," + std::to_string(e.b) + "]: length " +
                       std::to_string(e.length) + " outside bounds");
    }
  }
}

int PanoramicObservation::index_of(int neighbor_id) const {
  for (int i = 0; i < size(); ++i) {
    if (candidates[static_cast<std::size_t>(i)].neighbor_id == neighbor_id) return i;
  }
  return -1;
}

double heading_between(const Environment& env, int from, int to) {
  const Vec3& p = env.viewpoint(from).position;
  const Vec3& q = env.viewpoint(to).position;
  return std::atan2(q.y - p.y, q.x - p.x);
}

PanoramicObservation observe(const Environment& env, int at, double heading) {
  PanoramicObservation obs;
  obs.source_id = at;
  obs.embedding_dim = env.view_dim();
  const Vec3& p = env.viewpoint(at).position;
  for (int nb : env.neighbors(at)) {
    const Viewpoint& q = env.viewpoint(nb);
    const double dx = q.position.x - p.x;
    const double dy = q.position.y - p.y;
    const double dz = q.position.z - p.z;
    const double rel = std::atan2(dy, dx) - heading;
    const double elev = std::atan2(dz, std::hypot(dx, dy));
    ViewFeature f;
    f.neighbor_id = nb;
    f.embedding = q.landmark;
    f.embedding.push_back(std::sin(rel));
    f.embedding.push_back(std::cos(rel));
    f.embedding.push_back(std::sin(elev));
    f.embedding.push_back(std::cos(elev));
    obs.candidates.push_back(std::move(f));
  }
  return obs;
}

ShortestPath shortest_path(const Environment& env, int from, int to) {
  if (!env.contains(from) || !env.contains(to)) {
    throw std::out_of_range("shortest_path: unknown viewpoint id");
  }
  ShortestPath out;
  out.path.push_back(from);
  std::vector<double> lengths;
  int u = from;
  while (u != to) {
    const double du = env.geodesic(u, to);
    const double tol = 1e-9 * std::max(1.0, du);
    int next = -1;
    for (int w : env.neighbors(u)) {
      if (std::abs(env.edge_length(u, w) + env.geodesic(w, to) - du) <= tol) {
        next = w;
        break;
      }
    }
    lengths.push_back(env.edge_length(u, next));
    out.path.push_back(next);
    u = next;
  }
  out.distance = canonical_length(std::move(lengths));
  return out;
}

int teacher_action(const Environment& env, int current, int goal) {
  const auto& nbrs = env.neighbors(current);
  if (current == goal) return static_cast<int>(nbrs.size());
  const ShortestPath sp = shortest_path(env, current, goal);
  const auto it = std::find(nbrs.begin(), nbrs.end(), sp.path[1]);
  return static_cast<int>(it - nbrs.begin());
}

}  // namespace anav::world
