#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "anav/model.hpp"
#include "anav/rng.hpp"
#include "anav/world.hpp"

namespace anav::test {

inline world::Environment make_env(const std::vector<world::Vec3>& positions,
                                   const std::vector<std::pair<int, int>>& edges, int dim = 2,
                                   std::uint64_t landmark_seed = 11) {
  Rng rng(landmark_seed);
  std::vector<world::Viewpoint> vps;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    world::Viewpoint vp;
    vp.id = static_cast<int>(i);
    vp.position = positions[i];
    for (int d = 0; d < dim; ++d) vp.landmark.push_back(rng.normal());
    vps.push_back(std::move(vp));
  }
  return world::Environment::build(std::move(vps), edges);
}

// a - b - c along x with the given segment lengths.
inline world::Environment line3(double ab, double bc, int dim = 2) {
  return make_env({{0, 0, 0}, {ab, 0, 0}, {ab + bc, 0, 0}}, {{0, 1}, {1, 2}}, dim);
}

// Six viewpoints: a hub (0) with three spokes, two of which continue.
//
//   4 - 1 - 0 - 2 - 5
//           |
//           3
inline world::Environment six_node(int dim = 3) {
  return make_env({{0, 0, 0}, {-2, 0, 0}, {2, 0, 0}, {0, -2, 0.5}, {-4, 0, 0}, {4, 0.5, 0}},
                  {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 5}}, dim);
}

inline Model small_model(int landmark_dim, int hidden, std::uint64_t seed) {
  return Model::create({landmark_dim, hidden}, seed);
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace anav::test
