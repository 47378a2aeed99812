#pragma once

#include <vector>

#include "spiderweb/graph.hpp"
#include "spiderweb/vec3.hpp"

namespace spiderweb {

struct SystemState {
  double time = 0.0;
  std::vector<Vec3> position;
  std::vector<Vec3> velocity;

  static SystemState at_rest(const Graph& g) {
    SystemState s;
    s.position.reserve(g.nodes.size());
    for (const auto& n : g.nodes) s.position.push_back(n.position);
    s.velocity.assign(g.nodes.size(), Vec3{});
    return s;
  }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

}  // namespace spiderweb
