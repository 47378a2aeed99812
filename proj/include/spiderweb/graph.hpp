#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spiderweb/error.hpp"
#include "spiderweb/vec3.hpp"

namespace spiderweb {

using NodeId = std::size_t;
using EdgeId = std::size_t;

enum class EdgeKind { radial, spiral, leg_segment, body, cable };

constexpr std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::radial: return "radial";
    case EdgeKind::spiral: return "spiral";
    case EdgeKind::leg_segment: return "leg_segment";
    case EdgeKind::body: return "body";
    case EdgeKind::cable: return "cable";
  }
  return "radial";
}

struct Node {
  Vec3 position;
  double mass = 0.0;
  bool anchored = false;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Axial spring-damper between two nodes. Tension T = EA (l - L0) / L0.
struct ThreadSegment {
  NodeId a = 0;
  NodeId b = 0;
  double rest_length = 0.0;
  double axial_stiffness = 0.0;  // EA, N
  double damping = 0.0;          // N s/m along the edge
  double linear_density = 0.0;   // kg/m of rest length (lumped into endpoints)
  EdgeKind kind = EdgeKind::radial;

  double mass() const { return linear_density * rest_length; }
  bool is_thread() const { return kind == EdgeKind::radial || kind == EdgeKind::spiral; }

  friend bool operator==(const ThreadSegment&, const ThreadSegment&) = default;
};

/// Tension carried by a segment whose endpoints are `length` apart.
inline double axial_tension(const ThreadSegment& e, double length) {
  return e.axial_stiffness * (length - e.rest_length) / e.rest_length;
}

/// Rest length that makes a segment of geometric length `length` carry `tension`.
inline double rest_length_for_tension(double length, double tension, double axial_stiffness) {
  if (tension == 0.0) return length;
  return length / (1.0 + tension / axial_stiffness);
}

struct Graph {
  std::vector<Node> nodes;
  std::vector<ThreadSegment> edges;

  NodeId add_node(const Node& n) {
    nodes.push_back(n);
    return nodes.size() - 1;
  }

  EdgeId add_edge(const ThreadSegment& e) {
    require(e.a != e.b, ErrorCode::invalid_spec, "edge endpoints must be distinct");
    require(e.a < nodes.size() && e.b < nodes.size(), ErrorCode::invalid_spec,
            "edge endpoint out of range");
    require(e.rest_length > 0.0, ErrorCode::invalid_spec, "edge rest_length must be positive");
    edges.push_back(e);
    return edges.size() - 1;
  }

  double edge_length(const ThreadSegment& e) const {
    return norm(nodes[e.b].position - nodes[e.a].position);
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& n : nodes)
      if (!n.anchored) m += n.mass;
    return m;
  }

  friend bool operator==(const Graph&, const Graph&) = default;
};

inline nlohmann::json to_json(const Graph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    nodes.push_back({{"id", i},
                     {"position", {n.position.x, n.position.y, n.position.z}},
                     {"mass", n.mass},
                     {"anchored", n.anchored}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"endpoints", {e.a, e.b}},
                     {"rest_length", e.rest_length},
                     {"axial_stiffness", e.axial_stiffness},
                     {"damping", e.damping},
                     {"linear_density", e.linear_density},
                     {"kind", std::string(to_string(e.kind))}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace spiderweb
