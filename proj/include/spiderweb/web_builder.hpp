#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spiderweb/error.hpp"
#include "spiderweb/graph.hpp"
#include "spiderweb/state.hpp"

namespace spiderweb {

/// Planar orb web: `radial_count` spokes crossed by `spiral_count` concentric
/// polygonal rings, fixed at a circular rim. Ring j sits at hub_radius + j * spiral_spacing.
struct WebSpec {
  int radial_count = 16;
  int spiral_count = 12;
  double hub_radius = 0.03;
  double spiral_spacing = 0.03;
  double anchor_radius = 0.80;
  double radial_stiffness = 1500.0;   // EA, N
  double spiral_stiffness = 1400.0;   // EA, N
  double thread_linear_density = 0.03;
  double pretension = 65.0;           // tension of every anchor-adjacent radial segment, N
  double spiral_tension_ratio = 0.2;  // spiral tension as a fraction of `pretension`
  double edge_damping = 0.5;
  int subdivision = 1;                // sub-edges per thread segment

  friend bool operator==(const WebSpec&, const WebSpec&) = default;
};

/// Tension in the spiral threads at the flat build geometry.
inline double spiral_pretension(const WebSpec& s) { return s.pretension * s.spiral_tension_ratio; }

/// Tension of radial segment `j` (0 = hub to ring 1, spiral_count = ring S to anchor).
/// Each ring node balances the inward pull of its two spiral chords, so the radial
/// tension drops by 2 T_s sin(pi/N) per ring moving toward the hub.
inline double radial_segment_tension(const WebSpec& s, int j) {
  const double kink = 2.0 * spiral_pretension(s) * std::sin(std::numbers::pi / s.radial_count);
  return s.pretension - static_cast<double>(s.spiral_count - j) * kink;
}

inline void validate(const WebSpec& s) {
  auto check = [](bool ok, const char* what) {
    require(ok, ErrorCode::invalid_spec, std::string("web spec violates: ") + what);
  };
  check(s.radial_count >= 3, "radial_count >= 3");
  check(s.spiral_count >= 1, "spiral_count >= 1");
  check(s.hub_radius > 0.0, "hub_radius > 0");
  check(s.spiral_spacing > 0.0, "spiral_spacing > 0");
  check(s.hub_radius + s.spiral_count * s.spiral_spacing < s.anchor_radius,
        "hub_radius + spiral_count * spiral_spacing < anchor_radius");
  check(s.radial_stiffness > 0.0 && s.spiral_stiffness > 0.0, "axial stiffness > 0");
  check(s.thread_linear_density > 0.0, "thread_linear_density > 0 (free nodes need mass)");
  check(s.edge_damping >= 0.0, "edge_damping >= 0");
  check(s.pretension >= 0.0, "pretension >= 0");
  check(s.spiral_tension_ratio >= 0.0, "spiral_tension_ratio >= 0");
  check(s.subdivision >= 1, "subdivision >= 1");
  check(radial_segment_tension(s, 0) >= 0.0,
        "innermost radial tension >= 0 (spiral_tension_ratio too large for pretension)");
}

struct PreySpec {
  double mass = 0.23;
  int ring_index = 11;
  int sector_index = 5;  // sector s lies between radials s and s+1 (mod radial_count)
  double fraction = 0.5;

  friend bool operator==(const PreySpec&, const PreySpec&) = default;
};

struct PreyAttachment {
  NodeId node = 0;
  PreySpec spec;
  bool split = true;  // false when the prey landed on an existing sub-node
  friend bool operator==(const PreyAttachment&, const PreyAttachment&) = default;
};

struct WebGraph {
  WebSpec spec;
  Graph graph;
  NodeId hub = 0;
  std::vector<NodeId> intersections;           // radial-major: [radial * spiral_count + (ring - 1)]
  std::vector<NodeId> anchors;                 // per radial
  std::vector<EdgeId> anchor_edges;            // per radial, anchor-adjacent radial segment
  std::vector<std::vector<EdgeId>> spiral_edges;  // [(ring - 1) * radial_count + sector], ordered
  std::vector<PreyAttachment> prey;

  NodeId node_at(int radial, int ring) const {
    require(radial >= 0 && radial < spec.radial_count && ring >= 1 && ring <= spec.spiral_count,
            ErrorCode::placement, "intersection (radial " + std::to_string(radial) + ", ring " +
                                      std::to_string(ring) + ") is outside the web");
    return intersections[static_cast<std::size_t>(radial * spec.spiral_count + ring - 1)];
  }

  std::vector<EdgeId>& spiral_chain(int ring, int sector) {
    return spiral_edges[static_cast<std::size_t>((ring - 1) * spec.radial_count + sector)];
  }
  const std::vector<EdgeId>& spiral_chain(int ring, int sector) const {
    return spiral_edges[static_cast<std::size_t>((ring - 1) * spec.radial_count + sector)];
  }

  double radial_azimuth(int radial) const {
    return 2.0 * std::numbers::pi * radial / spec.radial_count;
  }

  friend bool operator==(const WebGraph&, const WebGraph&) = default;
};

/// Number of nodes build_web produces for `spec`.
inline std::size_t expected_node_count(const WebSpec& s) {
  const std::size_t n = static_cast<std::size_t>(s.radial_count);
  const std::size_t rings = static_cast<std::size_t>(s.spiral_count);
  const std::size_t k = static_cast<std::size_t>(s.subdivision);
  return n * rings + 1 + n + (k - 1) * (n * (rings + 1) + n * rings);
}

inline std::size_t expected_edge_count(const WebSpec& s) {
  const std::size_t n = static_cast<std::size_t>(s.radial_count);
  const std::size_t rings = static_cast<std::size_t>(s.spiral_count);
  return static_cast<std::size_t>(s.subdivision) * (n * (rings + 1) + n * rings);
}

namespace detail {

// Adds a straight thread from a to b split into `k` sub-segments, all at `tension`.
inline std::vector<EdgeId> add_thread(Graph& g, NodeId a, NodeId b, int k, double tension,
                                      double stiffness, double damping, double density,
                                      EdgeKind kind) {
  std::vector<EdgeId> ids;
  const Vec3 pa = g.nodes[a].position;
  const Vec3 pb = g.nodes[b].position;
  NodeId prev = a;
  for (int i = 1; i <= k; ++i) {
    NodeId next = b;
    if (i < k) next = g.add_node({pa + (pb - pa) * (static_cast<double>(i) / k), 0.0, false});
    const double len = norm(g.nodes[next].position - g.nodes[prev].position);
    ThreadSegment e{prev, next, rest_length_for_tension(len, tension, stiffness), stiffness,
                    damping * k, density, kind};
    ids.push_back(g.add_edge(e));
    prev = next;
  }
  return ids;
}

inline void lump_edge_mass(Graph& g, const ThreadSegment& e, double sign = 1.0) {
  g.nodes[e.a].mass += sign * 0.5 * e.mass();
  g.nodes[e.b].mass += sign * 0.5 * e.mass();
}

// Largest in-plane force imbalance at a free node of the flat web, relative to pretension.
inline double max_axial_residual(const Graph& g) {
  std::vector<Vec3> f(g.nodes.size());
  for (const auto& e : g.edges) {
    const Vec3 d = g.nodes[e.b].position - g.nodes[e.a].position;
    const double len = norm(d);
    const Vec3 fe = d * (axial_tension(e, len) / len);
    f[e.a] += fe;
    f[e.b] -= fe;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (!g.nodes[i].anchored) worst = std::max(worst, norm(f[i]));
  return worst;
}

}  // namespace detail

inline WebGraph build_web(const WebSpec& spec) {
  validate(spec);
  WebGraph web;
  web.spec = spec;
  Graph& g = web.graph;
  const int n = spec.radial_count;
  const int rings = spec.spiral_count;
  const int k = spec.subdivision;

  web.hub = g.add_node({Vec3{}, 0.0, false});
  web.intersections.resize(static_cast<std::size_t>(n * rings));
  for (int i = 0; i < n; ++i) {
    const double az = web.radial_azimuth(i);
    const Vec3 dir{std::cos(az), std::sin(az), 0.0};
    for (int j = 1; j <= rings; ++j) {
      const double r = spec.hub_radius + j * spec.spiral_spacing;
      web.intersections[static_cast<std::size_t>(i * rings + j - 1)] =
          g.add_node({dir * r, 0.0, false});
    }
    web.anchors.push_back(g.add_node({dir * spec.anchor_radius, 0.0, true}));
  }

  const double rho = spec.thread_linear_density;
  for (int i = 0; i < n; ++i) {
    NodeId prev = web.hub;
    for (int j = 1; j <= rings + 1; ++j) {
      const NodeId next = j <= rings ? web.node_at(i, j) : web.anchors[static_cast<std::size_t>(i)];
      auto ids = detail::add_thread(g, prev, next, k, radial_segment_tension(spec, j - 1),
                                    spec.radial_stiffness, spec.edge_damping, rho,
                                    EdgeKind::radial);
      if (j == rings + 1) web.anchor_edges.push_back(ids.back());
      prev = next;
    }
  }

  web.spiral_edges.resize(static_cast<std::size_t>(n * rings));
  const double ts = spiral_pretension(spec);
  for (int j = 1; j <= rings; ++j) {
    for (int s = 0; s < n; ++s) {
      web.spiral_chain(j, s) =
          detail::add_thread(g, web.node_at(s, j), web.node_at((s + 1) % n, j), k, ts,
                             spec.spiral_stiffness, spec.edge_damping, rho, EdgeKind::spiral);
    }
  }

  for (const auto& e : g.edges) detail::lump_edge_mass(g, e);

  const double residual = detail::max_axial_residual(g);
  require(residual <= 1e-9 * std::max(spec.pretension, 1.0), ErrorCode::invalid_spec,
          "flat web is not in equilibrium (residual " + std::to_string(residual) + " N)");
  return web;
}

/// Splits the spiral segment of (ring, sector) at `fraction` and hangs the prey mass there.
inline WebGraph attach_prey(WebGraph web, const PreySpec& prey) {
  const auto& s = web.spec;
  require(prey.mass >= 0.001, ErrorCode::placement, "prey mass must be at least 1 g");
  require(prey.fraction > 0.0 && prey.fraction < 1.0, ErrorCode::placement,
          "prey fraction must lie in (0, 1)");
  require(prey.ring_index >= 1 && prey.ring_index <= s.spiral_count, ErrorCode::placement,
          "prey ring " + std::to_string(prey.ring_index) + " outside 1.." +
              std::to_string(s.spiral_count));
  require(prey.sector_index >= 0 && prey.sector_index < s.radial_count, ErrorCode::placement,
          "prey sector " + std::to_string(prey.sector_index) + " outside 0.." +
              std::to_string(s.radial_count - 1));

  Graph& g = web.graph;
  auto& chain = web.spiral_chain(prey.ring_index, prey.sector_index);
  const double along = prey.fraction * static_cast<double>(chain.size());
  const std::size_t sub = std::min(chain.size() - 1, static_cast<std::size_t>(along));
  const double f = along - static_cast<double>(sub);

  if (f < 1e-12) {
    // Lands exactly on an interior sub-node of a subdivided thread.
    const NodeId at = g.edges[chain[sub]].a;
    g.nodes[at].mass += prey.mass;
    web.prey.push_back({at, prey, false});
    return web;
  }

  const EdgeId eid = chain[sub];
  const ThreadSegment e = g.edges[eid];
  const Vec3 pa = g.nodes[e.a].position;
  const Vec3 pb = g.nodes[e.b].position;
  const NodeId p = g.add_node({pa + (pb - pa) * f, prey.mass, false});

  ThreadSegment first = e;
  first.b = p;
  first.rest_length = e.rest_length * f;
  first.damping = e.damping / f;
  ThreadSegment second = e;
  second.a = p;
  second.rest_length = e.rest_length - first.rest_length;
  second.damping = e.damping / (1.0 - f);

  detail::lump_edge_mass(g, e, -1.0);
  g.edges[eid] = first;
  const EdgeId second_id = g.add_edge(second);
  detail::lump_edge_mass(g, first);
  detail::lump_edge_mass(g, second);

  chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(sub) + 1, second_id);
  web.prey.push_back({p, prey, true});
  return web;
}

/// Inverse of attach_prey: merges the two spiral segments meeting at the prey node.
inline WebGraph detach_prey(WebGraph web, NodeId prey_node) {
  auto it = std::find_if(web.prey.begin(), web.prey.end(),
                         [&](const PreyAttachment& a) { return a.node == prey_node; });
  require(it != web.prey.end(), ErrorCode::placement, "node is not a prey attachment");
  Graph& g = web.graph;

  if (!it->split) {
    g.nodes[prey_node].mass -= it->spec.mass;
    web.prey.erase(it);
    return web;
  }

  EdgeId first_id = g.edges.size();
  EdgeId second_id = g.edges.size();
  for (EdgeId i = 0; i < g.edges.size(); ++i) {
    if (g.edges[i].b == prey_node) first_id = i;
    if (g.edges[i].a == prey_node) second_id = i;
  }
  require(first_id < g.edges.size() && second_id < g.edges.size(), ErrorCode::placement,
          "prey node is not splitting a spiral segment");
  const ThreadSegment first = g.edges[first_id];
  const ThreadSegment second = g.edges[second_id];
  ThreadSegment merged = first;
  merged.b = second.b;
  merged.rest_length = first.rest_length + second.rest_length;
  merged.damping = (first.damping > 0.0 && second.damping > 0.0)
                       ? 1.0 / (1.0 / first.damping + 1.0 / second.damping)
                       : 0.0;
  detail::lump_edge_mass(g, first, -1.0);
  detail::lump_edge_mass(g, second, -1.0);
  g.edges[first_id] = merged;
  detail::lump_edge_mass(g, merged);
  g.nodes[prey_node].mass = 0.0;

  // Erase the second edge and the prey node, shifting later ids down.
  g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(second_id));
  g.nodes.erase(g.nodes.begin() + static_cast<std::ptrdiff_t>(prey_node));
  auto shift_node = [&](NodeId& id) {
    if (id > prey_node) --id;
  };
  auto shift_edge = [&](EdgeId& id) {
    if (id > second_id) --id;
  };
  for (auto& e : g.edges) {
    shift_node(e.a);
    shift_node(e.b);
  }
  for (auto& chain : web.spiral_edges) {
    chain.erase(std::remove(chain.begin(), chain.end(), second_id), chain.end());
    for (auto& id : chain) shift_edge(id);
  }
  for (auto& id : web.anchor_edges) shift_edge(id);
  for (auto& id : web.intersections) shift_node(id);
  for (auto& id : web.anchors) shift_node(id);
  shift_node(web.hub);
  web.prey.erase(it);
  for (auto& a : web.prey) shift_node(a.node);
  return web;
}

/// Static axial tension of each radial's anchor-adjacent segment (negative = compression).
inline std::vector<double> radial_tensions(const WebGraph& web, std::span<const Vec3> positions) {
  std::vector<double> out;
  out.reserve(web.anchor_edges.size());
  for (EdgeId id : web.anchor_edges) {
    const auto& e = web.graph.edges[id];
    out.push_back(axial_tension(e, norm(positions[e.b] - positions[e.a])));
  }
  return out;
}

inline std::vector<double> radial_tensions(const WebGraph& web, const SystemState& state) {
  return radial_tensions(web, std::span<const Vec3>(state.position));
}

/// Sum of thread rest lengths and thread masses, used by the conservation checks.
inline double total_thread_length(const Graph& g) {
  double sum = 0.0;
  for (const auto& e : g.edges)
    if (e.is_thread()) sum += e.rest_length;
  return sum;
}

inline double total_thread_mass(const Graph& g) {
  double sum = 0.0;
  for (const auto& e : g.edges)
    if (e.is_thread()) sum += e.mass();
  return sum;
}

inline nlohmann::json to_json(const WebGraph& web) {
  nlohmann::json j = to_json(web.graph);
  j["hub"] = web.hub;
  j["anchors"] = web.anchors;
  j["anchor_edges"] = web.anchor_edges;
  nlohmann::json prey = nlohmann::json::array();
  for (const auto& p : web.prey)
    prey.push_back({{"node", p.node},
                    {"mass", p.spec.mass},
                    {"ring_index", p.spec.ring_index},
                    {"sector_index", p.spec.sector_index},
                    {"fraction", p.spec.fraction}});
  j["prey"] = std::move(prey);
  return j;
}

}  // namespace spiderweb
