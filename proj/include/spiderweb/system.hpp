#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "spiderweb/dynamics.hpp"
#include "spiderweb/error.hpp"
#include "spiderweb/spider_model.hpp"
#include "spiderweb/web_builder.hpp"

namespace spiderweb {

/// Web, robot and prey merged into one mechanical system. Web node ids are preserved;
/// robot nodes follow them, each foot is welded onto (merged into) a web node and the
/// body is tied under the hub by an elastic tie.
struct AssembledSystem {
  MechanicalSystem mech;
  WebGraph web;
  SpiderSpec spider;
  NodeId body = 0;
  std::array<NodeId, 8> feet{};
  std::array<NodeId, 8> sensors{};
};

/// Flexion angles that bend a planar leg chain from the body to `target` = (outward, up)
/// while minimizing the stiffness-weighted departure from `rest`.
inline std::array<double, 4> solve_leg_posture(const std::array<double, 4>& lengths,
                                               const std::array<double, 4>& rest,
                                               const std::array<double, 4>& stiffness,
                                               const std::array<double, 2>& target) {
  const double reach = lengths[0] + lengths[1] + lengths[2] + lengths[3];
  const double dist = std::hypot(target[0], target[1]);
  require(dist < 0.999 * reach, ErrorCode::unreachable_foot,
          "foot at distance " + std::to_string(dist) + " m is beyond leg reach " +
              std::to_string(reach) + " m");
  std::array<double, 4> q = rest;
  for (int iter = 0; iter < 200; ++iter) {
    const auto pts = planar_chain(lengths, q);
    const double ex = target[0] - pts[3][0];
    const double ez = target[1] - pts[3][1];
    if (std::hypot(ex, ez) < 1e-13) return q;
    // Jacobian of the end point: d(end)/dq_j = sum_{i >= j} L_i (cos h_i, -sin h_i).
    std::array<std::array<double, 2>, 4> jac{};
    double heading = 0.0;
    std::array<double, 4> headings{};
    for (std::size_t i = 0; i < 4; ++i) headings[i] = (heading += q[i]);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = j; i < 4; ++i) {
        jac[j][0] += lengths[i] * std::cos(headings[i]);
        jac[j][1] -= lengths[i] * std::sin(headings[i]);
      }
    // Weighted minimum-norm step toward rest that satisfies the linearized constraint.
    std::array<double, 2> rhs{ex, ez};
    for (std::size_t j = 0; j < 4; ++j) {
      rhs[0] += jac[j][0] * (q[j] - rest[j]);
      rhs[1] += jac[j][1] * (q[j] - rest[j]);
    }
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double w = 1.0 / stiffness[j];
      m00 += w * jac[j][0] * jac[j][0];
      m01 += w * jac[j][0] * jac[j][1];
      m11 += w * jac[j][1] * jac[j][1];
    }
    const double det = m00 * m11 - m01 * m01;
    require(std::abs(det) > 1e-300, ErrorCode::unreachable_foot, "leg posture is singular");
    const double l0 = (m11 * rhs[0] - m01 * rhs[1]) / det;
    const double l1 = (-m01 * rhs[0] + m00 * rhs[1]) / det;
    std::array<double, 4> next{};
    for (std::size_t j = 0; j < 4; ++j)
      next[j] = rest[j] + (jac[j][0] * l0 + jac[j][1] * l1) / stiffness[j];
    // Damp large Newton steps.
    double biggest = 0.0;
    for (std::size_t j = 0; j < 4; ++j) biggest = std::max(biggest, std::abs(next[j] - q[j]));
    const double scale = biggest > 0.3 ? 0.3 / biggest : 1.0;
    for (std::size_t j = 0; j < 4; ++j) q[j] += scale * (next[j] - q[j]);
  }
  const auto pts = planar_chain(lengths, q);
  require(std::hypot(target[0] - pts[3][0], target[1] - pts[3][1]) < 1e-9,
          ErrorCode::unreachable_foot, "leg posture solve did not converge");
  return q;
}

/// Radial closest to an azimuth.
inline int nearest_radial(const WebGraph& web, double azimuth) {
  const int n = web.spec.radial_count;
  const double turns = azimuth / (2.0 * std::numbers::pi) * n;
  return static_cast<int>(((std::lround(turns) % n) + n) % n);
}

/// Ties the body `body_depth` below the hub and welds each foot to the web intersection
/// at (radial nearest the leg's mount azimuth, leg.foot_ring).
inline AssembledSystem assemble_system(const WebGraph& web, const SpiderSpec& spec,
                                       double body_depth, bool threads_tension_only = true) {
  require(body_depth > 0.0, ErrorCode::invalid_spec, "body_depth must be positive");
  const SpiderGraph robot = build_spider(spec);
  AssembledSystem out;
  out.web = web;
  out.spider = spec;
  MechanicalSystem& m = out.mech;
  m.graph = web.graph;
  m.cable_series_stiffness = spec.cable_series_stiffness;
  m.threads_tension_only = threads_tension_only;

  // Robot node id -> system node id.
  std::vector<NodeId> remap(robot.graph.nodes.size());
  std::array<NodeId, 8> foot_robot_ids{};
  for (int li = 0; li < 8; ++li) {
    const auto& leg = spec.legs[static_cast<std::size_t>(li)];
    require(leg.foot_ring >= 1 && leg.foot_ring <= web.spec.spiral_count, ErrorCode::placement,
            "leg " + std::to_string(li + 1) + " foot ring " + std::to_string(leg.foot_ring) +
                " is outside the web");
    const int radial = nearest_radial(web, robot.legs[static_cast<std::size_t>(li)].azimuth);
    const NodeId foot = web.node_at(radial, leg.foot_ring);
    for (int other = 0; other < li; ++other)
      require(out.feet[static_cast<std::size_t>(other)] != foot, ErrorCode::placement,
              "legs " + std::to_string(other + 1) + " and " + std::to_string(li + 1) +
                  " share a foot node");
    out.feet[static_cast<std::size_t>(li)] = foot;
    foot_robot_ids[static_cast<std::size_t>(li)] = robot.legs[static_cast<std::size_t>(li)].nodes[3];
  }

  for (NodeId i = 0; i < robot.graph.nodes.size(); ++i) {
    const auto* it = std::find(foot_robot_ids.begin(), foot_robot_ids.end(), i);
    if (it != foot_robot_ids.end()) {
      const NodeId foot = out.feet[static_cast<std::size_t>(it - foot_robot_ids.begin())];
      remap[i] = foot;
      m.graph.nodes[foot].mass += robot.graph.nodes[i].mass;
    } else {
      remap[i] = m.graph.add_node(robot.graph.nodes[i]);
    }
  }
  for (auto e : robot.graph.edges) {
    e.a = remap[e.a];
    e.b = remap[e.b];
    m.graph.add_edge(e);
  }
  out.body = remap[robot.body];
  const Vec3 body_pos{0.0, 0.0, -body_depth};
  m.graph.nodes[out.body].position = body_pos;
  m.graph.add_edge({web.hub, out.body, body_depth, spec.hub_tie_stiffness * body_depth,
                    spec.hub_tie_damping, 0.0, EdgeKind::body});

  for (int li = 0; li < 8; ++li) {
    const auto& leg_spec = spec.legs[static_cast<std::size_t>(li)];
    const auto& chain = robot.legs[static_cast<std::size_t>(li)];
    const Vec3 foot_pos = m.graph.nodes[out.feet[static_cast<std::size_t>(li)]].position;
    const Vec3 rel = foot_pos - body_pos;
    const double radial_dist = std::hypot(rel.x, rel.y);
    const Vec3 u{rel.x / radial_dist, rel.y / radial_dist, 0.0};
    const Vec3 n = cross(kinematics::kUp, u);

    std::array<double, 4> rest{};
    std::array<double, 4> stiff{};
    for (std::size_t k = 0; k < 4; ++k) {
      rest[k] = leg_spec.joints[k].rest_angle;
      stiff[k] = leg_spec.joints[k].pitch_stiffness;
    }
    const auto q = solve_leg_posture(leg_spec.segment_lengths, rest, stiff, {radial_dist, rel.z});
    const auto pts = planar_chain(leg_spec.segment_lengths, q);
    for (std::size_t k = 0; k < 3; ++k)
      m.graph.nodes[remap[chain.nodes[k]]].position = detail::leg_point(body_pos, u, pts[k]);

    LegActuation act;
    for (std::size_t k = 0; k < 4; ++k) {
      AngularJoint j = robot.joints[chain.joints[k]];
      if (j.proximal) j.proximal = remap[*j.proximal];
      j.center = remap[j.center];
      j.distal = remap[j.distal];
      j.plane_u = u;
      j.plane_n = n;
      act.joints[k] = m.joints.size();
      m.joints.push_back(j);
    }
    act.sensor = remap[chain.sensor()];
    out.sensors[static_cast<std::size_t>(li)] = act.sensor;
    m.legs.push_back(act);
  }
  return out;
}

inline AssembledSystem assemble_system(const WebGraph& web, const SpiderSpec& spec) {
  return assemble_system(web, spec, spec.body_depth);
}

/// Web-only mechanical system (no robot), for static checks on the bare web.
inline MechanicalSystem web_system(const WebGraph& web, bool threads_tension_only = true) {
  MechanicalSystem m;
  m.graph = web.graph;
  m.threads_tension_only = threads_tension_only;
  return m;
}

inline nlohmann::json to_json(const AssembledSystem& sys) {
  nlohmann::json j = to_json(sys.mech.graph);
  j["body"] = sys.body;
  j["feet"] = sys.feet;
  j["sensors"] = sys.sensors;
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& jt : sys.mech.joints) {
    joints.push_back({{"leg", jt.leg + 1},
                      {"joint", jt.index + 1},
                      {"proximal", jt.proximal ? nlohmann::json(*jt.proximal) : nlohmann::json()},
                      {"center", jt.center},
                      {"distal", jt.distal},
                      {"rest_angle", jt.rest_angle},
                      {"pitch_stiffness", jt.pitch_stiffness},
                      {"lateral_stiffness", jt.lateral_stiffness},
                      {"rotational_damping", jt.rotational_damping},
                      {"tendon_moment_arm", jt.tendon_moment_arm}});
  }
  j["joints"] = std::move(joints);
  j["cable_series_stiffness"] = sys.mech.cable_series_stiffness;
  return j;
}

}  // namespace spiderweb
