#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "spiderweb/dynamics.hpp"
#include "spiderweb/system.hpp"
#include "spiderweb/web_builder.hpp"

using namespace spiderweb;

namespace {

WebSpec small_web() {
  WebSpec s;
  s.radial_count = 8;
  s.spiral_count = 4;
  s.hub_radius = 0.05;
  s.spiral_spacing = 0.08;
  s.anchor_radius = 0.6;
  s.pretension = 20.0;
  return s;
}

}  // namespace

TEST(WebBuilder, CountsMatchTopology) {
  for (int k : {1, 2, 3}) {
    WebSpec s = small_web();
    s.subdivision = k;
    const WebGraph w = build_web(s);
    // hub + N*S intersections + N anchors + interior sub-nodes
    const std::size_t n = 8, rings = 4, kk = static_cast<std::size_t>(k);
    const std::size_t threads = n * (rings + 1) + n * rings;
    EXPECT_EQ(w.graph.nodes.size(), 1 + n * rings + n + (kk - 1) * threads);
    EXPECT_EQ(w.graph.edges.size(), kk * threads);
    EXPECT_EQ(w.anchors.size(), n);
  }
}

TEST(WebBuilder, AnchorsSitOnTheRim) {
  const WebGraph w = build_web(small_web());
  for (std::size_t r = 0; r < w.anchors.size(); ++r) {
    const auto& p = w.graph.nodes[w.anchors[r]];
    EXPECT_TRUE(p.anchored);
    EXPECT_NEAR(std::hypot(p.position.x, p.position.y), 0.6, 1e-12);
    EXPECT_NEAR(std::atan2(p.position.y, p.position.x),
                std::remainder(2.0 * std::numbers::pi * static_cast<double>(r) / 8.0, 2.0 * std::numbers::pi),
                1e-12);
  }
}

TEST(WebBuilder, BuiltTensionsFollowRingBalance) {
  const WebSpec s = small_web();
  const WebGraph w = build_web(s);
  const double ts = s.pretension * s.spiral_tension_ratio;
  const double kink = 2.0 * ts * std::sin(std::numbers::pi / 8.0);
  for (const auto& e : w.graph.edges) {
    const double t = axial_tension(e, w.graph.edge_length(e));
    if (e.kind == EdgeKind::spiral) {
      EXPECT_NEAR(t, ts, 1e-9);
    } else {
      // ring k sits at hub + k spacing; segment j starts on ring j, j = 0 at the hub centre
      const double r_in = std::min(std::hypot(w.graph.nodes[e.a].position.x, w.graph.nodes[e.a].position.y),
                                   std::hypot(w.graph.nodes[e.b].position.x, w.graph.nodes[e.b].position.y));
      const int j = r_in < 1e-9 ? 0 : static_cast<int>(std::lround((r_in - s.hub_radius) / s.spiral_spacing));
      EXPECT_NEAR(t, s.pretension - (4 - j) * kink, 1e-9) << "segment " << j;
    }
  }
}

TEST(WebBuilder, FlatWebIsInPlaneEquilibrium) {
  const WebGraph w = build_web(small_web());
  const auto f = net_forces(SystemState::at_rest(w.graph), web_system(w), {.gravity = 0.0});
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LT(norm(f[i]), 1e-9) << "node " << i;
}

TEST(WebBuilder, ThreadMassIsLumped) {
  const WebSpec s = small_web();
  const WebGraph w = build_web(s);
  double rest = 0.0;
  for (const auto& e : w.graph.edges) rest += e.rest_length;
  double lumped = 0.0;
  for (const auto& n : w.graph.nodes) lumped += n.mass;
  EXPECT_NEAR(lumped, rest * s.thread_linear_density, 1e-12);
}

TEST(WebBuilder, InvalidSpecsAreRejected) {
  WebSpec s = small_web();
  s.anchor_radius = 0.3;
  EXPECT_THROW(build_web(s), Error);
  s = small_web();
  s.radial_count = 2;
  EXPECT_THROW(build_web(s), Error);
  s = small_web();
  s.spiral_tension_ratio = 50.0;
  try {
    build_web(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_spec);
  }
}

TEST(WebBuilder, PreySplitsSpiralAtMidpoint) {
  const WebGraph w = build_web(small_web());
  PreySpec p;
  p.ring_index = 3;
  p.sector_index = 2;
  p.mass = 0.1;
  const WebGraph wp = attach_prey(w, p);
  ASSERT_EQ(wp.prey.size(), 1u);
  const NodeId id = wp.prey[0].node;
  EXPECT_EQ(wp.graph.nodes.size(), w.graph.nodes.size() + 1);
  EXPECT_EQ(wp.graph.edges.size(), w.graph.edges.size() + 1);
  const Vec3 a = w.graph.nodes[w.node_at(2, 3)].position;
  const Vec3 b = w.graph.nodes[w.node_at(3, 3)].position;
  EXPECT_LT(norm(wp.graph.nodes[id].position - (a + b) * 0.5), 1e-12);
  // prey mass plus its share of the spiral thread
  const double seg = norm(b - a) / (1.0 + small_web().pretension * 0.2 / small_web().spiral_stiffness);
  EXPECT_NEAR(wp.graph.nodes[id].mass, 0.1 + seg * small_web().thread_linear_density * 0.5, 1e-12);
  double total_before = 0.0, total_after = 0.0;
  for (const auto& n : w.graph.nodes) total_before += n.mass;
  for (const auto& n : wp.graph.nodes) total_after += n.mass;
  EXPECT_NEAR(total_after - total_before, 0.1, 1e-12);
}

TEST(WebBuilder, DetachUndoesAttach) {
  for (int k : {1, 2}) {
    WebSpec s = small_web();
    s.subdivision = k;
    const WebGraph w = build_web(s);
    for (int ring = 1; ring <= 4; ++ring) {
      PreySpec p;
      p.ring_index = ring;
      p.sector_index = (ring * 3) % 8;
      const WebGraph back = detach_prey(attach_prey(w, p), attach_prey(w, p).prey[0].node);
      ASSERT_EQ(back.graph.nodes.size(), w.graph.nodes.size());
      ASSERT_EQ(back.graph.edges.size(), w.graph.edges.size());
      for (std::size_t i = 0; i < w.graph.nodes.size(); ++i) {
        EXPECT_EQ(back.graph.nodes[i].position, w.graph.nodes[i].position);
        EXPECT_NEAR(back.graph.nodes[i].mass, w.graph.nodes[i].mass, 1e-15);
      }
      for (std::size_t i = 0; i < w.graph.edges.size(); ++i) {
        EXPECT_EQ(back.graph.edges[i].a, w.graph.edges[i].a);
        EXPECT_EQ(back.graph.edges[i].b, w.graph.edges[i].b);
        EXPECT_NEAR(back.graph.edges[i].rest_length, w.graph.edges[i].rest_length, 1e-15);
      }
      EXPECT_EQ(back.spiral_edges, w.spiral_edges);
    }
  }
}

TEST(WebBuilder, PreyOutsideWebIsPlacementError) {
  const WebGraph w = build_web(small_web());
  PreySpec p;
  p.ring_index = 9;
  try {
    attach_prey(w, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::placement);
    EXPECT_EQ(exit_code(e.code()), 2);
  }
}

// A centred load on a rotationally symmetric web: every hub-adjacent radial carries
// the same tension T and N T sin(theta) = W at the hub.
TEST(WebBuilder, HubForceBalanceUnderSymmetricLoad) {
  WebGraph w = build_web(small_web());
  w.graph.nodes[w.hub].mass += 0.5;
  const MechanicalSystem sys = web_system(w);
  SimConfig cfg;
  cfg.settle_max_time = 60.0;
  const SystemState s = settle(sys, cfg, 1e-7);

  const double load = w.graph.nodes[w.hub].mass * cfg.gravity;
  std::vector<double> t;
  double vertical = 0.0;
  for (const auto& e : w.graph.edges) {
    if (e.a != w.hub && e.b != w.hub) continue;
    const NodeId other = e.a == w.hub ? e.b : e.a;
    const Vec3 d = s.position[other] - s.position[w.hub];
    const double len = norm(d);
    t.push_back(axial_tension(e, len));
    vertical += t.back() * d.z / len;
  }
  ASSERT_EQ(t.size(), 8u);
  for (double ti : t) EXPECT_NEAR(ti, t[0], 1e-6 * t[0]);
  EXPECT_NEAR(vertical, load, 1e-3 * load);
  EXPECT_LT(s.position[w.hub].z, 0.0);
}

TEST(WebBuilder, AnchorsNeverMove) {
  const WebGraph w = build_web(small_web());
  const MechanicalSystem sys = web_system(w);
  SimConfig cfg;
  SystemState s = SystemState::at_rest(w.graph);
  for (auto& v : s.velocity) v = Vec3{0.3, -0.2, 0.5};
  Stepper st(sys, cfg);
  for (int k = 0; k < 2000; ++k) st.step(s);
  for (NodeId a : w.anchors) EXPECT_EQ(s.position[a], w.graph.nodes[a].position);
}

TEST(WebBuilder, SlackThreadsCarryNoCompression) {
  ThreadSegment e{0, 1, 1.0, 100.0, 0.0, 0.0, EdgeKind::spiral};
  MechanicalSystem sys;
  sys.graph.add_node({Vec3{0, 0, 0}, 1.0, true});
  sys.graph.add_node({Vec3{0.9, 0, 0}, 1.0, false});
  sys.graph.add_edge(e);
  const SystemState s = SystemState::at_rest(sys.graph);
  EXPECT_EQ(norm(net_forces(s, sys, {.gravity = 0.0})[1]), 0.0);
  sys.threads_tension_only = false;
  // Hooke: compression of 0.1 pushes the free end outward with EA * 0.1 / L0 = 10 N
  EXPECT_NEAR(net_forces(s, sys, {.gravity = 0.0})[1].x, 10.0, 1e-12);
}
