#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "spiderweb/graph.hpp"
#include "spiderweb/vec3.hpp"

namespace spiderweb {

/// Angular spring at a leg joint. Angles are measured in the leg's sagittal plane
/// spanned by `plane_u` (horizontal, outward along the leg) and +z. The pitch angle is
/// the clockwise turn (seen with u to the right, z up) from the proximal segment to the
/// distal one; for J1 the proximal direction is the body's vertical axis. Flexion is a
/// positive pitch increment. The lateral angle is the out-of-plane turn along `plane_n`.
struct AngularJoint {
  int leg = 0;
  int index = 0;                   // 0 = J1 .. 3 = J4
  std::optional<NodeId> proximal;  // empty for J1
  NodeId center = 0;
  NodeId distal = 0;
  Vec3 plane_u{1.0, 0.0, 0.0};
  Vec3 plane_n{0.0, 1.0, 0.0};
  double rest_angle = 0.0;
  double pitch_stiffness = 0.0;
  double lateral_stiffness = 0.0;
  double rotational_damping = 0.0;
  double tendon_moment_arm = 0.0;

  friend bool operator==(const AngularJoint&, const AngularJoint&) = default;
};

namespace kinematics {

inline constexpr Vec3 kUp{0.0, 0.0, 1.0};

inline double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// In-plane direction of v measured clockwise from +z toward +u.
inline double pitch_of(const Vec3& v, const Vec3& u) { return std::atan2(dot(v, u), v.z); }

inline Vec3 pitch_gradient(const Vec3& v, const Vec3& u) {
  const double a = dot(v, u);
  const double b = v.z;
  const double d = a * a + b * b;
  return (u * b - kUp * a) / d;
}

// Elevation of v out of the sagittal plane toward +n.
inline double lateral_of(const Vec3& v, const Vec3& u, const Vec3& n) {
  const double a = dot(v, u);
  return std::atan2(dot(v, n), std::sqrt(a * a + v.z * v.z));
}

inline Vec3 lateral_gradient(const Vec3& v, const Vec3& u, const Vec3& n) {
  const double a = dot(v, u);
  const double b = v.z;
  const double c = dot(v, n);
  const double s = std::sqrt(a * a + b * b);
  const Vec3 in_plane = (u * a + kUp * b) / s;
  return (n * s - in_plane * c) / (s * s + c * c);
}

struct JointGeometry {
  double pitch = 0.0;
  double lateral = 0.0;
  // d(angle)/d(node position) for proximal, center, distal nodes.
  Vec3 dpitch[3];
  Vec3 dlateral[3];
};

template <typename Positions>
JointGeometry evaluate(const AngularJoint& j, const Positions& x) {
  JointGeometry g;
  const Vec3 d = x[j.distal] - x[j.center];
  const Vec3 gd = pitch_gradient(d, j.plane_u);
  const Vec3 ld = lateral_gradient(d, j.plane_u, j.plane_n);
  g.pitch = pitch_of(d, j.plane_u);
  g.lateral = lateral_of(d, j.plane_u, j.plane_n);
  g.dpitch[2] = gd;
  g.dlateral[2] = ld;
  g.dpitch[1] = -gd;
  g.dlateral[1] = -ld;
  if (j.proximal) {
    const Vec3 p = x[j.center] - x[*j.proximal];
    const Vec3 gp = pitch_gradient(p, j.plane_u);
    const Vec3 lp = lateral_gradient(p, j.plane_u, j.plane_n);
    g.pitch = wrap_angle(g.pitch - pitch_of(p, j.plane_u));
    g.lateral -= lateral_of(p, j.plane_u, j.plane_n);
    g.dpitch[0] = gp;
    g.dlateral[0] = lp;
    g.dpitch[1] -= gp;
    g.dlateral[1] -= lp;
  }
  return g;
}

inline double spring_energy(const AngularJoint& j, const JointGeometry& g) {
  const double dq = g.pitch - j.rest_angle;
  return 0.5 * j.pitch_stiffness * dq * dq + 0.5 * j.lateral_stiffness * g.lateral * g.lateral;
}

}  // namespace kinematics
}  // namespace spiderweb
