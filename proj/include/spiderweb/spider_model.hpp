#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "spiderweb/error.hpp"
#include "spiderweb/graph.hpp"
#include "spiderweb/joint_kinematics.hpp"

namespace spiderweb {

enum class LegPair { front = 0, second = 1, third = 2, rear = 3 };
enum class Side { left, right };

constexpr std::string_view to_string(LegPair p) {
  switch (p) {
    case LegPair::front: return "front";
    case LegPair::second: return "second";
    case LegPair::third: return "third";
    case LegPair::rear: return "rear";
  }
  return "front";
}

/// Femur, tibia, metatarsus and tarsus lengths as multiples of the tarsus, per leg pair.
struct SegmentRatioTable {
  std::array<std::array<double, 4>, 4> rows{};

  const std::array<double, 4>& operator[](LegPair p) const {
    return rows[static_cast<std::size_t>(p)];
  }

  /// Measured U. diversus proportions.
  static SegmentRatioTable measured() {
    return {{{{3.1, 2.83, 2.5, 1.0},
              {1.7, 2.36, 1.55, 1.0},
              {1.4, 2.0, 1.32, 1.0},
              {2.4, 2.83, 1.81, 1.0}}}};
  }

  friend bool operator==(const SegmentRatioTable&, const SegmentRatioTable&) = default;
};

inline void validate(const SegmentRatioTable& t) {
  for (const auto& row : t.rows) {
    require(row[3] == 1.0, ErrorCode::invalid_spec, "segment ratio table: tarsus ratio must be 1");
    for (double c : row)
      require(c > 0.0, ErrorCode::invalid_spec, "segment ratio table: ratios must be positive");
  }
}

inline std::array<double, 4> segment_lengths_from_ratios(const SegmentRatioTable& table,
                                                         LegPair pair, double tarsus_base_length) {
  validate(table);
  require(tarsus_base_length > 0.0, ErrorCode::invalid_spec, "tarsus_base_length must be positive");
  std::array<double, 4> out{};
  const auto& row = table[pair];
  for (std::size_t i = 0; i < 4; ++i) out[i] = row[i] * tarsus_base_length;
  return out;
}

// --- joints -----------------------------------------------------------------------------

struct JointSpec {
  double rest_angle = 0.0;  // rad, flexion-positive
  double pitch_stiffness = 1.0;
  double lateral_stiffness = 1.0;
  double rotational_damping = 0.0;
  double tendon_moment_arm = 0.01;

  friend bool operator==(const JointSpec&, const JointSpec&) = default;
};

/// DS-0010 / Syl-182 weight fractions: case 1 = 0/100, case 2 = 50/50, case 3 = 70/30.
enum class MaterialCase { case1 = 1, case2 = 2, case3 = 3 };
enum class CrossSection { regular, thickened };

/// Placeholder effective moduli per blend. More Dragon Skin makes the joint softer.
inline double default_modulus(MaterialCase c) {
  switch (c) {
    case MaterialCase::case1: return 1.8e6;
    case MaterialCase::case2: return 0.9e6;
    case MaterialCase::case3: return 0.5e6;
  }
  return 1.8e6;
}

struct JointMaterialSpec {
  MaterialCase material_case = MaterialCase::case1;
  double effective_modulus = 1.8e6;  // Pa
  CrossSection cross_section = CrossSection::thickened;
  double width = 0.025;   // m, along the lateral axis
  double height = 0.015;  // m, along the bending direction
  double joint_length = 0.006;

  friend bool operator==(const JointMaterialSpec&, const JointMaterialSpec&) = default;
};

inline void validate(const JointMaterialSpec& m) {
  require(m.effective_modulus > 0.0, ErrorCode::invalid_spec, "joint modulus must be positive");
  require(m.width > 0.0 && m.height > 0.0 && m.joint_length > 0.0, ErrorCode::invalid_spec,
          "joint dimensions must be positive");
  if (m.cross_section == CrossSection::thickened)
    require(m.width > m.height, ErrorCode::invalid_spec,
            "thickened joint cross-section needs width > height");
}

struct JointStiffness {
  double pitch = 0.0;
  double lateral = 0.0;
};

/// Slender rectangular beam: k = E I / L, with I_pitch = w h^3 / 12 and I_lateral = h w^3 / 12.
inline JointStiffness joint_stiffness(const JointMaterialSpec& m) {
  validate(m);
  const double w = m.width;
  const double h = m.height;
  const double i_pitch = w * h * h * h / 12.0;
  const double i_lateral = h * w * w * w / 12.0;
  return {m.effective_modulus * i_pitch / m.joint_length,
          m.effective_modulus * i_lateral / m.joint_length};
}

// --- legs and body ----------------------------------------------------------------------

struct LegSpec {
  LegPair pair = LegPair::front;
  Side side = Side::left;
  std::array<double, 4> segment_lengths{};  // femur, tibia, metatarsus, tarsus
  std::array<JointSpec, 4> joints{};        // J1..J4
  double segment_linear_density = 0.19;
  int foot_ring = 5;

  double total_length() const {
    return segment_lengths[0] + segment_lengths[1] + segment_lengths[2] + segment_lengths[3];
  }
  double mass() const { return total_length() * segment_linear_density; }

  friend bool operator==(const LegSpec&, const LegSpec&) = default;
};

/// Legs 1-4 are the left side front to rear, legs 5-8 the right side front to rear.
/// The body's forward axis is +y and its sagittal plane is x = 0.
struct SpiderSpec {
  double body_mass = 0.35;
  std::array<LegSpec, 8> legs{};
  std::array<double, 8> mount_azimuths{};  // rad, measured from +x toward +y
  double tarsus_base_length = 0.05;
  double cable_series_stiffness = 300.0;      // N/m
  double segment_axial_stiffness = 5000.0;    // EA of the leg exoskeleton segments, N
  double segment_damping = 2.0;               // N s/m along each segment
  double hub_tie_stiffness = 150.0;           // N/m, tie holding the body under the hub
  double hub_tie_damping = 1.3;               // N s/m
  double body_depth = 0.10;                   // m, hang depth of the body below the hub

  double total_mass() const {
    double m = body_mass;
    for (const auto& l : legs) m += l.mass();
    return m;
  }

  friend bool operator==(const SpiderSpec&, const SpiderSpec&) = default;
};

constexpr LegPair pair_of_leg(int leg) { return static_cast<LegPair>(leg % 4); }
constexpr Side side_of_leg(int leg) { return leg < 4 ? Side::left : Side::right; }
/// Index of the bilateral partner (leg 1 <-> leg 5, ...), zero-based.
constexpr int mirror_leg(int leg) { return (leg + 4) % 8; }

inline void validate(const SpiderSpec& s) {
  require(s.body_mass > 0.0, ErrorCode::invalid_spec, "body_mass must be positive");
  require(s.tarsus_base_length > 0.0, ErrorCode::invalid_spec, "tarsus_base_length must be positive");
  require(s.cable_series_stiffness >= 0.0, ErrorCode::invalid_spec,
          "cable_series_stiffness must be non-negative");
  require(s.segment_axial_stiffness > 0.0, ErrorCode::invalid_spec,
          "segment_axial_stiffness must be positive");
  require(s.hub_tie_stiffness > 0.0, ErrorCode::invalid_spec, "hub_tie_stiffness must be positive");
  require(s.body_depth > 0.0, ErrorCode::invalid_spec, "body_depth must be positive");
  require(s.hub_tie_damping >= 0.0 && s.segment_damping >= 0.0, ErrorCode::invalid_spec,
          "damping must be non-negative");
  for (int i = 0; i < 8; ++i) {
    const auto& leg = s.legs[static_cast<std::size_t>(i)];
    const std::string name = "leg " + std::to_string(i + 1);
    require(leg.pair == pair_of_leg(i) && leg.side == side_of_leg(i), ErrorCode::invalid_spec,
            name + " is out of bilateral order");
    require(leg.segment_linear_density > 0.0, ErrorCode::invalid_spec,
            name + " segment_linear_density must be positive");
    for (double len : leg.segment_lengths)
      require(len > 0.0, ErrorCode::invalid_spec, name + " segment lengths must be positive");
    for (const auto& j : leg.joints) {
      require(j.pitch_stiffness > 0.0 && j.lateral_stiffness > 0.0, ErrorCode::invalid_spec,
              name + " joint stiffness must be positive");
      require(j.tendon_moment_arm > 0.0, ErrorCode::invalid_spec,
              name + " tendon moment arm must be positive");
      require(j.rotational_damping >= 0.0, ErrorCode::invalid_spec,
              name + " rotational damping must be non-negative");
    }
  }
  // Mirror symmetry of the mount azimuths about the sagittal plane: az_right = pi - az_left.
  for (int i = 0; i < 4; ++i) {
    const double left = s.mount_azimuths[static_cast<std::size_t>(i)];
    const double right = s.mount_azimuths[static_cast<std::size_t>(i + 4)];
    const double mismatch = kinematics::wrap_angle(std::numbers::pi - left - right);
    require(std::abs(mismatch) < 1e-9, ErrorCode::invalid_spec,
            "mount azimuths of legs " + std::to_string(i + 1) + " and " + std::to_string(i + 5) +
                " are not mirror-symmetric");
  }
}

/// Reflects a spider across its sagittal plane (x -> -x): left and right legs swap.
inline SpiderSpec mirrored(const SpiderSpec& s) {
  SpiderSpec m = s;
  for (int i = 0; i < 8; ++i) {
    const auto src = static_cast<std::size_t>(mirror_leg(i));
    const auto dst = static_cast<std::size_t>(i);
    m.legs[dst] = s.legs[src];
    m.legs[dst].side = side_of_leg(i);
    m.mount_azimuths[dst] = kinematics::wrap_angle(std::numbers::pi - s.mount_azimuths[src]);
  }
  return m;
}

// --- built robot ------------------------------------------------------------------------

struct LegChain {
  std::array<NodeId, 4> nodes{};  // J2, J3, J4, foot; J1 is the body node
  std::array<std::size_t, 4> joints{};  // indices into SpiderGraph::joints
  double azimuth = 0.0;
  int foot_ring = 0;

  NodeId sensor() const { return nodes[2]; }  // metatarsus-tarsus joint (J4)

  friend bool operator==(const LegChain&, const LegChain&) = default;
};

struct SpiderGraph {
  Graph graph;
  NodeId body = 0;
  std::array<LegChain, 8> legs{};
  std::vector<AngularJoint> joints;

  friend bool operator==(const SpiderGraph&, const SpiderGraph&) = default;
};

/// In-plane (outward, up) coordinates of the chain nodes for flexion angles `q`,
/// starting at the origin. Returns the four distal node positions.
inline std::array<std::array<double, 2>, 4> planar_chain(const std::array<double, 4>& lengths,
                                                         const std::array<double, 4>& q) {
  std::array<std::array<double, 2>, 4> pts{};
  double heading = 0.0;
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    heading += q[i];
    a += lengths[i] * std::sin(heading);
    b += lengths[i] * std::cos(heading);
    pts[i] = {a, b};
  }
  return pts;
}

namespace detail {

inline Vec3 leg_point(const Vec3& origin, const Vec3& u, const std::array<double, 2>& ab) {
  return origin + u * ab[0] + Vec3{0.0, 0.0, ab[1]};
}

}  // namespace detail

/// Builds a free-standing robot at its rest posture with the body at the origin.
/// Each leg is a body -> J2 -> J3 -> J4 -> foot chain of lumped point masses; J1
/// sits at the body node.
inline SpiderGraph build_spider(const SpiderSpec& spec) {
  validate(spec);
  SpiderGraph out;
  Graph& g = out.graph;
  out.body = g.add_node({Vec3{}, spec.body_mass, false});
  for (int li = 0; li < 8; ++li) {
    const auto& leg = spec.legs[static_cast<std::size_t>(li)];
    const double az = spec.mount_azimuths[static_cast<std::size_t>(li)];
    const Vec3 u{std::cos(az), std::sin(az), 0.0};
    const Vec3 n = cross(kinematics::kUp, u);
    std::array<double, 4> q{};
    for (std::size_t k = 0; k < 4; ++k) q[k] = leg.joints[k].rest_angle;
    const auto pts = planar_chain(leg.segment_lengths, q);

    LegChain& chain = out.legs[static_cast<std::size_t>(li)];
    chain.azimuth = az;
    chain.foot_ring = leg.foot_ring;
    NodeId prev = out.body;
    for (std::size_t k = 0; k < 4; ++k) {
      const NodeId id = g.add_node({detail::leg_point(Vec3{}, u, pts[k]), 0.0, false});
      chain.nodes[k] = id;
      ThreadSegment seg{prev, id, leg.segment_lengths[k], spec.segment_axial_stiffness,
                        spec.segment_damping, leg.segment_linear_density, EdgeKind::leg_segment};
      g.add_edge(seg);
      g.nodes[prev].mass += 0.5 * seg.mass();
      g.nodes[id].mass += 0.5 * seg.mass();
      prev = id;
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& js = leg.joints[k];
      AngularJoint j;
      j.leg = li;
      j.index = static_cast<int>(k);
      if (k == 0) {
        j.center = out.body;
      } else {
        j.proximal = k == 1 ? out.body : chain.nodes[k - 2];
        j.center = chain.nodes[k - 1];
      }
      j.distal = chain.nodes[k];
      j.plane_u = u;
      j.plane_n = n;
      j.rest_angle = js.rest_angle;
      j.pitch_stiffness = js.pitch_stiffness;
      j.lateral_stiffness = js.lateral_stiffness;
      j.rotational_damping = js.rotational_damping;
      j.tendon_moment_arm = js.tendon_moment_arm;
      chain.joints[k] = out.joints.size();
      out.joints.push_back(j);
    }
  }
  return out;
}

// --- actuation --------------------------------------------------------------------------

struct MotorProfile {
  double max_rotation = std::numbers::pi;  // rad
  double pulley_radius = 0.01;
  double ramp_up = 0.3;
  double hold = 0.0;
  double ramp_down = 0.3;
  double start_time = 1.0;

  double duration() const { return ramp_up + hold + ramp_down; }

  friend bool operator==(const MotorProfile&, const MotorProfile&) = default;
};

inline void validate(const MotorProfile& m) {
  require(m.max_rotation >= 0.0 && m.max_rotation <= 2.0 * std::numbers::pi, ErrorCode::invalid_spec,
          "motor max_rotation must lie in [0, 2 pi]");
  require(m.pulley_radius > 0.0, ErrorCode::invalid_spec, "pulley_radius must be positive");
  require(m.ramp_up >= 0.0 && m.hold >= 0.0 && m.ramp_down >= 0.0 && m.start_time >= 0.0,
          ErrorCode::invalid_spec, "motor durations must be non-negative");
  require(m.duration() > 0.0, ErrorCode::invalid_spec, "motor cycle duration must be positive");
}

/// Trapezoidal motor angle: ramp to max_rotation, hold, ramp back to zero.
inline double motor_angle(const MotorProfile& m, double t) {
  const double s = t - m.start_time;
  if (s <= 0.0 || s >= m.duration()) return 0.0;
  if (s < m.ramp_up) return m.max_rotation * s / m.ramp_up;
  if (s <= m.ramp_up + m.hold) return m.max_rotation;
  return m.max_rotation * (m.duration() - s) / m.ramp_down;
}

inline double cable_retraction(const MotorProfile& m, double t) {
  return m.pulley_radius * motor_angle(m, t);
}

struct ActuationResult {
  double cable_tension = 0.0;
  std::array<double, 4> torques{};
};

/// Series-elastic tendon: T = k_c max(0, s - sum a_i dphi_i), tau_i = T a_i.
inline ActuationResult actuation_torques(double retraction, const LegSpec& leg,
                                         const std::array<double, 4>& joint_deflections,
                                         double cable_series_stiffness) {
  double taken_up = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    taken_up += leg.joints[i].tendon_moment_arm * joint_deflections[i];
  ActuationResult r;
  r.cable_tension = cable_series_stiffness * std::max(0.0, retraction - taken_up);
  for (std::size_t i = 0; i < 4; ++i) r.torques[i] = r.cable_tension * leg.joints[i].tendon_moment_arm;
  return r;
}

/// Static cable tension when joints deflect against their pitch springs:
/// T = k_c s / (1 + k_c sum a_i^2 / k_i).
inline double static_cable_tension(double retraction, const LegSpec& leg,
                                   double cable_series_stiffness) {
  double compliance = 0.0;
  for (const auto& j : leg.joints)
    compliance += j.tendon_moment_arm * j.tendon_moment_arm / j.pitch_stiffness;
  return cable_series_stiffness * std::max(0.0, retraction) /
         (1.0 + cable_series_stiffness * compliance);
}

// --- crouch geometry --------------------------------------------------------------------

struct CrouchDepthReport {
  double delta_h = 0.0;
  double initial_depth = 0.0;
  double crouched_depth = 0.0;
};

/// Hanging depth below the web for a hip-to-foot chord c at foot radius r.
inline double hang_depth(double chord, double foot_radius) {
  if (chord <= foot_radius) return 0.0;
  return std::sqrt(chord * chord - foot_radius * foot_radius);
}

inline CrouchDepthReport crouch_depth(double total_chord_rest, double total_chord_crouched,
                                      double foot_radius) {
  require(total_chord_rest > 0.0 && total_chord_crouched > 0.0, ErrorCode::parameter,
          "chords must be positive");
  require(foot_radius >= 0.0, ErrorCode::parameter, "foot radius must be non-negative");
  require(total_chord_rest >= foot_radius, ErrorCode::unreachable_foot,
          "foot radius " + std::to_string(foot_radius) + " m exceeds leg chord " +
              std::to_string(total_chord_rest) + " m");
  CrouchDepthReport r;
  r.initial_depth = hang_depth(total_chord_rest, foot_radius);
  r.crouched_depth = hang_depth(total_chord_crouched, foot_radius);
  r.delta_h = std::max(0.0, r.initial_depth - r.crouched_depth);
  return r;
}

// --- defaults ---------------------------------------------------------------------------

struct SpiderDefaults {
  double total_mass = 0.8;
  double tarsus_base_length = 0.05;
  double segment_linear_density = 0.19;
  std::array<double, 4> rest_angles_deg{15.0, 60.0, 30.0, 15.0};
  std::array<JointMaterialSpec, 4> materials{};
  std::array<double, 4> rotational_damping{0.001, 0.001, 0.001, 0.001};
  std::array<double, 4> moment_arms{0.012, 0.010, 0.008, 0.006};
  std::array<int, 8> foot_rings{7, 5, 5, 5, 7, 5, 5, 5};
};

/// Uniform bilateral layout: right legs at 67.5, 22.5, -22.5, -67.5 degrees (front to rear),
/// left legs mirrored.
inline std::array<double, 8> default_mount_azimuths() {
  const double deg = std::numbers::pi / 180.0;
  const std::array<double, 4> right{67.5, 22.5, -22.5, -67.5};
  std::array<double, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i + 4] = right[i] * deg;
    out[i] = kinematics::wrap_angle(std::numbers::pi - right[i] * deg);
  }
  return out;
}

inline SpiderSpec make_spider_spec(const SpiderDefaults& d,
                                   const SegmentRatioTable& table = SegmentRatioTable::measured()) {
  SpiderSpec s;
  s.tarsus_base_length = d.tarsus_base_length;
  s.mount_azimuths = default_mount_azimuths();
  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < 8; ++i) {
    LegSpec& leg = s.legs[static_cast<std::size_t>(i)];
    leg.pair = pair_of_leg(i);
    leg.side = side_of_leg(i);
    leg.segment_lengths = segment_lengths_from_ratios(table, leg.pair, d.tarsus_base_length);
    leg.segment_linear_density = d.segment_linear_density;
    leg.foot_ring = d.foot_rings[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < 4; ++k) {
      const JointStiffness ks = joint_stiffness(d.materials[k]);
      leg.joints[k] = {d.rest_angles_deg[k] * deg, ks.pitch, ks.lateral, d.rotational_damping[k],
                       d.moment_arms[k]};
    }
  }
  double legs = 0.0;
  for (const auto& l : s.legs) legs += l.mass();
  s.body_mass = d.total_mass - legs;
  return s;
}

}  // namespace spiderweb
