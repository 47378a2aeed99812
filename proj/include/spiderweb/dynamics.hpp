#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spiderweb/error.hpp"
#include "spiderweb/graph.hpp"
#include "spiderweb/joint_kinematics.hpp"
#include "spiderweb/spider_model.hpp"
#include "spiderweb/state.hpp"

namespace spiderweb {

struct LegActuation {
  std::array<std::size_t, 4> joints{};  // indices into MechanicalSystem::joints
  NodeId sensor = 0;

  friend bool operator==(const LegActuation&, const LegActuation&) = default;
};

/// Everything the integrator needs: point masses, axial edges, angular joints and the
/// per-leg tendon routing.
struct MechanicalSystem {
  Graph graph;
  std::vector<AngularJoint> joints;
  std::vector<LegActuation> legs;
  double cable_series_stiffness = 0.0;
  bool threads_tension_only = true;

  friend bool operator==(const MechanicalSystem&, const MechanicalSystem&) = default;
};

/// Tendon drive for one trial. The cable is just taut when every joint sits at
/// its `reference_pitch`.
struct Actuation {
  MotorProfile motor;
  std::vector<double> reference_pitch;  // per joint
};

enum class Integrator { semi_implicit_euler, rk4 };
enum class AccelReadout { vertical, magnitude };

constexpr std::string_view to_string(Integrator i) {
  return i == Integrator::rk4 ? "rk4" : "semi_implicit_euler";
}
constexpr std::string_view to_string(AccelReadout r) {
  return r == AccelReadout::magnitude ? "magnitude" : "vertical";
}

struct SimConfig {
  double dt = 1e-4;
  Integrator integrator = Integrator::semi_implicit_euler;
  double gravity = 9.81;
  double duration = 12.0;
  double sensor_rate = 500.0;
  double sensor_noise_std = 0.0;
  std::uint64_t seed = 0;
  double initial_jitter = 0.0;  // std of per-node velocity jitter at trial start, m/s
  double mass_damping = 0.6;    // 1/s, mass-proportional (Rayleigh) damping during trials
  AccelReadout readout = AccelReadout::vertical;
  double divergence_bound = 100.0;  // m
  double settle_tolerance = 1e-4;   // m/s^2
  double settle_damping = 20.0;     // 1/s, mass-proportional, settling only
  double settle_max_time = 60.0;    // s

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline void validate(const SimConfig& c) {
  require(c.dt > 0.0, ErrorCode::config, "sim.dt must be positive");
  require(c.duration > 0.0, ErrorCode::config, "sim.duration must be positive");
  require(c.sensor_rate > 0.0 && c.sensor_rate <= 1.0 / c.dt * (1.0 + 1e-12), ErrorCode::config,
          "sim.sensor_rate must lie in (0, 1/dt]");
  const double stride = 1.0 / (c.dt * c.sensor_rate);
  require(std::abs(stride - std::round(stride)) < 1e-6, ErrorCode::config,
          "1 / (dt * sensor_rate) must be an integer");
  require(c.sensor_noise_std >= 0.0 && c.initial_jitter >= 0.0, ErrorCode::config,
          "noise and jitter must be non-negative");
  require(c.mass_damping >= 0.0, ErrorCode::config, "sim.mass_damping must be non-negative");
  require(c.settle_tolerance > 0.0 && c.settle_max_time > 0.0 && c.settle_damping >= 0.0,
          ErrorCode::config, "settle parameters must be positive");
}

struct AccelTrace {
  int leg_id = 1;  // 1..8
  std::vector<double> samples;
  double sample_rate = 500.0;
  double t0 = 0.0;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) / sample_rate; }

  friend bool operator==(const AccelTrace&, const AccelTrace&) = default;
};

struct ForceOptions {
  double gravity = 9.81;
  const Actuation* actuation = nullptr;
  double time = 0.0;
};

// --- forces -----------------------------------------------------------------------------

/// Cable tension of one leg for the current retraction and joint pitches.
inline double leg_cable_tension(const MechanicalSystem& sys, const LegActuation& leg,
                                const Actuation& act, std::span<const double> pitch,
                                double retraction) {
  double taken_up = 0.0;
  for (std::size_t j : leg.joints)
    taken_up += sys.joints[j].tendon_moment_arm * (pitch[j] - act.reference_pitch[j]);
  return sys.cable_series_stiffness * std::max(0.0, retraction - taken_up);
}

/// Per-node force: axial spring-dampers, joint angular springs and dampers, gravity and
/// tendon torques.
inline void net_forces(const SystemState& state, const MechanicalSystem& sys,
                       const ForceOptions& opt, std::vector<Vec3>& force) {
  const auto& nodes = sys.graph.nodes;
  const auto& x = state.position;
  const auto& v = state.velocity;
  force.assign(nodes.size(), Vec3{});

  for (const auto& e : sys.graph.edges) {
    const Vec3 d = x[e.b] - x[e.a];
    const double len = norm(d);
    if (len <= 0.0) continue;
    if (sys.threads_tension_only && e.is_thread() && len <= e.rest_length) continue;
    const Vec3 unit = d / len;
    const double rate = dot(unit, v[e.b] - v[e.a]);
    const Vec3 f = unit * (axial_tension(e, len) + e.damping * rate);
    force[e.a] += f;
    force[e.b] -= f;
  }

  thread_local std::vector<double> pitch;
  pitch.assign(sys.joints.size(), 0.0);
  thread_local std::vector<kinematics::JointGeometry> geo;
  geo.resize(sys.joints.size());
  for (std::size_t i = 0; i < sys.joints.size(); ++i) {
    geo[i] = kinematics::evaluate(sys.joints[i], x);
    pitch[i] = geo[i].pitch;
  }

  thread_local std::vector<double> drive;
  drive.assign(sys.joints.size(), 0.0);
  if (opt.actuation != nullptr) {
    const double s = cable_retraction(opt.actuation->motor, opt.time);
    for (const auto& leg : sys.legs) {
      const double tension = leg_cable_tension(sys, leg, *opt.actuation, pitch, s);
      for (std::size_t j : leg.joints) drive[j] = tension * sys.joints[j].tendon_moment_arm;
    }
  }

  for (std::size_t i = 0; i < sys.joints.size(); ++i) {
    const auto& j = sys.joints[i];
    const auto& g = geo[i];
    const NodeId ids[3] = {j.proximal.value_or(j.center), j.center, j.distal};
    const int first = j.proximal ? 0 : 1;
    double pitch_rate = 0.0;
    double lateral_rate = 0.0;
    for (int k = first; k < 3; ++k) {
      pitch_rate += dot(g.dpitch[k], v[ids[k]]);
      lateral_rate += dot(g.dlateral[k], v[ids[k]]);
    }
    const double m_pitch = -j.pitch_stiffness * (g.pitch - j.rest_angle) -
                           j.rotational_damping * pitch_rate + drive[i];
    const double m_lateral = -j.lateral_stiffness * g.lateral - j.rotational_damping * lateral_rate;
    for (int k = first; k < 3; ++k) force[ids[k]] += g.dpitch[k] * m_pitch + g.dlateral[k] * m_lateral;
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].anchored) {
      force[i] = Vec3{};
      continue;
    }
    force[i].z -= nodes[i].mass * opt.gravity;
  }
}

inline std::vector<Vec3> net_forces(const SystemState& state, const MechanicalSystem& sys,
                                    const ForceOptions& opt = {}) {
  for (std::size_t i = 0; i < state.position.size(); ++i)
    require(is_finite(state.position[i]) && is_finite(state.velocity[i]), ErrorCode::numeric_fault,
            "non-finite state at node " + std::to_string(i));
  std::vector<Vec3> f;
  net_forces(state, sys, opt, f);
  return f;
}

// --- integration ------------------------------------------------------------------------

/// Explicit stability needs dt < 2 / omega_max; this estimates omega_max from the
/// stiffest edge at its lighter endpoint.
inline double stable_dt_bound(const MechanicalSystem& sys) {
  double omega_max = 0.0;
  std::vector<double> k_sum(sys.graph.nodes.size(), 0.0);
  for (const auto& e : sys.graph.edges) {
    const double k = e.axial_stiffness / e.rest_length;
    k_sum[e.a] += k;
    k_sum[e.b] += k;
  }
  for (std::size_t i = 0; i < k_sum.size(); ++i) {
    const auto& n = sys.graph.nodes[i];
    if (n.anchored || n.mass <= 0.0) continue;
    omega_max = std::max(omega_max, std::sqrt(2.0 * k_sum[i] / n.mass));
  }
  return omega_max > 0.0 ? 2.0 / omega_max : 1.0;
}

class Stepper {
 public:
  Stepper(const MechanicalSystem& sys, const SimConfig& cfg, const Actuation* act = nullptr,
          double extra_damping = 0.0)
      : sys_(sys), cfg_(cfg), act_(act), extra_damping_(extra_damping) {
    inv_mass_.resize(sys.graph.nodes.size());
    for (std::size_t i = 0; i < inv_mass_.size(); ++i) {
      const auto& n = sys.graph.nodes[i];
      inv_mass_[i] = (n.anchored || n.mass <= 0.0) ? 0.0 : 1.0 / n.mass;
    }
  }

  void step(SystemState& s) {
    if (cfg_.integrator == Integrator::rk4)
      step_rk4(s);
    else
      step_euler(s);
    ++steps_;
    check(s);
  }

  const std::vector<Vec3>& last_force() const { return f_; }
  std::uint64_t steps() const { return steps_; }

  /// Acceleration of every node at `s` (no artificial damping).
  void accelerations(const SystemState& s, std::vector<Vec3>& a) {
    net_forces(s, sys_, options(s.time), a);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= inv_mass_[i];
  }

 private:
  ForceOptions options(double t) const { return {cfg_.gravity, act_, t}; }

  void accel_into(const SystemState& s, std::vector<Vec3>& a) {
    net_forces(s, sys_, options(s.time), a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] *= inv_mass_[i];
      if (extra_damping_ > 0.0 && inv_mass_[i] > 0.0) a[i] -= s.velocity[i] * extra_damping_;
    }
  }

  void step_euler(SystemState& s) {
    const double dt = cfg_.dt;
    accel_into(s, f_);
    for (std::size_t i = 0; i < f_.size(); ++i) {
      if (inv_mass_[i] == 0.0) continue;
      s.velocity[i] += f_[i] * dt;
      s.position[i] += s.velocity[i] * dt;
    }
    s.time += dt;
  }

  void step_rk4(SystemState& s) {
    const double dt = cfg_.dt;
    const std::size_t n = s.position.size();
    SystemState tmp = s;
    accel_into(s, k1a_);
    k1v_ = s.velocity;
    for (std::size_t i = 0; i < n; ++i) {
      if (inv_mass_[i] == 0.0) continue;
      tmp.position[i] = s.position[i] + k1v_[i] * (0.5 * dt);
      tmp.velocity[i] = s.velocity[i] + k1a_[i] * (0.5 * dt);
    }
    tmp.time = s.time + 0.5 * dt;
    k2v_ = tmp.velocity;
    accel_into(tmp, k2a_);
    for (std::size_t i = 0; i < n; ++i) {
      if (inv_mass_[i] == 0.0) continue;
      tmp.position[i] = s.position[i] + k2v_[i] * (0.5 * dt);
      tmp.velocity[i] = s.velocity[i] + k2a_[i] * (0.5 * dt);
    }
    k3v_ = tmp.velocity;
    accel_into(tmp, k3a_);
    for (std::size_t i = 0; i < n; ++i) {
      if (inv_mass_[i] == 0.0) continue;
      tmp.position[i] = s.position[i] + k3v_[i] * dt;
      tmp.velocity[i] = s.velocity[i] + k3a_[i] * dt;
    }
    tmp.time = s.time + dt;
    k4v_ = tmp.velocity;
    accel_into(tmp, k4a_);
    for (std::size_t i = 0; i < n; ++i) {
      if (inv_mass_[i] == 0.0) continue;
      s.position[i] += (k1v_[i] + 2.0 * k2v_[i] + 2.0 * k3v_[i] + k4v_[i]) * (dt / 6.0);
      s.velocity[i] += (k1a_[i] + 2.0 * k2a_[i] + 2.0 * k3a_[i] + k4a_[i]) * (dt / 6.0);
    }
    s.time += dt;
    f_ = k1a_;
  }

  void check(const SystemState& s) const {
    for (std::size_t i = 0; i < s.position.size(); ++i) {
      const Vec3& p = s.position[i];
      if (!is_finite(p) || !is_finite(s.velocity[i]) || norm(p) > cfg_.divergence_bound)
        throw Error(ErrorCode::divergence, "simulation diverged at step " +
                                               std::to_string(steps_) + " (t = " +
                                               std::to_string(s.time) + " s, node " +
                                               std::to_string(i) + ")");
    }
  }

  const MechanicalSystem& sys_;
  SimConfig cfg_;
  const Actuation* act_;
  double extra_damping_;
  std::vector<double> inv_mass_;
  std::vector<Vec3> f_, k1a_, k2a_, k3a_, k4a_, k1v_, k2v_, k3v_, k4v_;
  std::uint64_t steps_ = 0;
};

/// One integrator step; anchored nodes never move.
inline SystemState step(SystemState state, const MechanicalSystem& sys, const SimConfig& cfg,
                        const Actuation* act = nullptr) {
  Stepper stepper(sys, cfg, act);
  stepper.step(state);
  return state;
}

inline double max_acceleration(const SystemState& s, const MechanicalSystem& sys,
                               const SimConfig& cfg) {
  std::vector<Vec3> a;
  Stepper(sys, cfg).accelerations(s, a);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!sys.graph.nodes[i].anchored) worst = std::max(worst, norm(a[i]));
  return worst;
}

/// Relaxes the system under gravity with extra mass-proportional damping until every
/// free node's acceleration is below `tolerance`.
inline SystemState settle(const MechanicalSystem& sys, const SimConfig& cfg, double tolerance,
                          std::optional<SystemState> initial = std::nullopt) {
  SimConfig relax = cfg;
  relax.integrator = Integrator::semi_implicit_euler;
  SystemState s = initial ? *initial : SystemState::at_rest(sys.graph);
  Stepper stepper(sys, relax, nullptr, cfg.settle_damping);
  std::vector<Vec3> a;
  const auto max_steps = static_cast<std::uint64_t>(std::ceil(cfg.settle_max_time / cfg.dt));
  constexpr std::uint64_t kCheckEvery = 200;
  double residual = 0.0;
  for (std::uint64_t k = 0; k <= max_steps; ++k) {
    if (k % kCheckEvery == 0) {
      stepper.accelerations(s, a);
      residual = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!sys.graph.nodes[i].anchored) residual = std::max(residual, norm(a[i]));
      if (residual < tolerance) {
        for (auto& v : s.velocity) v = Vec3{};
        s.time = 0.0;
        return s;
      }
    }
    stepper.step(s);
  }
  throw Error(ErrorCode::settle_failure,
              "no static equilibrium within " + std::to_string(cfg.settle_max_time) +
                  " s (max residual acceleration " + std::to_string(residual) + " m/s^2)");
}

/// Joint pitch angles at `s`, in the order of sys.joints.
inline std::vector<double> joint_pitches(const SystemState& s, const MechanicalSystem& sys) {
  std::vector<double> out;
  out.reserve(sys.joints.size());
  for (const auto& j : sys.joints) out.push_back(kinematics::evaluate(j, s.position).pitch);
  return out;
}

/// Simulates one crouch-recovery cycle from a settled hang and samples each leg's
/// J4 accelerometer by finite-differencing the node velocity over the last step.
inline std::vector<AccelTrace> run_trial(const SystemState& settled, const MechanicalSystem& sys,
                                         const MotorProfile& motor, const SimConfig& cfg,
                                         std::uint64_t seed) {
  validate(cfg);
  validate(motor);
  Actuation act{motor, joint_pitches(settled, sys)};
  SystemState s = settled;
  s.time = 0.0;

  std::seed_seq jitter_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           1u};
  std::seed_seq noise_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          2u};
  std::mt19937_64 jitter_gen(jitter_seq);
  std::mt19937_64 noise_gen(noise_seq);
  if (cfg.initial_jitter > 0.0) {
    std::normal_distribution<double> jitter(0.0, cfg.initial_jitter);
    for (std::size_t i = 0; i < s.velocity.size(); ++i) {
      if (sys.graph.nodes[i].anchored) continue;
      s.velocity[i] += Vec3{jitter(jitter_gen), jitter(jitter_gen), jitter(jitter_gen)};
    }
  }
  std::normal_distribution<double> noise(0.0, cfg.sensor_noise_std > 0.0 ? cfg.sensor_noise_std : 1.0);

  const auto stride = static_cast<std::uint64_t>(std::llround(1.0 / (cfg.dt * cfg.sensor_rate)));
  const auto n_samples = static_cast<std::size_t>(std::floor(cfg.duration * cfg.sensor_rate + 1e-9));
  std::vector<AccelTrace> traces(sys.legs.size());
  for (std::size_t l = 0; l < traces.size(); ++l) {
    traces[l].leg_id = static_cast<int>(l) + 1;
    traces[l].sample_rate = cfg.sensor_rate;
    traces[l].samples.reserve(n_samples);
  }

  auto emit = [&](const std::vector<Vec3>& before) {
    for (std::size_t l = 0; l < sys.legs.size(); ++l) {
      const Vec3 dv = s.velocity[sys.legs[l].sensor] - before[l];
      double a = cfg.readout == AccelReadout::vertical ? dv.z / cfg.dt : norm(dv) / cfg.dt;
      if (cfg.sensor_noise_std > 0.0) a += noise(noise_gen);
      traces[l].samples.push_back(a);
    }
  };

  Stepper stepper(sys, cfg, &act, cfg.mass_damping);
  std::vector<Vec3> before(sys.legs.size());
  for (std::size_t l = 0; l < sys.legs.size(); ++l) before[l] = s.velocity[sys.legs[l].sensor];
  // The hang is static, so the sample at t = 0 reads zero acceleration.
  emit(before);
  for (std::size_t k = 1; k < n_samples; ++k) {
    for (std::uint64_t m = 0; m < stride; ++m) {
      if (m + 1 == stride)
        for (std::size_t l = 0; l < sys.legs.size(); ++l) before[l] = s.velocity[sys.legs[l].sensor];
      stepper.step(s);
    }
    emit(before);
  }
  return traces;
}

// --- energy -----------------------------------------------------------------------------

struct EnergyBreakdown {
  double kinetic = 0.0;
  double axial = 0.0;
  double angular = 0.0;
  double gravitational = 0.0;
  double total() const { return kinetic + axial + angular + gravitational; }
};

/// Kinetic + axial elastic + angular elastic + gravitational (zero at the web plane).
inline EnergyBreakdown energy_breakdown(const SystemState& s, const MechanicalSystem& sys,
                                        double gravity = 9.81) {
  EnergyBreakdown e;
  const auto& nodes = sys.graph.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].anchored) continue;
    e.kinetic += 0.5 * nodes[i].mass * dot(s.velocity[i], s.velocity[i]);
    e.gravitational += nodes[i].mass * gravity * s.position[i].z;
  }
  for (const auto& edge : sys.graph.edges) {
    const double len = norm(s.position[edge.b] - s.position[edge.a]);
    if (sys.threads_tension_only && edge.is_thread() && len <= edge.rest_length) continue;
    const double stretch = len - edge.rest_length;
    e.axial += 0.5 * edge.axial_stiffness / edge.rest_length * stretch * stretch;
  }
  for (const auto& j : sys.joints)
    e.angular += kinematics::spring_energy(j, kinematics::evaluate(j, s.position));
  return e;
}

inline double mechanical_energy(const SystemState& s, const MechanicalSystem& sys,
                                double gravity = 9.81) {
  return energy_breakdown(s, sys, gravity).total();
}

}  // namespace spiderweb
