#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spiderweb/dynamics.hpp"
#include "spiderweb/system.hpp"

using namespace spiderweb;

namespace {

// Anchored node at the origin, one free node hanging from it by a bidirectional spring.
MechanicalSystem spring_mass(double ea, double rest, double mass, Vec3 start, double damping = 0.0) {
  MechanicalSystem sys;
  sys.graph.add_node({Vec3{}, 0.0, true});
  sys.graph.add_node({start, mass, false});
  sys.graph.add_edge({0, 1, rest, ea, damping, 0.0, EdgeKind::leg_segment});
  return sys;
}

const AssembledSystem& robot() {
  static const AssembledSystem sys = [] {
    return assemble_system(build_web(WebSpec{}), make_spider_spec(SpiderDefaults{}));
  }();
  return sys;
}

const SystemState& hang() {
  static const SystemState s = settle(robot().mech, SimConfig{}, 1e-4);
  return s;
}

}  // namespace

TEST(Dynamics, HookeAndDashpotForce) {
  const Vec3 p{0.3, -0.4, 1.2};  // |p| = 1.3
  MechanicalSystem sys = spring_mass(200.0, 1.0, 1.0, p, 5.0);
  SystemState s = SystemState::at_rest(sys.graph);
  s.velocity[1] = Vec3{1.0, 2.0, -0.5};
  const Vec3 f = net_forces(s, sys, {.gravity = 0.0})[1];
  const Vec3 u = p / 1.3;
  const double rate = u.x * 1.0 + u.y * 2.0 - u.z * 0.5;
  const double tension = 200.0 * 0.3 / 1.0 + 5.0 * rate;
  EXPECT_NEAR(f.x, -tension * u.x, 1e-12);
  EXPECT_NEAR(f.y, -tension * u.y, 1e-12);
  EXPECT_NEAR(f.z, -tension * u.z, 1e-12);
  EXPECT_EQ(net_forces(s, sys, {.gravity = 0.0})[0], Vec3{});
}

// At zero velocity every force is conservative: F = -dE/dx, checked by central differences
// of the energy on the assembled robot-web system, joints included.
TEST(Dynamics, ForcesAreEnergyGradient) {
  const auto& sys = robot().mech;
  SystemState s = hang();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2e-3);
  for (std::size_t i = 0; i < s.position.size(); ++i)
    if (!sys.graph.nodes[i].anchored) s.position[i] += Vec3{n(rng), n(rng), n(rng)};
  const auto f = net_forces(s, sys);
  const double h = 1e-7;
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = robot().web.graph.nodes.size(); i < s.position.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      SystemState a = s, b = s;
      (c == 0 ? a.position[i].x : c == 1 ? a.position[i].y : a.position[i].z) += h;
      (c == 0 ? b.position[i].x : c == 1 ? b.position[i].y : b.position[i].z) -= h;
      const double grad = (mechanical_energy(a, sys) - mechanical_energy(b, sys)) / (2.0 * h);
      const double fc = c == 0 ? f[i].x : c == 1 ? f[i].y : f[i].z;
      worst = std::max(worst, std::abs(fc + grad));
      scale = std::max(scale, std::abs(fc));
    }
  }
  EXPECT_LT(worst, 1e-4 * scale) << "scale " << scale;
}

TEST(Dynamics, SemiImplicitEulerFreeFall) {
  MechanicalSystem sys;
  sys.graph.add_node({Vec3{0, 0, 0}, 1.0, true});
  sys.graph.add_node({Vec3{0, 0, 5.0}, 0.2, false});
  SimConfig cfg;
  cfg.dt = 1e-3;
  SystemState s = SystemState::at_rest(sys.graph);
  Stepper st(sys, cfg);
  for (int n = 1; n <= 1000; ++n) {
    st.step(s);
    // v_n = -g n dt, x_n = x_0 - g dt^2 n (n + 1) / 2
    ASSERT_NEAR(s.velocity[1].z, -9.81 * n * cfg.dt, 1e-12);
    ASSERT_NEAR(s.position[1].z, 5.0 - 9.81 * cfg.dt * cfg.dt * n * (n + 1) / 2.0, 1e-11);
  }
}

TEST(Dynamics, Rk4OscillatorPeriod) {
  const double m = 0.3, ea = 120.0, rest = 1.0;
  MechanicalSystem sys = spring_mass(ea, rest, m, Vec3{1.05, 0, 0});
  SimConfig cfg;
  cfg.integrator = Integrator::rk4;
  cfg.gravity = 0.0;
  cfg.dt = 1e-4;
  SystemState s = SystemState::at_rest(sys.graph);
  Stepper st(sys, cfg);
  std::vector<double> crossings;
  double prev = s.position[1].x - rest;
  while (crossings.size() < 5) {
    st.step(s);
    const double x = s.position[1].x - rest;
    if (prev > 0.0 && x <= 0.0) crossings.push_back(s.time - cfg.dt * x / (x - prev));
    prev = x;
  }
  const double period = (crossings.back() - crossings.front()) / 4.0;
  EXPECT_NEAR(period, 2.0 * std::numbers::pi * std::sqrt(m * rest / ea), 1e-6);
}

TEST(Dynamics, HangingMassExtension) {
  for (double m : {0.05, 0.4, 2.0}) {
    const double ea = 300.0, rest = 0.5;
    const MechanicalSystem sys = spring_mass(ea, rest, m, Vec3{0, 0, -rest});
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.settle_damping = 40.0;
    const SystemState s = settle(sys, cfg, 1e-10);
    const double ext = -s.position[1].z - rest;
    const double expected = m * cfg.gravity / (ea / rest);
    EXPECT_NEAR(ext, expected, 1e-6 * expected) << "m = " << m;
  }
}

// Released from the flat build, nothing damped: total energy (web plane reference) holds.
TEST(Dynamics, UndampedRobotConservesEnergy) {
  MechanicalSystem sys = robot().mech;
  for (auto& e : sys.graph.edges) e.damping = 0.0;
  for (auto& j : sys.joints) j.rotational_damping = 0.0;
  SimConfig cfg;
  cfg.integrator = Integrator::rk4;
  SystemState s = SystemState::at_rest(sys.graph);
  const double e0 = mechanical_energy(s, sys);
  Stepper st(sys, cfg);
  double drift = 0.0;
  for (int k = 1; k <= 10000; ++k) {
    st.step(s);
    if (k % 50 == 0) drift = std::max(drift, std::abs(mechanical_energy(s, sys) - e0));
  }
  EXPECT_LT(drift, 1e-2 * e0);
}

// Small oscillation about the hang. At the default step rk4 bleeds the stiff web modes;
// the error falls off fast with dt, which is what a correct rk4 on conservative forces does.
TEST(Dynamics, Rk4EnergyErrorShrinksWithStep) {
  MechanicalSystem sys = robot().mech;
  for (auto& e : sys.graph.edges) e.damping = 0.0;
  for (auto& j : sys.joints) j.rotational_damping = 0.0;
  SystemState start = hang();
  const double e_rest = mechanical_energy(start, sys);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  for (std::size_t i = 0; i < start.velocity.size(); ++i)
    if (!sys.graph.nodes[i].anchored) start.velocity[i] = Vec3{n(rng), n(rng), n(rng)};
  const double e0 = mechanical_energy(start, sys) - e_rest;
  auto drift_at = [&](double dt) {
    SimConfig cfg;
    cfg.integrator = Integrator::rk4;
    cfg.dt = dt;
    SystemState s = start;
    Stepper st(sys, cfg);
    const long steps = std::lround(0.1 / dt);
    double d = 0.0;
    for (long k = 1; k <= steps; ++k) {
      st.step(s);
      if (k % 20 == 0) d = std::max(d, std::abs(mechanical_energy(s, sys) - e_rest - e0));
    }
    return d / e0;
  };
  const double coarse = drift_at(2.5e-5), fine = drift_at(1e-5);
  EXPECT_LT(fine, 1e-4);
  EXPECT_GT(coarse / fine, std::pow(2.5, 4));
}

TEST(Dynamics, DampedRobotEnergyNeverRises) {
  const MechanicalSystem& sys = robot().mech;
  SimConfig cfg;
  cfg.integrator = Integrator::rk4;
  SystemState s = hang();
  const double e_rest = mechanical_energy(s, sys);
  for (std::size_t i = 0; i < s.velocity.size(); ++i)
    if (!sys.graph.nodes[i].anchored) s.velocity[i] = Vec3{0.0, 0.0, 0.2};
  const double e0 = mechanical_energy(s, sys) - e_rest;
  Stepper st(sys, cfg, nullptr, cfg.mass_damping);
  double prev = e0;
  for (int k = 1; k <= 4000; ++k) {
    st.step(s);
    if (k % 20 == 0) {
      const double e = mechanical_energy(s, sys) - e_rest;
      ASSERT_LE(e, prev + 1e-9 * e0) << "step " << k;
      prev = e;
    }
  }
  EXPECT_LT(prev, e0);
}

TEST(Dynamics, TrialsAreSeedDeterministic) {
  SimConfig cfg;
  cfg.duration = 2.0;
  cfg.sensor_noise_std = 0.01;
  cfg.initial_jitter = 1e-3;
  MotorProfile m;
  m.ramp_down = 0.1;
  m.start_time = 0.5;
  const auto a = run_trial(hang(), robot().mech, m, cfg, 11);
  const auto b = run_trial(hang(), robot().mech, m, cfg, 11);
  const auto c = run_trial(hang(), robot().mech, m, cfg, 12);
  ASSERT_EQ(a.size(), 8u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0].samples, c[0].samples);
  EXPECT_EQ(a[0].samples.size(), 1000u);
}

TEST(Dynamics, StaticHangReadsZeroWithoutDrive) {
  SimConfig cfg;
  cfg.duration = 0.5;
  MotorProfile m;
  m.max_rotation = 0.0;
  const auto tr = run_trial(hang(), robot().mech, m, cfg, 1);
  for (const auto& t : tr)
    for (double v : t.samples) EXPECT_LT(std::abs(v), 5e-3);
}

TEST(Dynamics, SettleReportsFailure) {
  SimConfig cfg;
  cfg.settle_max_time = 0.01;
  try {
    settle(robot().mech, cfg, 1e-4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::settle_failure);
    EXPECT_EQ(exit_code(e.code()), 3);
  }
}

TEST(Dynamics, OversizedStepDiverges) {
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.sensor_rate = 200.0;
  MotorProfile m;
  m.start_time = 0.0;
  EXPECT_GT(cfg.dt, stable_dt_bound(robot().mech));
  try {
    run_trial(hang(), robot().mech, m, cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::divergence);
  }
  EXPECT_LT(SimConfig{}.dt, stable_dt_bound(robot().mech));
}

TEST(Dynamics, NonFiniteStateIsNumericFault) {
  SystemState s = hang();
  s.position[5].x = std::nan("");
  try {
    net_forces(s, robot().mech);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numeric_fault);
  }
}

TEST(Dynamics, InvalidSimConfigIsConfigError) {
  SimConfig cfg;
  cfg.sensor_rate = 300.0;  // 1 / (dt * rate) not integral
  EXPECT_THROW(validate(cfg), Error);
  cfg = SimConfig{};
  cfg.dt = -1.0;
  EXPECT_THROW(validate(cfg), Error);
}
