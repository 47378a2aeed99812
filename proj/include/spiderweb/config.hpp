#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "spiderweb/dynamics.hpp"
#include "spiderweb/error.hpp"
#include "spiderweb/io.hpp"
#include "spiderweb/spectrum.hpp"
#include "spiderweb/spider_model.hpp"
#include "spiderweb/web_builder.hpp"

namespace spiderweb {

struct AnalysisOptions {
  double filter_cutoff = 25.0;  // Hz
  int filter_order = 4;         // total order of the zero-phase pass
  double window_start = 0.3;    // s
  double window_end = 11.0;     // s
  Taper taper = Taper::rectangular;
  double transient_sigma = 6.0;  // crouch-window detection threshold, in baseline std
  ClassifyOptions classify;

  friend bool operator==(const AnalysisOptions&, const AnalysisOptions&) = default;
};

struct ExperimentConfig {
  WebSpec web;
  SpiderSpec spider = make_spider_spec(SpiderDefaults{});
  std::optional<PreySpec> prey;
  MotorProfile motor;
  SimConfig sim;
  int trials = 7;
  AnalysisOptions analysis;
  std::string output_dir = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline void validate(const AnalysisOptions& a) {
  require(a.filter_order >= 2 && a.filter_order % 2 == 0, ErrorCode::config,
          "analysis.filter_order must be even and >= 2");
  require(a.filter_cutoff > 0.0, ErrorCode::config, "analysis.filter_cutoff must be positive");
  require(a.window_end > a.window_start && a.window_start >= 0.0, ErrorCode::config,
          "analysis.window must satisfy 0 <= start < end");
  require(a.transient_sigma > 0.0, ErrorCode::config, "analysis.transient_sigma must be positive");
  const auto& c = a.classify;
  for (const Band* b : {&c.baseline_band, &c.prey_band, &c.search_band})
    require(b->hi > b->lo && b->lo >= 0.0, ErrorCode::config, "analysis bands need 0 <= lo < hi");
  require(c.min_legs >= 1 && c.min_legs <= 8, ErrorCode::config, "analysis.min_legs must lie in [1, 8]");
  require(c.min_separation_bins >= 1, ErrorCode::config, "analysis.min_separation_bins must be >= 1");
  require(!c.min_prominence || *c.min_prominence >= 0.0, ErrorCode::config,
          "analysis.min_prominence must be non-negative");
}

/// Every sub-spec is checked; module errors are re-labelled as config errors.
inline void validate(const ExperimentConfig& c) {
  try {
    validate(c.web);
    validate(c.spider);
    validate(c.motor);
    validate(c.sim);
    validate(c.analysis);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    throw Error(ErrorCode::config, e.what());
  }
  require(c.trials >= 1, ErrorCode::config, "trials must be >= 1");
  require(c.analysis.filter_cutoff < 0.5 * c.sim.sensor_rate, ErrorCode::config,
          "analysis.filter_cutoff must lie below the sensor Nyquist frequency");
  require(c.analysis.window_end <= c.sim.duration + 1e-12, ErrorCode::config,
          "analysis.window ends after the trial");
  if (c.prey) {
    const auto& p = *c.prey;
    require(p.mass > 0.0, ErrorCode::config, "prey.mass must be positive");
    require(p.ring_index >= 1 && p.ring_index <= c.web.spiral_count, ErrorCode::config,
            "prey.ring_index outside the web");
    require(p.sector_index >= 0 && p.sector_index < c.web.radial_count, ErrorCode::config,
            "prey.sector_index outside the web");
    require(p.fraction > 0.0 && p.fraction < 1.0, ErrorCode::config, "prey.fraction must lie in (0, 1)");
  }
}

/// The frozen default experiment (tuned values, seeded variability). Mirrors
/// configs/paper.default.json.
inline ExperimentConfig paper_default_config() {
  ExperimentConfig c;
  c.motor.ramp_down = 0.1;
  c.sim.sensor_noise_std = 0.01;
  c.sim.initial_jitter = 1e-3;
  c.sim.seed = 1;
  return c;
}

// --- JSON -------------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

/// Object reader that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::config, path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::config, path_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw Error(ErrorCode::config, "unknown key " + path_ + "." + it.key());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E, std::size_t N>
E parse_enum(const json* j, const std::string& path, const std::array<std::pair<const char*, E>, N>& names,
             E fallback) {
  if (!j) return fallback;
  if (!j->is_string()) throw Error(ErrorCode::config, path + " must be a string");
  const auto s = j->get<std::string>();
  for (const auto& [n, v] : names)
    if (s == n) return v;
  throw Error(ErrorCode::config, path + ": unknown value '" + s + "'");
}

inline constexpr std::array<std::pair<const char*, Integrator>, 2> kIntegrators{
    {{"semi_implicit_euler", Integrator::semi_implicit_euler}, {"rk4", Integrator::rk4}}};
inline constexpr std::array<std::pair<const char*, AccelReadout>, 2> kReadouts{
    {{"vertical", AccelReadout::vertical}, {"magnitude", AccelReadout::magnitude}}};
inline constexpr std::array<std::pair<const char*, Taper>, 2> kTapers{
    {{"rectangular", Taper::rectangular}, {"hann", Taper::hann}}};
inline constexpr std::array<std::pair<const char*, LegPair>, 4> kPairs{
    {{"front", LegPair::front}, {"second", LegPair::second}, {"third", LegPair::third}, {"rear", LegPair::rear}}};
inline constexpr std::array<std::pair<const char*, Side>, 2> kSides{{{"left", Side::left}, {"right", Side::right}}};

template <typename E, std::size_t N>
const char* enum_name(E v, const std::array<std::pair<const char*, E>, N>& names) {
  for (const auto& [n, e] : names)
    if (e == v) return n;
  return names[0].first;
}

inline Band parse_band(const json* j, const std::string& path, Band fallback) {
  if (!j) return fallback;
  if (!j->is_array() || j->size() != 2 || !(*j)[0].is_number() || !(*j)[1].is_number())
    throw Error(ErrorCode::config, path + " must be [lo, hi]");
  return {(*j)[0].get<double>(), (*j)[1].get<double>()};
}

inline WebSpec parse_web(const json& j) {
  WebSpec w;
  Section s(j, "web");
  s.get("radial_count", w.radial_count);
  s.get("spiral_count", w.spiral_count);
  s.get("hub_radius", w.hub_radius);
  s.get("spiral_spacing", w.spiral_spacing);
  s.get("anchor_radius", w.anchor_radius);
  s.get("radial_stiffness", w.radial_stiffness);
  s.get("spiral_stiffness", w.spiral_stiffness);
  s.get("thread_linear_density", w.thread_linear_density);
  s.get("pretension", w.pretension);
  s.get("spiral_tension_ratio", w.spiral_tension_ratio);
  s.get("edge_damping", w.edge_damping);
  s.get("subdivision", w.subdivision);
  s.finish();
  return w;
}

inline json dump_web(const WebSpec& w) {
  return {{"radial_count", w.radial_count},
          {"spiral_count", w.spiral_count},
          {"hub_radius", w.hub_radius},
          {"spiral_spacing", w.spiral_spacing},
          {"anchor_radius", w.anchor_radius},
          {"radial_stiffness", w.radial_stiffness},
          {"spiral_stiffness", w.spiral_stiffness},
          {"thread_linear_density", w.thread_linear_density},
          {"pretension", w.pretension},
          {"spiral_tension_ratio", w.spiral_tension_ratio},
          {"edge_damping", w.edge_damping},
          {"subdivision", w.subdivision}};
}

inline JointSpec parse_joint(const json& j, const std::string& path, JointSpec js) {
  Section s(j, path);
  s.get("rest_angle", js.rest_angle);
  s.get("pitch_stiffness", js.pitch_stiffness);
  s.get("lateral_stiffness", js.lateral_stiffness);
  s.get("rotational_damping", js.rotational_damping);
  s.get("tendon_moment_arm", js.tendon_moment_arm);
  s.finish();
  return js;
}

inline json dump_joint(const JointSpec& js) {
  return {{"rest_angle", js.rest_angle},
          {"pitch_stiffness", js.pitch_stiffness},
          {"lateral_stiffness", js.lateral_stiffness},
          {"rotational_damping", js.rotational_damping},
          {"tendon_moment_arm", js.tendon_moment_arm}};
}

inline LegSpec parse_leg(const json& j, const std::string& path, LegSpec leg) {
  Section s(j, path);
  leg.pair = parse_enum(s.child("pair"), s.path("pair"), kPairs, leg.pair);
  leg.side = parse_enum(s.child("side"), s.path("side"), kSides, leg.side);
  s.get("segment_lengths", leg.segment_lengths);
  s.get("segment_linear_density", leg.segment_linear_density);
  s.get("foot_ring", leg.foot_ring);
  if (const json* js = s.child("joints")) {
    if (!js->is_array() || js->size() != 4)
      throw Error(ErrorCode::config, s.path("joints") + " must list 4 joints");
    for (std::size_t k = 0; k < 4; ++k)
      leg.joints[k] = parse_joint((*js)[k], s.path("joints") + "[" + std::to_string(k) + "]", leg.joints[k]);
  }
  s.finish();
  return leg;
}

inline json dump_leg(const LegSpec& leg) {
  json joints = json::array();
  for (const auto& js : leg.joints) joints.push_back(dump_joint(js));
  return {{"pair", enum_name(leg.pair, kPairs)},
          {"side", enum_name(leg.side, kSides)},
          {"segment_lengths", leg.segment_lengths},
          {"segment_linear_density", leg.segment_linear_density},
          {"foot_ring", leg.foot_ring},
          {"joints", joints}};
}

inline SpiderSpec parse_spider(const json& j, SpiderSpec sp) {
  Section s(j, "spider");
  s.get("body_mass", sp.body_mass);
  s.get("body_depth", sp.body_depth);
  s.get("tarsus_base_length", sp.tarsus_base_length);
  s.get("mount_azimuths", sp.mount_azimuths);
  s.get("cable_series_stiffness", sp.cable_series_stiffness);
  s.get("segment_axial_stiffness", sp.segment_axial_stiffness);
  s.get("segment_damping", sp.segment_damping);
  s.get("hub_tie_stiffness", sp.hub_tie_stiffness);
  s.get("hub_tie_damping", sp.hub_tie_damping);
  if (const json* legs = s.child("legs")) {
    if (!legs->is_array() || legs->size() != 8)
      throw Error(ErrorCode::config, "spider.legs must list 8 legs");
    for (std::size_t i = 0; i < 8; ++i)
      sp.legs[i] = parse_leg((*legs)[i], "spider.legs[" + std::to_string(i) + "]", sp.legs[i]);
  }
  s.finish();
  return sp;
}

inline json dump_spider(const SpiderSpec& sp) {
  json legs = json::array();
  for (const auto& l : sp.legs) legs.push_back(dump_leg(l));
  return {{"body_mass", sp.body_mass},
          {"body_depth", sp.body_depth},
          {"tarsus_base_length", sp.tarsus_base_length},
          {"mount_azimuths", sp.mount_azimuths},
          {"cable_series_stiffness", sp.cable_series_stiffness},
          {"segment_axial_stiffness", sp.segment_axial_stiffness},
          {"segment_damping", sp.segment_damping},
          {"hub_tie_stiffness", sp.hub_tie_stiffness},
          {"hub_tie_damping", sp.hub_tie_damping},
          {"legs", legs}};
}

inline PreySpec parse_prey(const json& j) {
  PreySpec p;
  Section s(j, "prey");
  s.get("mass", p.mass);
  s.get("ring_index", p.ring_index);
  s.get("sector_index", p.sector_index);
  s.get("fraction", p.fraction);
  s.finish();
  return p;
}

inline json dump_prey(const PreySpec& p) {
  return {{"mass", p.mass}, {"ring_index", p.ring_index}, {"sector_index", p.sector_index}, {"fraction", p.fraction}};
}

inline MotorProfile parse_motor(const json& j) {
  MotorProfile m;
  Section s(j, "motor");
  s.get("max_rotation", m.max_rotation);
  s.get("pulley_radius", m.pulley_radius);
  s.get("ramp_up", m.ramp_up);
  s.get("hold", m.hold);
  s.get("ramp_down", m.ramp_down);
  s.get("start_time", m.start_time);
  s.finish();
  return m;
}

inline json dump_motor(const MotorProfile& m) {
  return {{"max_rotation", m.max_rotation}, {"pulley_radius", m.pulley_radius}, {"ramp_up", m.ramp_up},
          {"hold", m.hold}, {"ramp_down", m.ramp_down}, {"start_time", m.start_time}};
}

inline SimConfig parse_sim(const json& j) {
  SimConfig c;
  Section s(j, "sim");
  s.get("dt", c.dt);
  c.integrator = parse_enum(s.child("integrator"), s.path("integrator"), kIntegrators, c.integrator);
  s.get("gravity", c.gravity);
  s.get("duration", c.duration);
  s.get("sensor_rate", c.sensor_rate);
  s.get("sensor_noise_std", c.sensor_noise_std);
  s.get("seed", c.seed);
  s.get("initial_jitter", c.initial_jitter);
  s.get("mass_damping", c.mass_damping);
  c.readout = parse_enum(s.child("readout"), s.path("readout"), kReadouts, c.readout);
  s.get("divergence_bound", c.divergence_bound);
  s.get("settle_tolerance", c.settle_tolerance);
  s.get("settle_damping", c.settle_damping);
  s.get("settle_max_time", c.settle_max_time);
  s.finish();
  return c;
}

inline json dump_sim(const SimConfig& c) {
  return {{"dt", c.dt},
          {"integrator", enum_name(c.integrator, kIntegrators)},
          {"gravity", c.gravity},
          {"duration", c.duration},
          {"sensor_rate", c.sensor_rate},
          {"sensor_noise_std", c.sensor_noise_std},
          {"seed", c.seed},
          {"initial_jitter", c.initial_jitter},
          {"mass_damping", c.mass_damping},
          {"readout", enum_name(c.readout, kReadouts)},
          {"divergence_bound", c.divergence_bound},
          {"settle_tolerance", c.settle_tolerance},
          {"settle_damping", c.settle_damping},
          {"settle_max_time", c.settle_max_time}};
}

inline AnalysisOptions parse_analysis(const json& j) {
  AnalysisOptions a;
  Section s(j, "analysis");
  s.get("filter_cutoff", a.filter_cutoff);
  s.get("filter_order", a.filter_order);
  if (const json* w = s.child("window")) {
    const Band b = parse_band(w, s.path("window"), {});
    a.window_start = b.lo;
    a.window_end = b.hi;
  }
  a.taper = parse_enum(s.child("taper"), s.path("taper"), kTapers, a.taper);
  s.get("transient_sigma", a.transient_sigma);
  auto& c = a.classify;
  c.baseline_band = parse_band(s.child("baseline_band"), s.path("baseline_band"), c.baseline_band);
  c.prey_band = parse_band(s.child("prey_band"), s.path("prey_band"), c.prey_band);
  c.search_band = parse_band(s.child("search_band"), s.path("search_band"), c.search_band);
  s.get("min_legs", c.min_legs);
  s.get("min_separation_bins", c.min_separation_bins);
  if (const json* mp = s.child("min_prominence"); mp && !mp->is_null()) {
    if (!mp->is_number()) throw Error(ErrorCode::config, "analysis.min_prominence must be a number or null");
    c.min_prominence = mp->get<double>();
  }
  s.finish();
  return a;
}

inline json dump_analysis(const AnalysisOptions& a) {
  const auto& c = a.classify;
  return {{"filter_cutoff", a.filter_cutoff},
          {"filter_order", a.filter_order},
          {"window", {a.window_start, a.window_end}},
          {"taper", enum_name(a.taper, kTapers)},
          {"transient_sigma", a.transient_sigma},
          {"baseline_band", {c.baseline_band.lo, c.baseline_band.hi}},
          {"prey_band", {c.prey_band.lo, c.prey_band.hi}},
          {"search_band", {c.search_band.lo, c.search_band.hi}},
          {"min_legs", c.min_legs},
          {"min_separation_bins", c.min_separation_bins},
          {"min_prominence", c.min_prominence ? json(*c.min_prominence) : json(nullptr)}};
}

}  // namespace detail

/// Parses a config document. Absent keys keep their defaults; unknown keys are errors.
inline ExperimentConfig config_from_json(const nlohmann::json& j, bool check = true) {
  ExperimentConfig c;
  detail::Section s(j, "config");
  if (const auto* w = s.child("web")) c.web = detail::parse_web(*w);
  if (const auto* sp = s.child("spider")) c.spider = detail::parse_spider(*sp, c.spider);
  if (const auto* p = s.child("prey"); p && !p->is_null()) c.prey = detail::parse_prey(*p);
  if (const auto* m = s.child("motor")) c.motor = detail::parse_motor(*m);
  if (const auto* sim = s.child("sim")) c.sim = detail::parse_sim(*sim);
  s.get("trials", c.trials);
  if (const auto* a = s.child("analysis")) c.analysis = detail::parse_analysis(*a);
  s.get("output_dir", c.output_dir);
  s.finish();
  if (check) validate(c);
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"web", detail::dump_web(c.web)},
          {"spider", detail::dump_spider(c.spider)},
          {"prey", c.prey ? detail::dump_prey(*c.prey) : nlohmann::json(nullptr)},
          {"motor", detail::dump_motor(c.motor)},
          {"sim", detail::dump_sim(c.sim)},
          {"trials", c.trials},
          {"analysis", detail::dump_analysis(c.analysis)},
          {"output_dir", c.output_dir}};
}

inline ExperimentConfig parse_config(std::string_view text, bool check = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, check);
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  std::string text;
  try {
    text = io::read_file(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::config, e.what());
  }
  return parse_config(text);
}

inline std::string dump_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace spiderweb
