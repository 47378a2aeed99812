#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spiderweb/config.hpp"
#include "spiderweb/experiment.hpp"
#include "spiderweb/io.hpp"
#include "spiderweb/svg.hpp"

namespace spiderweb {

namespace fs = std::filesystem;
using nlohmann::json;

enum class TableFormat { csv, json };

struct OutputOptions {
  fs::path out_dir = "out";
  int jobs = 1;
  TableFormat format = TableFormat::csv;
};

/// Machine-readable record of a failure, written next to the artifacts.
inline json error_record(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"exit_code", exit_code(e.code())}, {"message", e.what()}};
}

namespace detail {

inline const char* extension(TableFormat f) { return f == TableFormat::json ? ".json" : ".csv"; }

inline std::string render_table(const io::Table& t, TableFormat f) {
  if (f == TableFormat::csv) return io::to_csv(t);
  json cols = json::array();
  for (std::size_t c = 0; c < t.header.size(); ++c) cols.push_back({{"name", t.header[c]}, {"values", t.columns[c]}});
  return json{{"columns", cols}}.dump(1) + "\n";
}

inline io::Table parse_table(const std::string& text, TableFormat f) {
  if (f == TableFormat::csv) return io::parse_csv(text);
  io::Table t;
  try {
    const json j = json::parse(text);
    for (const auto& c : j.at("columns")) {
      t.header.push_back(c.at("name").get<std::string>());
      t.columns.push_back(c.at("values").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io, std::string("malformed table: ") + e.what());
  }
  return t;
}

/// Collects written files so the manifest can list and hash them.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& rel, const std::string& content) {
    io::write_file(root_ / rel, content);
    files_.push_back({{"path", rel}, {"bytes", content.size()}, {"sha1", io::git_blob_sha1(content)}});
  }

  const json& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  json files_ = json::array();
};

inline std::string trial_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%02zu", i + 1);
  return buf;
}

inline io::Table trace_table(const TrialOutput& t) {
  io::Table tab;
  tab.header = {"time_s"};
  const auto& first = t.traces.front();
  std::vector<double> time(first.samples.size());
  for (std::size_t k = 0; k < time.size(); ++k) time[k] = first.time(k);
  tab.columns.push_back(std::move(time));
  for (const auto& tr : t.traces) {
    tab.header.push_back("leg" + std::to_string(tr.leg_id));
    tab.columns.push_back(tr.samples);
  }
  return tab;
}

inline io::Table spectrum_table(const TrialOutput& t) {
  io::Table tab;
  tab.header = {"frequency_hz"};
  tab.columns.push_back(t.spectra.front().frequencies);
  for (std::size_t l = 0; l < t.spectra.size(); ++l) {
    tab.header.push_back("leg" + std::to_string(l + 1));
    tab.columns.push_back(t.spectra[l].amplitudes);
  }
  return tab;
}

inline io::Table stats_table(const std::vector<TrialStats>& stats) {
  io::Table tab;
  tab.header = {"frequency_hz"};
  tab.columns.push_back(stats.front().frequencies);
  for (std::size_t l = 0; l < stats.size(); ++l) {
    const std::string leg = "leg" + std::to_string(l + 1);
    tab.header.push_back(leg + "_mean");
    tab.columns.push_back(stats[l].mean);
    tab.header.push_back(leg + "_std");
    tab.columns.push_back(stats[l].std);
  }
  return tab;
}

inline std::vector<TrialStats> stats_from_table(const io::Table& tab, int n_trials) {
  std::vector<TrialStats> out;
  const auto& f = tab.columns[tab.column("frequency_hz")];
  for (int l = 1; l <= 8; ++l) {
    const std::string leg = "leg" + std::to_string(l);
    TrialStats s;
    s.frequencies = f;
    s.mean = tab.columns[tab.column(leg + "_mean")];
    s.std = tab.columns[tab.column(leg + "_std")];
    s.n_trials = n_trials;
    out.push_back(std::move(s));
  }
  return out;
}

inline json peak_json(const std::optional<Peak>& p) {
  if (!p) return nullptr;
  return {{"bin", p->bin}, {"frequency_hz", p->frequency}, {"amplitude", p->amplitude}, {"prominence", p->prominence}};
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json classification_json(const PreyClassification& c, const ClassifyOptions& opt) {
  json legs = json::array();
  for (std::size_t l = 0; l < c.legs.size(); ++l) {
    const auto& d = c.legs[l];
    json peaks = json::array();
    for (const auto& p : d.report.peaks) peaks.push_back(peak_json(p));
    legs.push_back({{"leg", l + 1},
                    {"min_prominence", d.report.min_prominence},
                    {"peaks", peaks},
                    {"baseline", peak_json(d.baseline)},
                    {"prey", peak_json(d.prey)},
                    {"secondary", peak_json(secondary_peak(d, opt))}});
  }
  return {{"present", c.present},
          {"decision", c.present ? "present" : "absent"},
          {"legs_detected", c.legs_detected},
          {"min_legs", opt.min_legs},
          {"legs", legs},
          {"baseline_frequency_hz", optional_json(baseline_frequency(c))},
          {"prey_peak_frequency_hz", optional_json(prey_peak_frequency(c, opt))}};
}

inline json summary_json(const ExperimentResult& r) {
  json windows = json::array();
  for (const auto& w : r.crouch_windows) windows.push_back(w ? json{w->first, w->second} : json(nullptr));
  const auto& s0 = r.stats.front();
  json decay = json::array();
  for (std::size_t l = 0; l < 8; ++l)
    decay.push_back({{"leg", l + 1},
                     {"peak_time_s", r.decay[l].peak_time},
                     {"peak_rms", r.decay[l].peak_rms},
                     {"decay_time_s", detail::optional_json(r.decay[l].decay_time)}});
  return {{"n_trials", s0.n_trials},
          {"std_defined", s0.std_defined()},
          {"resolution_hz", s0.frequencies.size() > 1 ? s0.frequencies[1] - s0.frequencies[0] : 0.0},
          {"system_hash", r.system_hash},
          {"crouch_windows_s", windows},
          {"decay", decay},
          {"classification", classification_json(r.classification, r.config.analysis.classify)}};
}

}  // namespace detail

/// Writes every artifact of a finished experiment under `opt.out_dir` and returns the
/// manifest. Wall-clock timings go to timings.json, which is not hashed.
inline json write_run(const ExperimentResult& r, const OutputOptions& opt) {
  detail::ArtifactWriter w(opt.out_dir);
  const char* ext = detail::extension(opt.format);
  const std::string config_text = dump_config(r.config);
  w.write("config.json", config_text);
  const std::string config_hash = io::git_blob_sha1(config_text);
  json seeds = json::array();
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    const std::string name = detail::trial_name(i);
    seeds.push_back(t.seed);
    w.write("traces/" + name + ext, detail::render_table(detail::trace_table(t), opt.format));
    w.write("traces/" + name + ".meta.json",
            json{{"trial", i + 1},
                 {"seed", t.seed},
                 {"sample_rate_hz", t.traces.front().sample_rate},
                 {"samples", t.traces.front().samples.size()},
                 {"units", "m/s^2"},
                 {"system_hash", r.system_hash},
                 {"config_hash", config_hash}}
                    .dump(2) + "\n");
    w.write("spectra/" + name + ext, detail::render_table(detail::spectrum_table(t), opt.format));
  }
  w.write(std::string("stats") + ext, detail::render_table(detail::stats_table(r.stats), opt.format));
  w.write("summary.json", detail::summary_json(r).dump(2) + "\n");

  const json manifest = {{"config", to_json(r.config)},
                         {"config_hash", config_hash},
                         {"system_hash", r.system_hash},
                         {"seeds", seeds},
                         {"format", opt.format == TableFormat::json ? "json" : "csv"},
                         {"files", w.files()},
                         {"timings_file", "timings.json"}};
  io::write_file(opt.out_dir / "manifest.json", manifest.dump(2) + "\n");
  io::write_file(opt.out_dir / "timings.json",
                 json{{"settle_s", r.settle_seconds}, {"trials_s", r.trial_seconds}, {"jobs", opt.jobs}}.dump(2) + "\n");
  return manifest;
}

inline json cmd_run(const ExperimentConfig& cfg, const OutputOptions& opt) {
  return write_run(run_experiment(cfg, opt.jobs), opt);
}

// --- reading runs back ------------------------------------------------------------------

struct RunData {
  fs::path dir;
  ExperimentConfig config;
  json manifest;
  json summary;
  TableFormat format = TableFormat::csv;
  std::vector<TrialStats> stats;
};

inline json read_json(const fs::path& p) {
  try {
    return json::parse(io::read_file(p));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::io, p.string() + " is not valid JSON: " + e.what());
  }
}

inline RunData load_run(const fs::path& dir) {
  RunData d;
  d.dir = dir;
  if (!fs::exists(dir / "manifest.json"))
    throw Error(ErrorCode::io, "no run artifacts in " + dir.string() + " (manifest.json missing)");
  d.manifest = read_json(dir / "manifest.json");
  d.summary = read_json(dir / "summary.json");
  d.config = parse_config(io::read_file(dir / "config.json"));
  d.format = d.manifest.value("format", "csv") == "json" ? TableFormat::json : TableFormat::csv;
  const auto tab = detail::parse_table(io::read_file(dir / (std::string("stats") + detail::extension(d.format))), d.format);
  d.stats = detail::stats_from_table(tab, d.summary.at("n_trials").get<int>());
  return d;
}

/// Re-hashes every listed file; returns the paths that are missing or differ.
inline std::vector<std::string> verify_manifest(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  std::vector<std::string> bad;
  for (const auto& f : m.at("files")) {
    const auto rel = f.at("path").get<std::string>();
    const fs::path p = dir / rel;
    if (!fs::exists(p) || io::git_blob_sha1(io::read_file(p)) != f.at("sha1").get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

// --- compare ----------------------------------------------------------------------------

/// Empty-web run `a` against prey run `b`: overlay table, per-leg prey-band excess power
/// and both decisions. Classification uses `a`'s analysis options for both runs.
inline json cmd_compare(const fs::path& run_a, const fs::path& run_b, const OutputOptions& opt) {
  const RunData a = load_run(run_a);
  const RunData b = load_run(run_b);
  for (std::size_t l = 0; l < 8; ++l)
    require(same_grid(a.stats[l].frequencies, b.stats[l].frequencies), ErrorCode::grid_mismatch,
            "runs have different frequency grids (window or sample rate differ)");
  const auto& copt = a.config.analysis.classify;
  const auto ca = classify_prey(a.stats, copt);
  const auto cb = classify_prey(b.stats, copt);

  io::Table overlay;
  overlay.header = {"frequency_hz"};
  overlay.columns.push_back(a.stats[0].frequencies);
  json legs = json::array();
  for (std::size_t l = 0; l < 8; ++l) {
    const std::string leg = "leg" + std::to_string(l + 1);
    for (const auto& [run, tag] : {std::pair<const RunData*, const char*>{&a, "a"}, {&b, "b"}}) {
      overlay.header.push_back(leg + "_mean_" + tag);
      overlay.columns.push_back(run->stats[l].mean);
      overlay.header.push_back(leg + "_std_" + tag);
      overlay.columns.push_back(run->stats[l].std);
    }
    const double pa = band_power(a.stats[l].frequencies, a.stats[l].mean, copt.prey_band);
    const double pb = band_power(b.stats[l].frequencies, b.stats[l].mean, copt.prey_band);
    legs.push_back({{"leg", l + 1}, {"prey_band_power_a", pa}, {"prey_band_power_b", pb}, {"excess", pb - pa}});
  }
  detail::ArtifactWriter w(opt.out_dir);
  w.write(std::string("comparison") + detail::extension(opt.format), detail::render_table(overlay, opt.format));
  const json summary = {{"run_a", run_a.string()},
                        {"run_b", run_b.string()},
                        {"prey_band_hz", {copt.prey_band.lo, copt.prey_band.hi}},
                        {"legs", legs},
                        {"n_trials_a", a.stats[0].n_trials},
                        {"n_trials_b", b.stats[0].n_trials},
                        {"decision_a", detail::classification_json(ca, copt)},
                        {"decision_b", detail::classification_json(cb, copt)},
                        {"flipped", !ca.present && cb.present},
                        {"format", opt.format == TableFormat::json ? "json" : "csv"}};
  w.write("comparison.json", summary.dump(2) + "\n");
  return summary;
}

// --- sweep ------------------------------------------------------------------------------

enum class SweepParameter { prey_ring, prey_mass, foot_ring, motor_rotation };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "prey_ring") return SweepParameter::prey_ring;
  if (s == "prey_mass") return SweepParameter::prey_mass;
  if (s == "foot_ring") return SweepParameter::foot_ring;
  if (s == "motor_rotation") return SweepParameter::motor_rotation;
  throw Error(ErrorCode::config, "unknown sweep parameter '" + s +
                                     "' (expected prey_ring, prey_mass, foot_ring or motor_rotation)");
}

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::prey_ring: return "prey_ring";
    case SweepParameter::prey_mass: return "prey_mass";
    case SweepParameter::foot_ring: return "foot_ring";
    case SweepParameter::motor_rotation: return "motor_rotation";
  }
  return "prey_ring";
}

inline int integral_value(double v, const char* what) {
  require(v == std::floor(v), ErrorCode::config, std::string(what) + " values must be integers");
  return static_cast<int>(v);
}

/// Applies one sweep value. Prey sweeps add the default prey when the base has none;
/// foot_ring moves all eight feet.
inline ExperimentConfig apply_sweep_value(ExperimentConfig cfg, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::prey_ring:
      if (!cfg.prey) cfg.prey = PreySpec{};
      cfg.prey->ring_index = integral_value(v, "prey_ring");
      break;
    case SweepParameter::prey_mass:
      if (!cfg.prey) cfg.prey = PreySpec{};
      cfg.prey->mass = v;
      break;
    case SweepParameter::foot_ring:
      for (auto& leg : cfg.spider.legs) leg.foot_ring = integral_value(v, "foot_ring");
      break;
    case SweepParameter::motor_rotation:
      cfg.motor.max_rotation = v;
      break;
  }
  return cfg;
}

struct SweepRow {
  double value = 0.0;
  std::optional<Error> error;
  std::optional<double> baseline_frequency;
  std::optional<double> prey_frequency;
  bool present = false;
  int legs_detected = 0;
};

/// One experiment per value; a failing run is recorded in its own row and the sweep
/// goes on. A run whose crouch shows no transient on any leg records NoTransient.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepParameter p,
                                       const std::vector<double>& values, int jobs) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    try {
      const ExperimentConfig cfg = apply_sweep_value(base, p, v);
      const ExperimentResult r = run_experiment(cfg, jobs);
      if (!r.any_transient())
        throw Error(ErrorCode::no_transient, "no crouch transient on any leg");
      const auto& copt = cfg.analysis.classify;
      row.baseline_frequency = baseline_frequency(r.classification);
      row.prey_frequency = prey_peak_frequency(r.classification, copt);
      row.present = r.classification.present;
      row.legs_detected = r.classification.legs_detected;
    } catch (const Error& e) {
      row.error = e;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json cmd_sweep(const ExperimentConfig& base, SweepParameter p, const std::vector<double>& values,
                      const OutputOptions& opt) {
  const auto rows = run_sweep(base, p, values, opt.jobs);
  auto opt_num = [](const std::optional<double>& v) { return v ? io::format_number(*v) : std::string(); };
  std::string csv = std::string(to_string(p)) +
                    ",status,error,baseline_frequency_hz,prey_peak_frequency_hz,decision,legs_detected\n";
  json jrows = json::array();
  for (const auto& r : rows) {
    const std::string code = r.error ? std::string(to_string(r.error->code())) : "";
    csv += io::format_number(r.value) + "," + (r.error ? "error" : "ok") + "," + code + "," +
           opt_num(r.baseline_frequency) + "," + opt_num(r.prey_frequency) + "," +
           (r.error ? "" : (r.present ? "present" : "absent")) + "," +
           (r.error ? "" : std::to_string(r.legs_detected)) + "\n";
    json jr = {{"value", r.value},
               {"status", r.error ? "error" : "ok"},
               {"baseline_frequency_hz", detail::optional_json(r.baseline_frequency)},
               {"prey_peak_frequency_hz", detail::optional_json(r.prey_frequency)}};
    if (r.error) {
      jr["error"] = error_record(*r.error);
    } else {
      jr["decision"] = r.present ? "present" : "absent";
      jr["legs_detected"] = r.legs_detected;
    }
    jrows.push_back(std::move(jr));
  }
  const json summary = {{"parameter", to_string(p)}, {"base_config", to_json(base)}, {"rows", jrows}};
  detail::ArtifactWriter w(opt.out_dir);
  w.write("sweep.csv", csv);
  w.write("sweep.json", summary.dump(2) + "\n");
  return summary;
}

// --- plots ------------------------------------------------------------------------------

inline constexpr const char* kPalette[] = {"#1f4e9c", "#c0392b"};

inline svg::Panel spectrum_panel(std::size_t leg, const TrialStats& s, const char* color) {
  svg::Panel p;
  p.title = "leg " + std::to_string(leg + 1);
  svg::Series se{s.frequencies, s.mean, color, std::nullopt};
  if (s.std_defined()) se.spread = s.std;
  else p.note = "n = 1, s.d. undefined";
  p.series.push_back(std::move(se));
  return p;
}

/// Figures for a run directory (time traces + spectra) or a comparison directory
/// (overlaid spectra). Returns the written file names.
inline std::vector<std::string> cmd_plot(const fs::path& dir, const fs::path& out_dir) {
  std::vector<std::string> written;
  if (fs::exists(dir / "comparison.json")) {
    const json c = read_json(dir / "comparison.json");
    const auto a = load_run(c.at("run_a").get<std::string>());
    const auto b = load_run(c.at("run_b").get<std::string>());
    svg::Figure fig{"Spectra: no prey (blue) vs prey (red)", "frequency (Hz)", "m/s^2", {}, std::pair{0.0, 15.0}};
    for (std::size_t l = 0; l < 8; ++l) {
      svg::Panel p = spectrum_panel(l, a.stats[l], kPalette[0]);
      svg::Panel pb = spectrum_panel(l, b.stats[l], kPalette[1]);
      p.series.push_back(pb.series.front());
      if (p.note.empty()) p.note = pb.note;
      fig.panels.push_back(std::move(p));
    }
    io::write_file(out_dir / "spectra_compare.svg", svg::render(fig));
    written.push_back("spectra_compare.svg");
    return written;
  }

  const RunData run = load_run(dir);
  const std::string first_trace = std::string("traces/trial_01") + detail::extension(run.format);
  const auto traces = detail::parse_table(io::read_file(dir / first_trace), run.format);
  svg::Figure tf{"Acceleration vs time, trial 1", "time (s)", "m/s^2", {}, std::nullopt};
  const auto& t = traces.columns[traces.column("time_s")];
  for (int l = 1; l <= 8; ++l) {
    svg::Panel p;
    p.title = "leg " + std::to_string(l);
    p.series.push_back({t, traces.columns[traces.column("leg" + std::to_string(l))], kPalette[0], std::nullopt});
    tf.panels.push_back(std::move(p));
  }
  svg::Figure sf{"Amplitude spectra, mean +- 1 s.d.", "frequency (Hz)", "m/s^2", {}, std::pair{0.0, 15.0}};
  for (std::size_t l = 0; l < 8; ++l) sf.panels.push_back(spectrum_panel(l, run.stats[l], kPalette[0]));
  io::write_file(out_dir / "time_traces.svg", svg::render(tf));
  io::write_file(out_dir / "spectra.svg", svg::render(sf));
  written = {"time_traces.svg", "spectra.svg"};
  return written;
}

// --- build-web ----------------------------------------------------------------------------

inline json cmd_build_web(const ExperimentConfig& cfg, const OutputOptions& opt) {
  validate(cfg);
  WebGraph web = build_web(cfg.web);
  if (cfg.prey) web = attach_prey(std::move(web), *cfg.prey);
  const AssembledSystem sys = assemble_system(web, cfg.spider);
  detail::ArtifactWriter w(opt.out_dir);
  w.write("web.json", to_json(web).dump(1) + "\n");
  w.write("system.json", to_json(sys).dump(1) + "\n");
  return {{"files", w.files()},
          {"web_nodes", web.graph.nodes.size()},
          {"web_edges", web.graph.edges.size()},
          {"system_nodes", sys.mech.graph.nodes.size()},
          {"system_hash", system_hash(sys)}};
}

// --- pose ratios --------------------------------------------------------------------------

inline int landmark_index(const std::string& name) {
  for (std::size_t i = 0; i < kLandmarkNames.size(); ++i)
    if (name == kLandmarkNames[i]) return static_cast<int>(i);
  if (name.size() == 1 && name[0] >= '0' && name[0] <= '4') return name[0] - '0';
  throw Error(ErrorCode::io, "unknown landmark '" + name + "'");
}

/// Long-format landmark CSV: frame, landmark, x_px, y_px, likelihood and an optional
/// leg column. Frames missing for a landmark are treated as unreliable.
inline std::vector<LandmarkTrace> parse_landmark_csv(const std::string& text, double frame_rate) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line == "\r") continue;
    rows.push_back(io::split_csv_line(line));
  }
  if (rows.empty()) throw Error(ErrorCode::io, "landmark csv is empty");
  const auto& header = rows.front();
  auto col = [&](const char* name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto c_frame = col("frame"), c_lm = col("landmark"), c_x = col("x_px"), c_y = col("y_px"),
             c_l = col("likelihood"), c_leg = col("leg");
  if (!c_frame || !c_lm || !c_x || !c_y || !c_l)
    throw Error(ErrorCode::io, "landmark csv needs columns frame, landmark, x_px, y_px, likelihood");

  struct Cell { double x, y, l; };
  std::map<int, std::map<long, std::array<std::optional<Cell>, 5>>> legs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error(ErrorCode::io, "landmark csv line " + std::to_string(r + 1) + " has the wrong cell count");
    const int leg = c_leg ? static_cast<int>(io::parse_number(row[*c_leg])) : 1;
    const long frame = static_cast<long>(io::parse_number(row[*c_frame]));
    legs[leg][frame][static_cast<std::size_t>(landmark_index(row[*c_lm]))] =
        Cell{io::parse_number(row[*c_x]), io::parse_number(row[*c_y]), io::parse_number(row[*c_l])};
  }
  std::vector<LandmarkTrace> out;
  for (const auto& [leg, frames] : legs) {
    LandmarkTrace tr;
    tr.frame_rate = frame_rate;
    const long first = frames.begin()->first;
    const long last = frames.rbegin()->first;
    for (long f = first; f <= last; ++f) {
      const auto it = frames.find(f);
      for (std::size_t k = 0; k < 5; ++k) {
        if (it != frames.end() && it->second[k]) {
          const Cell& c = *it->second[k];
          tr.landmarks[k].push_back({c.x, c.y, c.l});
        } else {
          tr.landmarks[k].push_back({0.0, 0.0, 0.0});
        }
      }
    }
    out.push_back(std::move(tr));
  }
  return out;
}

inline PoseRatioResult cmd_pose_ratios(const fs::path& input, double frame_rate, const PoseOptions& popt,
                                       const OutputOptions& opt) {
  const auto traces = parse_landmark_csv(io::read_file(input), frame_rate);
  const PoseRatioResult res = pose_segment_ratios(traces, popt);
  std::string csv = "trace,femur,tibia,metatarsus,tarsus\n";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    csv += std::to_string(i + 1);
    for (double v : res.rows[i]) csv += "," + io::format_number(v);
    csv += "\n";
  }
  detail::ArtifactWriter w(opt.out_dir);
  w.write("ratios.csv", csv);
  if (!res.warnings.empty()) {
    json warn = res.warnings;
    w.write("warnings.json", warn.dump(2) + "\n");
  }
  return res;
}

}  // namespace spiderweb
