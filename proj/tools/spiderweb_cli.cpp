// spiderweb command-line entry point.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spiderweb/harness.hpp"

using namespace spiderweb;

namespace {

constexpr const char* kOutEnv = "SPIDERWEB_OUT_DIR";

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int jobs = 1;
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c, bool with_config = true) {
  if (with_config) app->add_option("--config", c.config, "experiment config (JSON); frozen default when omitted");
  app->add_option("--out", c.out, std::string("output directory (else $") + kOutEnv + ", else config output_dir)");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--format", c.format, "table format")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? paper_default_config() : load_config(c.config);
  if (c.seed) cfg.sim.seed = *c.seed;
  if (c.trials) cfg.trials = *c.trials;
  validate(cfg);
  return cfg;
}

OutputOptions resolve_output(const Common& c, const std::string& config_dir) {
  OutputOptions o;
  if (!c.out.empty()) o.out_dir = c.out;
  else if (const char* env = std::getenv(kOutEnv); env && *env) o.out_dir = env;
  else o.out_dir = config_dir;
  o.jobs = c.jobs;
  o.format = c.format == "json" ? TableFormat::json : TableFormat::csv;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spider-robot / web / prey vibration simulator"};
  app.require_subcommand(1);

  Common run_opt, web_opt, cmp_opt, sweep_opt, plot_opt, pose_opt;

  auto* run = app.add_subcommand("run", "settle, run N crouch trials, analyze, write artifacts");
  add_common(run, run_opt);
  run->add_option("--seed", run_opt.seed, "base seed; trial i uses seed + i");
  run->add_option("--trials", run_opt.trials, "number of trials")->check(CLI::PositiveNumber);

  auto* web = app.add_subcommand("build-web", "build the web (+ prey) and assembled system graphs");
  add_common(web, web_opt);

  std::string run_a, run_b;
  auto* cmp = app.add_subcommand("compare", "compare a no-prey run with a prey run");
  add_common(cmp, cmp_opt, false);
  cmp->add_option("no_prey_run", run_a, "run directory without prey")->required();
  cmp->add_option("prey_run", run_b, "run directory with prey")->required();

  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "one experiment per parameter value");
  add_common(sweep, sweep_opt);
  sweep->add_option("--seed", sweep_opt.seed, "base seed");
  sweep->add_option("--trials", sweep_opt.trials, "trials per run")->check(CLI::PositiveNumber);
  sweep->add_option("parameter", sweep_param, "prey_ring | prey_mass | foot_ring | motor_rotation")->required();
  sweep->add_option("values", sweep_values, "values to sweep")->required();

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "SVG figures for a run or comparison directory");
  add_common(plot, plot_opt, false);
  plot->add_option("dir", plot_dir, "run or comparison directory")->required();

  std::string pose_input;
  double frame_rate = 100.0;
  PoseOptions pose;
  auto* pr = app.add_subcommand("pose-ratios", "segment/tarsus length ratios from tracked landmarks");
  add_common(pr, pose_opt, false);
  pr->add_option("input", pose_input, "landmark CSV (frame, landmark, x_px, y_px, likelihood[, leg])")->required();
  pr->add_option("--frame-rate", frame_rate, "frames per second")->check(CLI::PositiveNumber);
  pr->add_option("--likelihood-min", pose.likelihood_min, "drop points below this likelihood");
  pr->add_option("--cutoff", pose.filter_cutoff, "low-pass cutoff, Hz");
  pr->add_option("--max-gap", pose.max_gap, "longest gap to interpolate, frames");

  CLI11_PARSE(app, argc, argv);

  std::optional<fs::path> out_dir;
  for (const Common* c : {&run_opt, &web_opt, &sweep_opt})
    if (!c->out.empty()) out_dir = c->out;
  if (const char* env = std::getenv(kOutEnv); !out_dir && env && *env) out_dir = env;
  try {
    if (*run) {
      const auto cfg = resolve_config(run_opt);
      const auto o = resolve_output(run_opt, cfg.output_dir);
      out_dir = o.out_dir;
      const auto m = cmd_run(cfg, o);
      const auto summary = read_json(o.out_dir / "summary.json");
      const auto& c = summary.at("classification");
      std::cout << "run: " << cfg.trials << " trials -> " << o.out_dir.string() << "\n"
                << "baseline " << c.at("baseline_frequency_hz").dump() << " Hz, prey peak "
                << c.at("prey_peak_frequency_hz").dump() << " Hz, decision " << c.at("decision").get<std::string>()
                << " (" << c.at("legs_detected").get<int>() << "/8 legs)\n"
                << "files: " << m.at("files").size() << "\n";
    } else if (*web) {
      const auto cfg = resolve_config(web_opt);
      const auto o = resolve_output(web_opt, cfg.output_dir);
      out_dir = o.out_dir;
      const auto s = cmd_build_web(cfg, o);
      std::cout << "web: " << s.at("web_nodes") << " nodes, " << s.at("web_edges") << " edges; system "
                << s.at("system_nodes") << " nodes, hash " << s.at("system_hash").get<std::string>() << "\n";
    } else if (*cmp) {
      const auto o = resolve_output(cmp_opt, "compare");
      out_dir = o.out_dir;
      const auto s = cmd_compare(run_a, run_b, o);
      std::cout << "decision: " << s.at("decision_a").at("decision").get<std::string>() << " -> "
                << s.at("decision_b").at("decision").get<std::string>() << "\n";
      for (const auto& l : s.at("legs"))
        std::cout << "  leg " << l.at("leg") << " prey-band excess " << l.at("excess") << "\n";
    } else if (*sweep) {
      const auto cfg = resolve_config(sweep_opt);
      const auto o = resolve_output(sweep_opt, cfg.output_dir);
      out_dir = o.out_dir;
      const auto s = cmd_sweep(cfg, parse_sweep_parameter(sweep_param), sweep_values, o);
      for (const auto& r : s.at("rows")) {
        std::cout << sweep_param << "=" << r.at("value") << ": ";
        if (r.at("status") == "ok")
          std::cout << "baseline " << r.at("baseline_frequency_hz") << " Hz, prey peak "
                    << r.at("prey_peak_frequency_hz") << " Hz, " << r.at("decision").get<std::string>() << "\n";
        else
          std::cout << r.at("error").at("error").get<std::string>() << "\n";
      }
    } else if (*plot) {
      const auto o = resolve_output(plot_opt, plot_dir);
      out_dir = o.out_dir;
      for (const auto& f : cmd_plot(plot_dir, o.out_dir)) std::cout << (o.out_dir / f).string() << "\n";
    } else if (*pr) {
      const auto o = resolve_output(pose_opt, "pose");
      out_dir = o.out_dir;
      const auto res = cmd_pose_ratios(pose_input, frame_rate, pose, o);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      for (std::size_t i = 0; i < res.rows.size(); ++i) {
        std::cout << "trace " << i + 1 << ":";
        for (double v : res.rows[i]) std::cout << " " << v;
        std::cout << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (out_dir) {
      try {
        io::write_file(*out_dir / "error.json", error_record(e).dump(2) + "\n");
      } catch (const Error&) {
      }
    }
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
