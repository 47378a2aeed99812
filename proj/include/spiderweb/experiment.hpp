#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "spiderweb/config.hpp"
#include "spiderweb/io.hpp"
#include "spiderweb/signal_analysis.hpp"
#include "spiderweb/system.hpp"

namespace spiderweb {

/// Runs fn(0..n-1) on up to `jobs` threads. Every index runs to completion; the
/// exception of the lowest failing index is rethrown, so errors do not depend on timing.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct TrialOutput {
  std::uint64_t seed = 0;
  std::vector<AccelTrace> traces;  // per leg
  std::vector<Spectrum> spectra;   // per leg
};

using CrouchWindow = std::optional<std::pair<double, double>>;

struct ExperimentResult {
  ExperimentConfig config;
  std::string system_hash;
  std::vector<TrialOutput> trials;
  std::vector<TrialStats> stats;  // per leg, over trials
  PreyClassification classification;
  std::array<CrouchWindow, 8> crouch_windows;  // first trial
  std::array<DecayReport, 8> decay;            // first trial, from the end of actuation
  double settle_seconds = 0.0;
  double trial_seconds = 0.0;

  bool any_transient() const {
    return std::any_of(crouch_windows.begin(), crouch_windows.end(),
                       [](const CrouchWindow& w) { return w.has_value(); });
  }
};

/// Zero-phase low-pass then the single-sided spectrum over the analysis window.
inline Spectrum leg_spectrum(const AccelTrace& trace, const AnalysisOptions& a) {
  const auto filtered = lowpass_zero_phase(trace.samples, trace.sample_rate, a.filter_cutoff, a.filter_order);
  return amplitude_spectrum(filtered, trace.sample_rate, {a.window_start, a.window_end}, trace.t0, a.taper);
}

inline AssembledSystem build_system(const ExperimentConfig& cfg) {
  WebGraph web = build_web(cfg.web);
  if (cfg.prey) web = attach_prey(std::move(web), *cfg.prey);
  return assemble_system(web, cfg.spider);
}

inline std::string system_hash(const AssembledSystem& sys) {
  return io::git_blob_sha1(to_json(sys).dump());
}

/// Per-leg analysis of finished trials: stats, classification and crouch windows.
inline void analyze(ExperimentResult& r) {
  const auto& a = r.config.analysis;
  r.stats.clear();
  for (std::size_t leg = 0; leg < 8; ++leg) {
    std::vector<Spectrum> per_trial;
    for (const auto& t : r.trials) per_trial.push_back(t.spectra[leg]);
    r.stats.push_back(aggregate_trials(per_trial));
  }
  r.classification = classify_prey(r.stats, a.classify);
  CrouchWindowOptions cw;
  cw.filter_cutoff = a.filter_cutoff;
  cw.filter_order = a.filter_order;
  for (std::size_t leg = 0; leg < 8; ++leg) {
    try {
      r.crouch_windows[leg] = detect_crouch_window(r.trials.front().traces[leg], a.transient_sigma, cw);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_transient) throw;
      r.crouch_windows[leg] = std::nullopt;
    }
  }
  DecayOptions d;
  d.filter_cutoff = a.filter_cutoff;
  d.filter_order = a.filter_order;
  const double release = r.config.motor.start_time + r.config.motor.duration();
  for (std::size_t leg = 0; leg < 8; ++leg) r.decay[leg] = rms_decay(r.trials.front().traces[leg], release, d);
}

/// Build, settle once, run `trials` crouch-recovery cycles (trial i seeded with seed + i)
/// and analyze. Results are independent of `jobs`.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  validate(cfg);
  using clock = std::chrono::steady_clock;
  ExperimentResult r;
  r.config = cfg;
  const AssembledSystem sys = build_system(cfg);
  r.system_hash = system_hash(sys);

  const auto t0 = clock::now();
  const SystemState settled = settle(sys.mech, cfg.sim, cfg.sim.settle_tolerance);
  const auto t1 = clock::now();

  r.trials.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(r.trials.size(), jobs, [&](std::size_t i) {
    TrialOutput& out = r.trials[i];
    out.seed = cfg.sim.seed + i;
    out.traces = run_trial(settled, sys.mech, cfg.motor, cfg.sim, out.seed);
    for (const auto& tr : out.traces) out.spectra.push_back(leg_spectrum(tr, cfg.analysis));
  });
  const auto t2 = clock::now();
  r.settle_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.trial_seconds = std::chrono::duration<double>(t2 - t1).count();
  analyze(r);
  return r;
}

// --- summaries --------------------------------------------------------------------------

inline std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  return median(std::move(v));
}

/// Median over legs of the baseline peak frequency.
inline std::optional<double> baseline_frequency(const PreyClassification& c) {
  std::vector<double> f;
  for (const auto& leg : c.legs)
    if (leg.baseline) f.push_back(leg.baseline->frequency);
  return median_of(std::move(f));
}

/// Median over legs of the secondary (prey) peak frequency, among legs that show one.
inline std::optional<double> prey_peak_frequency(const PreyClassification& c, const ClassifyOptions& opt) {
  std::vector<double> f;
  for (const auto& leg : c.legs)
    if (auto p = secondary_peak(leg, opt)) f.push_back(p->frequency);
  return median_of(std::move(f));
}

/// Mean-square content of the prey band: sum of A_k^2 / 2 over bins in the band.
inline double band_power(const std::vector<double>& freqs, const std::vector<double>& amps, const Band& band) {
  double p = 0.0;
  for (std::size_t k = 0; k < freqs.size(); ++k)
    if (band.contains(freqs[k])) p += 0.5 * amps[k] * amps[k];
  return p;
}

}  // namespace spiderweb
