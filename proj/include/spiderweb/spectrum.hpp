#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spiderweb/error.hpp"

namespace spiderweb {

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double f) const { return f >= lo && f <= hi; }
  friend bool operator==(const Band&, const Band&) = default;
};

enum class Taper { rectangular, hann };

struct Spectrum {
  std::vector<double> frequencies;  // k * sample_rate / N
  std::vector<double> amplitudes;   // single-sided
  double resolution = 0.0;          // sample_rate / N
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Real-input DFT, returning bins 0..N/2.
inline std::vector<std::complex<double>> real_dft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  double* in = fftw_alloc_real(x.size());
  fftw_complex* out = fftw_alloc_complex(x.size() / 2 + 1);
  fftw_plan plan;
  {
    // Planner calls are not thread-safe; execution is.
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  std::vector<std::complex<double>> bins(x.size() / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out[k][0], out[k][1]};
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return bins;
}

}  // namespace detail

/// Half-open sample range [first, last) covering times in [t_start, t_end).
inline std::pair<std::size_t, std::size_t> window_indices(std::size_t n_samples, double sample_rate,
                                                          double t_start, double t_end,
                                                          double t0 = 0.0) {
  require(t_end > t_start, ErrorCode::parameter, "spectrum window is empty");
  const double first = std::ceil((t_start - t0) * sample_rate - 1e-9);
  const double last = std::ceil((t_end - t0) * sample_rate - 1e-9);
  require(first >= 0.0 && last <= static_cast<double>(n_samples), ErrorCode::parameter,
          "spectrum window [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
              ") s lies outside the trace");
  require(last - first >= 2.0, ErrorCode::parameter, "spectrum window holds fewer than 2 samples");
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

/// Single-sided amplitude spectrum of an already-windowed segment:
/// A_0 = |X_0|/N, A_k = 2|X_k|/N for 0 < k < N/2, A_{N/2} = |X_{N/2}|/N.
inline Spectrum amplitude_spectrum(std::span<const double> segment, double sample_rate,
                                   Taper taper = Taper::rectangular) {
  require(segment.size() >= 2, ErrorCode::parameter, "spectrum needs at least 2 samples");
  const std::size_t n = segment.size();
  std::vector<double> x(segment.begin(), segment.end());
  double coherent_gain = 1.0;
  if (taper == Taper::hann) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(n));
      x[i] *= w;
      sum += w;
    }
    coherent_gain = sum / static_cast<double>(n);
  }
  const auto bins = detail::real_dft(x);
  Spectrum s;
  s.resolution = sample_rate / static_cast<double>(n);
  s.frequencies.resize(bins.size());
  s.amplitudes.resize(bins.size());
  const double scale = 1.0 / (static_cast<double>(n) * coherent_gain);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    s.frequencies[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    s.amplitudes[k] = (unpaired ? 1.0 : 2.0) * std::abs(bins[k]) * scale;
  }
  return s;
}

/// Spectrum of the samples falling in [t_start, t_end).
inline Spectrum amplitude_spectrum(std::span<const double> samples, double sample_rate,
                                   std::pair<double, double> window, double t0 = 0.0,
                                   Taper taper = Taper::rectangular) {
  const auto [first, last] = window_indices(samples.size(), sample_rate, window.first, window.second, t0);
  return amplitude_spectrum(samples.subspan(first, last - first), sample_rate, taper);
}

/// Mean square of the time signal recovered from a single-sided spectrum.
inline double spectrum_mean_square(const Spectrum& s, std::size_t n_samples) {
  double sum = 0.0;
  for (std::size_t k = 0; k < s.amplitudes.size(); ++k) {
    const bool unpaired = k == 0 || (n_samples % 2 == 0 && k == n_samples / 2);
    const double a = s.amplitudes[k];
    sum += unpaired ? a * a : 0.5 * a * a;
  }
  return sum;
}

// --- trial aggregation ------------------------------------------------------------------

struct TrialStats {
  std::vector<double> frequencies;
  std::vector<double> mean;
  std::vector<double> std;  // sample (n - 1) standard deviation; zero when n_trials < 2
  int n_trials = 0;

  bool std_defined() const { return n_trials >= 2; }
};

inline bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i]))) return false;
  return true;
}

/// Per-bin mean and sample standard deviation across trials.
inline TrialStats aggregate_trials(std::span<const Spectrum> spectra) {
  require(!spectra.empty(), ErrorCode::parameter, "aggregate_trials needs at least one spectrum");
  for (const auto& s : spectra)
    require(same_grid(s.frequencies, spectra[0].frequencies), ErrorCode::grid_mismatch,
            "spectra are on different frequency grids");
  TrialStats t;
  t.n_trials = static_cast<int>(spectra.size());
  t.frequencies = spectra[0].frequencies;
  const std::size_t bins = t.frequencies.size();
  t.mean.assign(bins, 0.0);
  t.std.assign(bins, 0.0);
  const double n = static_cast<double>(spectra.size());
  for (std::size_t k = 0; k < bins; ++k) {
    // Sort per bin so the result does not depend on trial order.
    std::vector<double> v;
    v.reserve(spectra.size());
    for (const auto& s : spectra) v.push_back(s.amplitudes[k]);
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double a : v) sum += a;
    const double m = sum / n;
    t.mean[k] = m;
    if (spectra.size() >= 2) {
      double ss = 0.0;
      for (double a : v) ss += (a - m) * (a - m);
      t.std[k] = std::sqrt(ss / (n - 1.0));
    }
  }
  return t;
}

// --- peaks ------------------------------------------------------------------------------

struct Peak {
  std::size_t bin = 0;
  double frequency = 0.0;
  double amplitude = 0.0;
  double prominence = 0.0;
};

struct PeakReport {
  std::vector<Peak> peaks;  // descending amplitude
  std::size_t dominant = 0;
  double min_prominence = 0.0;

  bool empty() const { return peaks.empty(); }
  const Peak& dominant_peak() const { return peaks.at(dominant); }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Topographic prominence of the local maximum at `i`: height above the higher of the
/// two lowest points reached before meeting higher ground on either side.
inline double peak_prominence(std::span<const double> a, std::size_t i) {
  double left_min = a[i];
  for (std::size_t j = i; j-- > 0;) {
    if (a[j] > a[i]) break;
    left_min = std::min(left_min, a[j]);
  }
  double right_min = a[i];
  for (std::size_t j = i + 1; j < a.size(); ++j) {
    if (a[j] > a[i]) break;
    right_min = std::min(right_min, a[j]);
  }
  return a[i] - std::max(left_min, right_min);
}

/// Default detection threshold: 3x the median amplitude inside the band.
inline double default_min_prominence(std::span<const double> freqs, std::span<const double> amps,
                                     const Band& band) {
  std::vector<double> in;
  for (std::size_t k = 0; k < freqs.size(); ++k)
    if (band.contains(freqs[k])) in.push_back(amps[k]);
  return 3.0 * median(std::move(in));
}

/// Local maxima inside `band` with prominence >= min_prominence (plateaus report their
/// middle bin), sorted by descending amplitude.
inline PeakReport find_spectral_peaks(std::span<const double> freqs, std::span<const double> amps,
                                      std::optional<double> min_prominence, const Band& band) {
  require(freqs.size() == amps.size(), ErrorCode::parameter, "frequency/amplitude size mismatch");
  PeakReport r;
  r.min_prominence = min_prominence.value_or(default_min_prominence(freqs, amps, band));
  const std::size_t n = amps.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (amps[i] > amps[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && amps[j + 1] == amps[i]) ++j;
      if (j + 1 < n && amps[j + 1] < amps[i]) {
        const std::size_t mid = (i + j) / 2;
        if (band.contains(freqs[mid])) {
          const double prom = peak_prominence(amps, mid);
          if (prom >= r.min_prominence && prom > 0.0)
            r.peaks.push_back({mid, freqs[mid], amps[mid], prom});
        }
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  std::stable_sort(r.peaks.begin(), r.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
  return r;
}

inline PeakReport find_spectral_peaks(const TrialStats& stats, std::optional<double> min_prominence,
                                      const Band& band) {
  return find_spectral_peaks(stats.frequencies, stats.mean, min_prominence, band);
}

// --- prey classification ----------------------------------------------------------------

struct ClassifyOptions {
  Band baseline_band{3.0, 5.0};
  Band prey_band{5.0, 6.0};
  Band search_band{1.0, 15.0};
  int min_legs = 5;
  std::optional<double> min_prominence;  // default: 3x median amplitude in the search band
  int min_separation_bins = 2;

  friend bool operator==(const ClassifyOptions&, const ClassifyOptions&) = default;
};

struct LegDetection {
  std::optional<Peak> baseline;
  std::optional<Peak> prey;
  PeakReport report;
  bool detected() const { return prey.has_value(); }
};

struct PreyClassification {
  bool present = false;
  int legs_detected = 0;
  std::vector<LegDetection> legs;
};

/// Baseline peak = largest peak in the baseline band (else the dominant peak); prey
/// peak = largest peak in the prey band at least `min_separation_bins` above it.
inline LegDetection detect_leg_peaks(const TrialStats& stats, const ClassifyOptions& opt) {
  LegDetection d;
  d.report = find_spectral_peaks(stats, opt.min_prominence, opt.search_band);
  for (const auto& p : d.report.peaks)
    if (opt.baseline_band.contains(p.frequency)) {
      d.baseline = p;
      break;
    }
  if (!d.baseline && !d.report.empty()) d.baseline = d.report.dominant_peak();
  if (!d.baseline) return d;
  for (const auto& p : d.report.peaks) {
    if (opt.prey_band.contains(p.frequency) &&
        p.bin >= d.baseline->bin + static_cast<std::size_t>(opt.min_separation_bins)) {
      d.prey = p;
      break;
    }
  }
  return d;
}

/// Largest peak anywhere in the search band at least `min_separation_bins` above the
/// baseline peak. Unlike `LegDetection::prey` it is not confined to the prey band.
inline std::optional<Peak> secondary_peak(const LegDetection& d, const ClassifyOptions& opt) {
  if (!d.baseline) return std::nullopt;
  for (const auto& p : d.report.peaks)
    if (p.bin >= d.baseline->bin + static_cast<std::size_t>(opt.min_separation_bins)) return p;
  return std::nullopt;
}

/// Prey present iff at least `min_legs` legs carry a distinct prey-band peak.
inline PreyClassification classify_prey(std::span<const TrialStats> per_leg,
                                        const ClassifyOptions& opt = {}) {
  require(per_leg.size() == 8, ErrorCode::parameter,
          "classify_prey needs 8 legs, got " + std::to_string(per_leg.size()));
  for (const auto& s : per_leg)
    require(same_grid(s.frequencies, per_leg[0].frequencies), ErrorCode::grid_mismatch,
            "leg spectra are on different grids");
  PreyClassification c;
  for (const auto& s : per_leg) {
    c.legs.push_back(detect_leg_peaks(s, opt));
    if (c.legs.back().detected()) ++c.legs_detected;
  }
  c.present = c.legs_detected >= opt.min_legs;
  return c;
}

}  // namespace spiderweb
