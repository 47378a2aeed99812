#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spiderweb/butterworth.hpp"
#include "spiderweb/dynamics.hpp"
#include "spiderweb/error.hpp"

namespace spiderweb {

struct CrouchWindowOptions {
  double filter_cutoff = 25.0;
  int filter_order = 4;
  double baseline_duration = 0.5;  // s of pre-event signal used for mean and noise std
  double hold_duration = 0.25;     // s the signal must stay inside the band to end the window
  double min_threshold = 1e-6;     // m/s^2 floor so a noiseless baseline still has a band
};

/// Window of the first downward transient. t0: first sample where the low-passed signal
/// falls below baseline - threshold. t1: first later sample after which the signal stays
/// within +-threshold of baseline for `hold_duration`; the trace end if it never does.
/// With several transients the window is anchored at the earliest.
inline std::pair<double, double> detect_crouch_window(const AccelTrace& trace, double threshold_sigma,
                                                      const CrouchWindowOptions& opt = {}) {
  require(!trace.samples.empty(), ErrorCode::parameter, "detect_crouch_window: empty trace");
  require(threshold_sigma > 0.0, ErrorCode::parameter, "threshold_sigma must be positive");
  const double fs = trace.sample_rate;
  const std::size_t n = trace.samples.size();
  std::vector<double> y = trace.samples;
  if (opt.filter_cutoff < 0.5 * fs && n > 1)
    y = lowpass_zero_phase(trace.samples, fs, opt.filter_cutoff, opt.filter_order);

  const std::size_t nb = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(opt.baseline_duration * fs)), 1, n);
  double mean = 0.0;
  for (std::size_t i = 0; i < nb; ++i) mean += y[i];
  mean /= static_cast<double>(nb);
  double var = 0.0;
  for (std::size_t i = 0; i < nb; ++i) var += (y[i] - mean) * (y[i] - mean);
  const double sigma = nb > 1 ? std::sqrt(var / static_cast<double>(nb - 1)) : 0.0;
  const double threshold = std::max(threshold_sigma * sigma, opt.min_threshold);

  std::size_t onset = n;
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] - mean < -threshold) {
      onset = i;
      break;
    }
  if (onset == n)
    throw Error(ErrorCode::no_transient,
                "leg " + std::to_string(trace.leg_id) + ": no downward excursion beyond " +
                    std::to_string(threshold) + " m/s^2");

  const std::size_t hold = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.hold_duration * fs)));
  std::size_t end = n;
  std::size_t run = 0;
  for (std::size_t i = onset + 1; i < n; ++i) {
    if (std::abs(y[i] - mean) <= threshold) {
      if (++run >= hold) {
        end = i + 1 - run;
        break;
      }
    } else {
      run = 0;
    }
  }
  const double t0 = trace.time(onset);
  const double t1 = end >= n ? trace.time(n - 1) : trace.time(end);
  return {t0, t1};
}

struct DecayOptions {
  double filter_cutoff = 25.0;
  int filter_order = 4;
  double rms_window = 0.2;  // s, trailing-free sliding window
  double fraction = 0.1;    // decayed once the RMS drops below this share of its peak
};

struct DecayReport {
  double peak_time = 0.0;  // start of the window with the largest RMS
  double peak_rms = 0.0;
  std::optional<double> decay_time;  // s after peak_time; empty if it never decays
};

/// Sliding-window RMS of the low-passed trace from `t_start` on: where it peaks and how
/// long after the peak it first falls below `fraction` of that peak.
inline DecayReport rms_decay(const AccelTrace& trace, double t_start, const DecayOptions& opt = {}) {
  const double fs = trace.sample_rate;
  const std::size_t w = static_cast<std::size_t>(std::llround(opt.rms_window * fs));
  require(w >= 1 && trace.samples.size() > w, ErrorCode::insufficient_data, "rms_decay: trace shorter than the window");
  std::vector<double> y = trace.samples;
  if (opt.filter_cutoff < 0.5 * fs) y = lowpass_zero_phase(trace.samples, fs, opt.filter_cutoff, opt.filter_order);

  const double first = std::max(0.0, std::ceil((t_start - trace.t0) * fs - 1e-9));
  const std::size_t i0 = static_cast<std::size_t>(first);
  const std::size_t last = y.size() - w;
  require(i0 <= last, ErrorCode::insufficient_data, "rms_decay: start lies past the trace end");

  // running sum of squares over [i, i + w)
  std::vector<double> rms(last - i0 + 1);
  double acc = 0.0;
  for (std::size_t k = i0; k < i0 + w; ++k) acc += y[k] * y[k];
  for (std::size_t i = i0;; ++i) {
    rms[i - i0] = std::sqrt(std::max(acc, 0.0) / static_cast<double>(w));
    if (i == last) break;
    acc += y[i + w] * y[i + w] - y[i] * y[i];
  }
  const std::size_t ip = static_cast<std::size_t>(std::max_element(rms.begin(), rms.end()) - rms.begin());
  DecayReport r;
  r.peak_rms = rms[ip];
  r.peak_time = trace.time(i0 + ip);
  for (std::size_t k = ip; k < rms.size(); ++k)
    if (rms[k] < opt.fraction * r.peak_rms) {
      r.decay_time = static_cast<double>(k - ip) / fs;
      break;
    }
  return r;
}

}  // namespace spiderweb
