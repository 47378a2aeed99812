#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spiderweb/butterworth.hpp"
#include "spiderweb/error.hpp"
#include "spiderweb/spectrum.hpp"

namespace spiderweb {

enum class Landmark { coxa = 0, femur = 1, tibia = 2, metatarsus = 3, tarsus = 4 };
inline constexpr std::array<const char*, 5> kLandmarkNames{"coxa", "femur", "tibia", "metatarsus",
                                                          "tarsus"};

struct LandmarkSample {
  double x = 0.0;
  double y = 0.0;
  double likelihood = 1.0;
};

/// Per-frame image positions of the five leg landmarks, all the same length.
struct LandmarkTrace {
  double frame_rate = 100.0;
  std::array<std::vector<LandmarkSample>, 5> landmarks;

  std::size_t frames() const { return landmarks[0].size(); }
};

struct PoseOptions {
  double likelihood_min = 0.95;
  double filter_cutoff = 60.0;
  int filter_order = 4;
  int max_gap = 5;
  int min_valid_frames = 10;
};

struct PoseRatioResult {
  std::vector<std::array<double, 4>> rows;     // femur, tibia, metatarsus, tarsus over tarsus
  std::vector<std::array<double, 4>> lengths;  // median segment lengths, px
  std::vector<std::string> warnings;
};

namespace detail {

// NaN-marked series; fills interior gaps of at most max_gap frames linearly.
inline void fill_short_gaps(std::vector<double>& v, int max_gap) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  while (i < n) {
    if (!std::isnan(v[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && std::isnan(v[j])) ++j;
    const std::size_t gap = j - i;
    if (i > 0 && j < n && gap <= static_cast<std::size_t>(max_gap)) {
      const double a = v[i - 1];
      const double b = v[j];
      for (std::size_t k = i; k < j; ++k) {
        const double t = static_cast<double>(k - i + 1) / static_cast<double>(gap + 1);
        v[k] = a + t * (b - a);
      }
    }
    i = j;
  }
}

// Filters each contiguous valid run independently; runs too short to pad stay raw.
inline void filter_valid_runs(std::vector<double>& v, const SosFilter& sos) {
  const std::size_t n = v.size();
  const std::size_t pad = default_padlen(sos);
  std::size_t i = 0;
  while (i < n) {
    if (std::isnan(v[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !std::isnan(v[j])) ++j;
    if (j - i > pad) {
      const auto out = filtfilt(sos, std::span<const double>(v).subspan(i, j - i));
      std::copy(out.begin(), out.end(), v.begin() + static_cast<std::ptrdiff_t>(i));
    }
    i = j;
  }
}

}  // namespace detail

/// Segment length ratios per leg: drop low-likelihood points, bridge short gaps, low-pass
/// each coordinate with zero phase, take per-frame adjacent-landmark distances, reduce by
/// median and normalize by the tarsus.
inline PoseRatioResult pose_segment_ratios(std::span<const LandmarkTrace> traces,
                                           const PoseOptions& opt = {}) {
  require(!traces.empty(), ErrorCode::parameter, "pose_segment_ratios: no traces");
  require(opt.likelihood_min > 0.0 && opt.likelihood_min < 1.0, ErrorCode::parameter,
          "likelihood_min must lie in (0, 1)");
  require(opt.max_gap >= 0 && opt.min_valid_frames >= 1, ErrorCode::parameter,
          "max_gap must be >= 0 and min_valid_frames >= 1");
  PoseRatioResult result;
  for (std::size_t leg = 0; leg < traces.size(); ++leg) {
    const LandmarkTrace& tr = traces[leg];
    const std::size_t n = tr.frames();
    for (const auto& lm : tr.landmarks)
      require(lm.size() == n, ErrorCode::parameter, "landmark series have unequal lengths");
    require(tr.frame_rate > 0.0, ErrorCode::parameter, "frame_rate must be positive");

    double cutoff = opt.filter_cutoff;
    const double ceiling = 0.45 * tr.frame_rate;
    if (cutoff >= ceiling) {
      result.warnings.push_back("trace " + std::to_string(leg + 1) + ": filter cutoff " +
                                std::to_string(opt.filter_cutoff) + " Hz clamped to " +
                                std::to_string(ceiling) + " Hz (below Nyquist)");
      cutoff = ceiling;
    }
    require(opt.filter_order >= 2 && opt.filter_order % 2 == 0, ErrorCode::parameter,
            "pose filter order must be even and >= 2");
    const SosFilter sos = butterworth_lowpass(opt.filter_order / 2, cutoff, tr.frame_rate);

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::array<std::vector<double>, 5> xs, ys;
    for (std::size_t l = 0; l < 5; ++l) {
      xs[l].resize(n);
      ys[l].resize(n);
      for (std::size_t f = 0; f < n; ++f) {
        const auto& s = tr.landmarks[l][f];
        const bool ok = s.likelihood >= opt.likelihood_min && std::isfinite(s.x) && std::isfinite(s.y);
        xs[l][f] = ok ? s.x : nan;
        ys[l][f] = ok ? s.y : nan;
      }
      detail::fill_short_gaps(xs[l], opt.max_gap);
      detail::fill_short_gaps(ys[l], opt.max_gap);
      detail::filter_valid_runs(xs[l], sos);
      detail::filter_valid_runs(ys[l], sos);
    }

    std::array<double, 4> med{};
    for (std::size_t s = 0; s < 4; ++s) {
      std::vector<double> lengths;
      for (std::size_t f = 0; f < n; ++f) {
        const double dx = xs[s + 1][f] - xs[s][f];
        const double dy = ys[s + 1][f] - ys[s][f];
        const double d = std::hypot(dx, dy);
        if (std::isfinite(d)) lengths.push_back(d);
      }
      if (static_cast<int>(lengths.size()) < opt.min_valid_frames)
        throw Error(ErrorCode::insufficient_data,
                    "trace " + std::to_string(leg + 1) + ": segment " + kLandmarkNames[s] + "-" +
                        kLandmarkNames[s + 1] + " has " + std::to_string(lengths.size()) +
                        " valid frames, need " + std::to_string(opt.min_valid_frames));
      med[s] = median(std::move(lengths));
    }
    require(med[3] > 0.0, ErrorCode::insufficient_data, "tarsus median length is zero");
    result.lengths.push_back(med);
    result.rows.push_back({med[0] / med[3], med[1] / med[3], med[2] / med[3], 1.0});
  }
  return result;
}

}  // namespace spiderweb
