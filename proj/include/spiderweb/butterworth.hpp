#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spiderweb/error.hpp"

namespace spiderweb {

/// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
  bool first_order() const { return b2 == 0.0 && a2 == 0.0; }
};

using SosFilter = std::vector<Biquad>;

/// Digital Butterworth low-pass of `order` poles by bilinear transform with
/// frequency prewarping, so |H(cutoff)|^2 = 1/2 exactly.
inline SosFilter butterworth_lowpass(int order, double cutoff, double sample_rate) {
  require(order >= 1, ErrorCode::parameter, "Butterworth order must be >= 1");
  require(cutoff > 0.0 && cutoff < 0.5 * sample_rate, ErrorCode::parameter,
          "cutoff " + std::to_string(cutoff) + " Hz must lie in (0, Nyquist = " +
              std::to_string(0.5 * sample_rate) + " Hz)");
  const double fs2 = 2.0 * sample_rate;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff / sample_rate);
  SosFilter sos;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const std::complex<double> s = warped * std::polar(1.0, theta);
    const std::complex<double> z = (fs2 + s) / (fs2 - s);
    Biquad q;
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    const double g = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = g;
    q.b1 = 2.0 * g;
    q.b2 = g;
    sos.push_back(q);
  }
  if (order % 2 == 1) {
    const double s = -warped;
    const double z = (fs2 + s) / (fs2 - s);
    Biquad q;
    q.a1 = -z;
    const double g = (1.0 - z) / 2.0;
    q.b0 = g;
    q.b1 = g;
    sos.push_back(q);
  }
  return sos;
}

/// |H(f)|^2 of the single-pass digital Butterworth above.
inline double butterworth_power_response(int order, double f, double cutoff, double sample_rate) {
  const double ratio = std::tan(std::numbers::pi * f / sample_rate) /
                       std::tan(std::numbers::pi * cutoff / sample_rate);
  return 1.0 / (1.0 + std::pow(ratio, 2.0 * order));
}

/// Transposed direct-form II cascade. `state` holds two values per section.
inline void sos_filter_inplace(const SosFilter& sos, std::span<double> x, std::vector<double>& state) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    double z0 = state[2 * s];
    double z1 = state[2 * s + 1];
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z0;
      z0 = q.b1 * in - q.a1 * out + z1;
      z1 = q.b2 * in - q.a2 * out;
      v = out;
    }
    state[2 * s] = z0;
    state[2 * s + 1] = z1;
  }
}

/// Section states that make the cascade's output steady for a constant unit input.
inline std::vector<double> sos_steady_state(const SosFilter& sos) {
  std::vector<double> zi(2 * sos.size());
  double level = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    const double out = q.dc_gain() * level;
    zi[2 * s + 1] = q.b2 * level - q.a2 * out;
    zi[2 * s] = out - q.b0 * level;
    level = out;
  }
  return zi;
}

/// Edge padding used by the forward-backward pass.
inline std::size_t default_padlen(const SosFilter& sos) {
  std::size_t first_order = 0;
  for (const auto& q : sos) first_order += q.first_order() ? 1 : 0;
  return 3 * (2 * sos.size() + 1 - first_order);
}

/// Forward-backward application with odd-reflection padding and steady-state
/// initial conditions. The result has zero phase and squared magnitude response.
inline std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x) {
  if (x.empty()) return {};
  const std::size_t n = x.size();
  const std::size_t pad = std::min(default_padlen(sos), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const std::vector<double> zi = sos_steady_state(sos);
  std::vector<double> state(zi.size());
  const double x0 = ext.front();
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * x0;
  sos_filter_inplace(sos, ext, state);

  std::reverse(ext.begin(), ext.end());
  const double y0 = ext.front();
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * y0;
  sos_filter_inplace(sos, ext, state);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

/// Zero-phase low-pass of total order `order` (even): a Butterworth of order/2
/// applied forward then backward.
inline std::vector<double> lowpass_zero_phase(std::span<const double> samples, double sample_rate,
                                              double cutoff, int order) {
  require(order >= 2 && order % 2 == 0, ErrorCode::parameter,
          "zero-phase filter order must be even and >= 2");
  return filtfilt(butterworth_lowpass(order / 2, cutoff, sample_rate), samples);
}

}  // namespace spiderweb
