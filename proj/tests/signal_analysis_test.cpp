#include <gtest/gtest.h>

#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "spiderweb/io.hpp"
#include "spiderweb/signal_analysis.hpp"

using namespace spiderweb;

namespace {

constexpr double kPi = std::numbers::pi;

// |H(e^{jw})|^2 straight from the section coefficients.
double sos_power(const SosFilter& sos, double f, double fs) {
  const std::complex<double> z = std::polar(1.0, -2.0 * kPi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * z + q.b2 * z * z) / (1.0 + q.a1 * z + q.a2 * z * z);
  return std::norm(h);
}

// Bilinear-transform Butterworth with prewarping.
double analytic_power(int order, double f, double fc, double fs) {
  const double r = std::tan(kPi * f / fs) / std::tan(kPi * fc / fs);
  return 1.0 / (1.0 + std::pow(r, 2 * order));
}

std::vector<double> tone(std::size_t n, double f, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs + phase);
  return x;
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

TrialStats stats_from(const std::vector<double>& freqs, const std::vector<double>& amps) {
  TrialStats t;
  t.frequencies = freqs;
  t.mean = amps;
  t.std.assign(amps.size(), 0.0);
  t.n_trials = 1;
  return t;
}

// Spectrum on a 0.1 Hz grid: flat floor plus Gaussian bumps.
TrialStats synthetic_leg(std::vector<std::pair<double, double>> bumps) {
  std::vector<double> f, a;
  for (int k = 0; k <= 250; ++k) {
    f.push_back(0.1 * k);
    double v = 0.01;
    for (auto [fc, h] : bumps) v += h * std::exp(-0.5 * std::pow((0.1 * k - fc) / 0.15, 2));
    a.push_back(v);
  }
  return stats_from(f, a);
}

}  // namespace

// --- Butterworth ----------------------------------------------------------------------

TEST(Butterworth, ResponseMatchesAnalyticForm) {
  for (int order : {1, 2, 3, 4})
    for (auto [fc, fs] : {std::pair{25.0, 500.0}, std::pair{45.0, 100.0}, std::pair{60.0, 200.0}}) {
      const auto sos = butterworth_lowpass(order, fc, fs);
      for (double f = 0.0; f < 0.5 * fs; f += fs / 97.0)
        EXPECT_NEAR(sos_power(sos, f, fs), analytic_power(order, f, fc, fs), 1e-10) << order << " " << f;
      EXPECT_NEAR(sos_power(sos, fc, fs), 0.5, 1e-12);
      EXPECT_NEAR(butterworth_power_response(order, fc, fc, fs), 0.5, 1e-12);
    }
}

TEST(Butterworth, ZeroPhaseGainAtCutoffIsHalf) {
  for (auto [fc, fs] : {std::pair{25.0, 500.0}, std::pair{45.0, 100.0}}) {
    const auto x = tone(20000, fc, fs);
    const auto y = lowpass_zero_phase(x, fs, fc, 4);
    const std::span<const double> mid(y.data() + 5000, 10000);
    const std::span<const double> xin(x.data() + 5000, 10000);
    EXPECT_NEAR(rms(mid) / rms(xin), 0.5, 0.005);
  }
}

TEST(Butterworth, PassbandHasNoLag) {
  const double fs = 500.0, fc = 25.0;
  const auto x = tone(5000, fc / 5.0, fs, 1.0, 0.3);
  const auto y = lowpass_zero_phase(x, fs, fc, 4);
  int best = 0;
  double best_c = -INFINITY;
  for (int lag = -20; lag <= 20; ++lag) {
    double c = 0.0;
    for (int i = 1000; i < 4000; ++i) c += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
    if (c > best_c) {
      best_c = c;
      best = lag;
    }
  }
  EXPECT_EQ(best, 0);
}

TEST(Butterworth, MatchesScipyGolden) {
  const io::Table t = io::parse_csv(io::read_file(SPIDERWEB_TEST_DATA "/filtfilt_golden.csv"));
  const auto& x = t.columns[t.column("input")];
  const auto a = filtfilt(butterworth_lowpass(2, 25.0, 500.0), x);
  const auto b = filtfilt(butterworth_lowpass(3, 45.0, 100.0), x);
  const auto& ga = t.columns[t.column("butter2_25_at_500")];
  const auto& gb = t.columns[t.column("butter3_45_at_100")];
  ASSERT_EQ(a.size(), ga.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], ga[i], 1e-10) << i;
    EXPECT_NEAR(b[i], gb[i], 1e-10) << i;
  }
}

TEST(Butterworth, ConstantPassesUnchanged) {
  const std::vector<double> x(300, 2.5);
  for (double v : lowpass_zero_phase(x, 500.0, 25.0, 4)) EXPECT_NEAR(v, 2.5, 1e-12);
  EXPECT_THROW(lowpass_zero_phase(x, 500.0, 25.0, 3), Error);
}

// --- spectrum -------------------------------------------------------------------------

TEST(Spectrum, BinAlignedSinusoid) {
  const std::size_t n = 5350;
  const double fs = 500.0;
  const std::size_t bin = 41;
  const auto x = tone(n, static_cast<double>(bin) * fs / static_cast<double>(n), fs, 1.0, 0.7);
  const Spectrum s = amplitude_spectrum(x, fs);
  ASSERT_EQ(s.amplitudes.size(), n / 2 + 1);
  EXPECT_NEAR(s.resolution, fs / static_cast<double>(n), 1e-15);
  for (std::size_t k = 0; k < s.amplitudes.size(); ++k)
    EXPECT_NEAR(s.amplitudes[k], k == bin ? 1.0 : 0.0, 1e-9) << k;
}

TEST(Spectrum, MatchesNaiveDft) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (std::size_t n : {7u, 64u, 101u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    const Spectrum s = amplitude_spectrum(x, 100.0);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += x[i] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n));
      const double scale = (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
      EXPECT_NEAR(s.amplitudes[k], scale * std::abs(acc) / static_cast<double>(n), 1e-12);
    }
  }
}

TEST(Spectrum, ParsevalOnRandomSignals) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.3, 2.0);
  for (std::size_t n : {1000u, 1001u, 5350u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(n);
    const Spectrum s = amplitude_spectrum(x, 500.0);
    EXPECT_NEAR(spectrum_mean_square(s, n), ms, 1e-9 * ms);
  }
}

TEST(Spectrum, WindowSelectsHalfOpenRange) {
  std::vector<double> x(6000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto [a, b] = window_indices(x.size(), 500.0, 0.3, 11.0, 0.0);
  EXPECT_EQ(a, 150u);
  EXPECT_EQ(b, 5500u);
  const Spectrum s = amplitude_spectrum(x, 500.0, {0.3, 11.0});
  EXPECT_NEAR(s.resolution, 500.0 / 5350.0, 1e-15);
  EXPECT_THROW(amplitude_spectrum(std::span<const double>(x.data(), 1), 500.0), Error);
}

TEST(Spectrum, HannKeepsBinAmplitude) {
  const std::size_t n = 1000;
  const auto x = tone(n, 50.0, 500.0);
  const Spectrum s = amplitude_spectrum(x, 500.0, Taper::hann);
  EXPECT_NEAR(s.amplitudes[100], 1.0, 1e-9);
}

TEST(Aggregate, MeanAndSampleStd) {
  Spectrum a{{0, 1, 2}, {1, 2, 3}, 1.0}, b{{0, 1, 2}, {3, 2, 1}, 1.0}, c{{0, 1, 2}, {2, 2, 2}, 1.0};
  const std::vector<Spectrum> all{a, b, c};
  const TrialStats t = aggregate_trials(all);
  EXPECT_EQ(t.n_trials, 3);
  EXPECT_TRUE(t.std_defined());
  EXPECT_NEAR(t.mean[0], 2.0, 1e-15);
  EXPECT_NEAR(t.std[0], 1.0, 1e-15);
  EXPECT_NEAR(t.std[1], 0.0, 1e-15);
  const std::vector<Spectrum> one{a};
  EXPECT_FALSE(aggregate_trials(one).std_defined());
  EXPECT_EQ(aggregate_trials(one).std, std::vector<double>(3, 0.0));
  Spectrum d{{0, 1.5, 2}, {1, 1, 1}, 1.0};
  const std::vector<Spectrum> bad{a, d};
  try {
    aggregate_trials(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::grid_mismatch);
    EXPECT_EQ(exit_code(e.code()), 4);
  }
}

// --- peaks ----------------------------------------------------------------------------

TEST(Peaks, ProminenceByHand) {
  //                 0  1  2  3  4  5  6  7  8
  const std::vector<double> a{0, 5, 1, 3, 2, 8, 0, 4, 0};
  EXPECT_DOUBLE_EQ(peak_prominence(a, 5), 8.0);
  EXPECT_DOUBLE_EQ(peak_prominence(a, 1), 4.0);
  EXPECT_DOUBLE_EQ(peak_prominence(a, 3), 1.0);
  EXPECT_DOUBLE_EQ(peak_prominence(a, 7), 4.0);
}

TEST(Peaks, ThresholdAndOrdering) {
  std::vector<double> f;
  for (int k = 0; k < 9; ++k) f.push_back(k);
  const std::vector<double> a{0, 5, 1, 3, 2, 8, 0, 4, 0};
  const PeakReport r = find_spectral_peaks(f, a, 2.0, {0.0, 8.0});
  ASSERT_EQ(r.peaks.size(), 3u);
  EXPECT_EQ(r.peaks[0].bin, 5u);
  EXPECT_EQ(r.peaks[1].bin, 1u);
  EXPECT_EQ(r.peaks[2].bin, 7u);
  EXPECT_EQ(r.dominant_peak().bin, 5u);
  // default threshold: 3x the in-band median (median 2 -> 6) keeps only the big peak
  const PeakReport d = find_spectral_peaks(f, a, std::nullopt, {0.0, 8.0});
  EXPECT_DOUBLE_EQ(d.min_prominence, 6.0);
  ASSERT_EQ(d.peaks.size(), 1u);
  EXPECT_EQ(d.peaks[0].bin, 5u);
}

TEST(Peaks, PlateauReportsMiddle) {
  const std::vector<double> f{0, 1, 2, 3, 4, 5, 6};
  const std::vector<double> a{0, 1, 3, 3, 3, 1, 0};
  const PeakReport r = find_spectral_peaks(f, a, 0.5, {0.0, 6.0});
  ASSERT_EQ(r.peaks.size(), 1u);
  EXPECT_EQ(r.peaks[0].bin, 3u);
}

TEST(Peaks, FlatSpectrumHasNone) {
  const std::vector<double> f{0, 1, 2, 3}, a{1, 1, 1, 1};
  EXPECT_TRUE(find_spectral_peaks(f, a, std::nullopt, {0.0, 3.0}).empty());
}

// --- classification -------------------------------------------------------------------

TEST(Classify, SinglePeakedLegsAreAbsent) {
  std::vector<TrialStats> legs(8, synthetic_leg({{3.8, 0.25}}));
  const auto c = classify_prey(legs);
  EXPECT_FALSE(c.present);
  EXPECT_EQ(c.legs_detected, 0);
  for (const auto& l : c.legs) {
    ASSERT_TRUE(l.baseline);
    EXPECT_NEAR(l.baseline->frequency, 3.8, 1e-12);
  }
}

TEST(Classify, TwoOfEightIsAbsentSixIsPresent) {
  std::vector<TrialStats> legs(8, synthetic_leg({{3.8, 0.25}}));
  legs[2] = legs[3] = synthetic_leg({{3.8, 0.25}, {5.5, 0.08}});
  EXPECT_FALSE(classify_prey(legs).present);
  EXPECT_EQ(classify_prey(legs).legs_detected, 2);
  for (int i : {5, 6, 7, 1}) legs[static_cast<std::size_t>(i)] = legs[2];
  EXPECT_TRUE(classify_prey(legs).present);
  ClassifyOptions strict;
  strict.min_legs = 7;
  EXPECT_FALSE(classify_prey(legs, strict).present);
}

TEST(Classify, NeighbourBinIsNotAPreyPeak) {
  // a prey-band bump one bin from the baseline peak cannot count
  std::vector<TrialStats> legs(8, synthetic_leg({{4.95, 0.25}, {5.05, 0.2}}));
  ClassifyOptions o;
  o.min_prominence = 1e-6;
  for (const auto& l : classify_prey(legs, o).legs) EXPECT_FALSE(l.detected());
}

TEST(Classify, AddingDetectionsNeverFlipsToAbsent) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TrialStats> legs(8, synthetic_leg({{3.8, 0.25}}));
    std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7};
    std::shuffle(order.begin(), order.end(), rng);
    bool was_present = false;
    for (int i : order) {
      legs[static_cast<std::size_t>(i)] = synthetic_leg({{3.8, 0.25}, {5.6, 0.1}});
      const bool now = classify_prey(legs).present;
      EXPECT_FALSE(was_present && !now);
      was_present = now;
    }
    EXPECT_TRUE(was_present);
  }
}

TEST(Classify, NeedsEightLegsOnOneGrid) {
  std::vector<TrialStats> legs(7, synthetic_leg({{3.8, 0.25}}));
  EXPECT_THROW(classify_prey(legs), Error);
  legs.push_back(synthetic_leg({{3.8, 0.25}}));
  legs[4].frequencies[3] += 0.01;
  EXPECT_THROW(classify_prey(legs), Error);
}

TEST(Classify, SecondaryPeakOutsidePreyBand) {
  const auto leg = synthetic_leg({{3.8, 0.25}, {6.7, 0.1}});
  const ClassifyOptions o;
  const LegDetection d = detect_leg_peaks(leg, o);
  EXPECT_FALSE(d.detected());
  const auto p = secondary_peak(d, o);
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->frequency, 6.7, 1e-12);
}

// --- transient windows and decay ------------------------------------------------------

TEST(Transient, FindsDipAndRecovery) {
  AccelTrace t;
  t.sample_rate = 500.0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.01);
  for (int i = 0; i < 3000; ++i) {
    const double time = i / 500.0;
    double v = g(rng);
    if (time >= 1.0 && time < 2.0) v += -3.0 * std::exp(-(time - 1.0) * 4.0) * std::cos(2 * kPi * 4 * (time - 1.0));
    t.samples.push_back(v);
  }
  const auto [t0, t1] = detect_crouch_window(t, 6.0);
  EXPECT_NEAR(t0, 1.0, 0.02);
  EXPECT_GT(t1, 1.5);
  EXPECT_LT(t1, 2.1);
}

TEST(Transient, FlatTraceHasNone) {
  AccelTrace t;
  t.samples.assign(1000, 0.0);
  try {
    detect_crouch_window(t, 6.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_transient);
  }
}

// Exponentially decaying tone: the windowed RMS falls by exp(-t / tau), so 10% is reached
// tau ln 10 after the peak.
TEST(Decay, ExponentialEnvelope) {
  AccelTrace t;
  const double tau = 1.2, f = 4.0;
  for (int i = 0; i < 6000; ++i) {
    const double time = i / 500.0;
    t.samples.push_back(time < 1.0 ? 0.0 : std::exp(-(time - 1.0) / tau) * std::sin(2 * kPi * f * (time - 1.0)));
  }
  DecayOptions o;
  o.rms_window = 1.0 / f;
  const DecayReport r = rms_decay(t, 1.0, o);
  ASSERT_TRUE(r.decay_time);
  EXPECT_NEAR(r.peak_time, 1.0, 0.01);
  EXPECT_NEAR(*r.decay_time, tau * std::log(10.0), 0.03);
}

TEST(Decay, NeverDecaysWithoutEnvelope) {
  AccelTrace t;
  t.samples = tone(3000, 4.0, 500.0);
  EXPECT_FALSE(rms_decay(t, 0.0).decay_time);
}

// --- pose -----------------------------------------------------------------------------

namespace {

// Leg with segment lengths `len` px swinging through a crouch.
LandmarkTrace synthetic_pose(const std::array<double, 4>& len, std::size_t frames, double fps, double noise,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, noise > 0.0 ? noise : 1.0);
  LandmarkTrace tr;
  tr.frame_rate = fps;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / fps;
    double x = 400.0, y = 300.0, heading = 0.3 + 0.2 * std::sin(2 * kPi * 1.5 * t);
    for (std::size_t l = 0; l < 5; ++l) {
      double nx = 0.0, ny = 0.0;
      if (noise > 0.0) {
        nx = g(rng);
        ny = g(rng);
      }
      tr.landmarks[l].push_back({x + nx, y + ny, 0.99});
      if (l < 4) {
        x += len[l] * std::cos(heading);
        y += len[l] * std::sin(heading);
        heading += 0.5 + 0.1 * std::sin(2 * kPi * 1.5 * t + static_cast<double>(l));
      }
    }
  }
  return tr;
}

}  // namespace

TEST(Pose, CleanLandmarksGiveFrontRatios) {
  std::mt19937_64 rng(0);
  const std::vector<LandmarkTrace> tr{synthetic_pose({310.0, 283.0, 250.0, 100.0}, 300, 200.0, 0.0, rng)};
  const auto r = pose_segment_ratios(tr);
  ASSERT_EQ(r.rows.size(), 1u);
  const std::array<double, 4> expect{3.1, 2.83, 2.5, 1.0};
  // smoothing a moving chain shortens it by a few parts in 1e9
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.rows[0][i], expect[i], 1e-7);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Pose, NoisyLandmarksWithinTwoPercent) {
  std::mt19937_64 rng(2024);
  const std::array<double, 4> expect{3.1, 2.83, 2.5, 1.0};
  double worst = 0.0;
  for (int run = 0; run < 100; ++run) {
    const std::vector<LandmarkTrace> tr{synthetic_pose({310.0, 283.0, 250.0, 100.0}, 300, 200.0, 1.0, rng)};
    const auto r = pose_segment_ratios(tr);
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(r.rows[0][i] / expect[i] - 1.0));
  }
  EXPECT_LT(worst, 0.02);
}

TEST(Pose, LowLikelihoodPointsAreDropped) {
  std::mt19937_64 rng(0);
  LandmarkTrace tr = synthetic_pose({310.0, 283.0, 250.0, 100.0}, 300, 200.0, 0.0, rng);
  // wild outliers, flagged unreliable, in short and long runs
  for (std::size_t k = 40; k < 43; ++k) tr.landmarks[2][k] = {0.0, 0.0, 0.2};
  for (std::size_t k = 100; k < 160; ++k) tr.landmarks[4][k] = {5000.0, -300.0, 0.5};
  const std::vector<LandmarkTrace> v{tr};
  const auto r = pose_segment_ratios(v);
  EXPECT_NEAR(r.rows[0][0], 3.1, 1e-3);
  EXPECT_NEAR(r.rows[0][2], 2.5, 1e-3);
}

TEST(Pose, CutoffAboveNyquistIsClampedWithWarning) {
  std::mt19937_64 rng(0);
  const std::vector<LandmarkTrace> tr{synthetic_pose({310.0, 283.0, 250.0, 100.0}, 300, 100.0, 0.0, rng)};
  const auto r = pose_segment_ratios(tr);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("clamped"), std::string::npos);
}
