#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "eegvc/dsp.hpp"
#include "test_util.hpp"

using namespace eegvc;
namespace d = eegvc::dsp;

namespace {

constexpr double kPi = std::numbers::pi;

// Direct O(N^2) DFT magnitude: the semantic contract for rdft_magnitude.
std::vector<double> dft_oracle_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 2.0 * kPi * static_cast<double>(k) * static_cast<double>(i) /
                       static_cast<double>(n);
      re += x[i] * std::cos(w);
      im -= x[i] * std::sin(w);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0,
                         double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / fs + phase);
  }
  return x;
}

}  // namespace

TEST_CASE("butterworth bandpass vanishes at DC and Nyquist") {
  auto c = d::design_butter_bandpass(4, 0.5, 45.0, 500.0);
  CHECK(d::filter_gain(c, 0.0) < 1e-8);
  CHECK(d::filter_gain(c, 250.0) < 1e-8);
}

TEST_CASE("butterworth band edges sit at 1/sqrt(2)") {
  auto c = d::design_butter_bandpass(4, 0.5, 45.0, 500.0);
  const double root_half = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(d::filter_gain(c, 0.5) - root_half) < 0.05);
  CHECK(std::fabs(d::filter_gain(c, 45.0) - root_half) < 0.05);
}

TEST_CASE("butterworth designs are stable and poles match the denominator") {
  for (auto [lo, hi] : std::vector<std::pair<double, double>>{
           {0.5, 45.0}, {8.0, 14.0}, {14.0, 30.0}, {4.0, 8.0}, {0.5, 4.0}}) {
    auto c = d::design_butter_bandpass(4, lo, hi, 500.0);
    REQUIRE(c.a.size() == 9);
    REQUIRE(c.poles.size() == 8);
    CHECK(c.a[0] == doctest::Approx(1.0));
    for (const auto& p : c.poles) {
      CHECK(std::abs(p) < 1.0);
      // stored pole really is a root of a(z)
      std::complex<double> acc(0.0, 0.0);
      std::complex<double> zinv = 1.0 / p;
      for (std::size_t i = c.a.size(); i-- > 0;) acc = acc * zinv + c.a[i];
      CHECK(std::abs(acc) < 1e-6);
    }
  }
}

TEST_CASE("butterworth rejects invalid band edges") {
  CHECK_THROWS_AS(d::design_butter_bandpass(4, 45.0, 0.5, 500.0), Error);
  CHECK_THROWS_AS(d::design_butter_bandpass(4, 0.0, 45.0, 500.0), Error);
  CHECK_THROWS_AS(d::design_butter_bandpass(4, 10.0, 260.0, 500.0), Error);
  CHECK_THROWS_AS(d::design_butter_bandpass(3, 0.5, 45.0, 500.0), Error);
}

TEST_CASE("filtfilt basics: zeros, linearity, zero phase on a passband tone") {
  auto c = d::design_butter_bandpass(4, 8.0, 14.0, 500.0);

  std::vector<double> zeros(2000, 0.0);
  auto yz = d::filtfilt(c, zeros);
  for (double v : yz) CHECK(v == 0.0);

  Rng rng(17);
  auto x = testutil::rand_vec(rng, 1500);
  auto y1 = d::filtfilt(c, x);
  std::vector<double> x3 = x;
  for (double& v : x3) v *= 3.0;
  auto y3 = d::filtfilt(c, x3);
  double ymax = 0.0;
  for (double v : y1) ymax = std::max(ymax, std::fabs(v));
  for (std::size_t i = 0; i < y1.size(); ++i) {
    CHECK(std::fabs(y3[i] - 3.0 * y1[i]) < 1e-9 * ymax);
  }

  // 10 Hz tone inside the 8-14 band: amplitude preserved, no phase shift.
  const std::size_t n = 4000;
  auto tone = sine(10.0, 500.0, n);
  auto y = d::filtfilt(c, tone);
  REQUIRE(y.size() == n);
  double best = -1.0;
  int best_lag = -99;
  for (int lag = -10; lag <= 10; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 1000; i < n - 1000; ++i) {
      acc += y[i] * tone[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    }
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
  double peak = 0.0;
  for (std::size_t i = n / 4; i < 3 * n / 4; ++i) peak = std::max(peak, std::fabs(y[i]));
  CHECK(std::fabs(peak - 1.0) < 0.05);
}

TEST_CASE("filtfilt rejects too-short input") {
  auto c = d::design_butter_bandpass(4, 8.0, 14.0, 500.0);
  std::vector<double> x(27, 1.0);
  CHECK_THROWS_AS(d::filtfilt(c, x), Error);
}

TEST_CASE("out-of-band tone attenuation matches the bidirectional |H|^2") {
  // A 4th-order 0.5-45 bandpass at fs=500 leaves |H(60)|^2 = 0.0747, so the
  // analytic response is the oracle and the hard bound sits just above it.
  auto c = d::design_butter_bandpass(4, 0.5, 45.0, 500.0);
  auto tone = sine(60.0, 500.0, 20000);
  auto y = d::filtfilt(c, tone);
  // Steady state away from the (slow, 0.5 Hz edge) boundary transients.
  double peak = 0.0;
  for (std::size_t i = 9000; i < 11000; ++i) peak = std::max(peak, std::fabs(y[i]));
  const double g2 = d::filter_gain(c, 60.0) * d::filter_gain(c, 60.0);
  CHECK(peak == doctest::Approx(g2).epsilon(0.15));
  CHECK(peak < 0.1);

  // The 8-14 filter pushes a 60 Hz tone below 5% outright.
  auto c2 = d::design_butter_bandpass(4, 8.0, 14.0, 500.0);
  auto y2 = d::filtfilt(c2, tone);
  double peak2 = 0.0;
  for (std::size_t i = 1000; i < 19000; ++i) peak2 = std::max(peak2, std::fabs(y2[i]));
  CHECK(peak2 < 0.05);
}

TEST_CASE("detrend removes an exact line and keeps a sine") {
  std::vector<double> line(3000);
  for (std::size_t i = 0; i < line.size(); ++i) {
    line[i] = 3.0 + 0.01 * static_cast<double>(i);
  }
  auto y = d::detrend_linear(line);
  for (double v : y) CHECK(std::fabs(v) < 1e-9);

  std::vector<double> flat(100, 5.0);
  for (double v : d::detrend_linear(flat)) CHECK(std::fabs(v) < 1e-9);

  // sine + line: agrees with an independent least-squares fit. A pure sine is
  // not exactly orthogonal to the ramp, so recovery of the sine itself is only
  // approximate; the fit residual is the contract.
  auto s = sine(25.0, 500.0, 3000);  // whole number of periods
  std::vector<double> mixed(3000);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = s[i] + 2.0 - 0.003 * static_cast<double>(i);
  }
  auto rec = d::detrend_linear(mixed);

  long double sx = 0, sxx = 0, sy = 0, sxy = 0;
  const long double n = 3000;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    sx += i;
    sxx += static_cast<long double>(i) * i;
    sy += mixed[i];
    sxy += static_cast<long double>(i) * mixed[i];
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double icept = (sy - slope * sx) / n;
  double worst_fit = 0.0, worst_sine = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double expect = mixed[i] - static_cast<double>(icept + slope * i);
    worst_fit = std::max(worst_fit, std::fabs(rec[i] - expect));
    worst_sine = std::max(worst_sine, std::fabs(rec[i] - s[i]));
  }
  CHECK(worst_fit < 1e-9);
  CHECK(worst_sine < 1e-2);

  // zero mean and zero least-squares slope afterwards
  double mean = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    mean += rec[i];
    cross += (static_cast<double>(i) - 1499.5) * rec[i];
  }
  CHECK(std::fabs(mean / 3000.0) < 1e-9);
  CHECK(std::fabs(cross) / 3000.0 < 1e-6);
}

TEST_CASE("zscore closed form, degenerate flag, and moments") {
  std::vector<double> x{1.0, 2.0, 3.0};
  auto y = d::zscore(x);
  CHECK(y[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(1.2247).epsilon(1e-4));

  bool degen = false;
  std::vector<double> flat(50, 3.3);
  auto z = d::zscore(flat, &degen);
  CHECK(degen);
  for (double v : z) CHECK(v == 0.0);

  Rng rng(5);
  auto r = testutil::rand_vec(rng, 4096, 2.5);
  auto zr = d::zscore(r, &degen);
  CHECK(!degen);
  double mean = 0.0;
  for (double v : zr) mean += v;
  mean /= static_cast<double>(zr.size());
  CHECK(std::fabs(mean) < 1e-12);
  double var = 0.0;
  for (double v : zr) var += (v - mean) * (v - mean);
  var /= static_cast<double>(zr.size());
  CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
}

TEST_CASE("segment drops the incomplete tail") {
  Mat x(2, 7000);
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = static_cast<double>(i);
  auto segs = d::segment(x, 3000);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].at(0, 0) == 0.0);
  CHECK(segs[1].at(0, 0) == 3000.0);
  CHECK(segs[1].at(1, 2999) == doctest::Approx(7000.0 + 5999.0));

  Mat exact(1, 3000);
  CHECK(d::segment(exact, 3000).size() == 1);
  Mat small(1, 2999);
  CHECK(d::segment(small, 3000).empty());
}

TEST_CASE("segment then concat is the identity on aligned lengths") {
  Rng rng(8);
  Mat x(3, 9000);
  for (double& v : x.v) v = rng.normal();
  auto segs = d::segment(x, 3000);
  REQUIRE(segs.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t i = 0; i < 3000; ++i) {
        REQUIRE(segs[s].at(r, i) == x.at(r, s * 3000 + i));
      }
    }
  }
}

TEST_CASE("rdft_magnitude matches the direct DFT oracle across lengths") {
  Rng rng(77);
  for (std::size_t n : {1u, 2u, 7u, 16u, 250u, 3000u}) {
    auto x = testutil::rand_vec(rng, n);
    auto spec = d::rdft_magnitude(x, 500.0);
    auto oracle = dft_oracle_magnitude(x);
    REQUIRE(spec.magnitude.size() == oracle.size());
    double scale = 0.0;
    for (double m : oracle) scale = std::max(scale, m);
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      CHECK(std::fabs(spec.magnitude[k] - oracle[k]) <= 1e-9 * std::max(scale, 1.0));
    }
    for (std::size_t k = 0; k < spec.freqs_hz.size(); ++k) {
      CHECK(spec.freqs_hz[k] ==
            doctest::Approx(500.0 * static_cast<double>(k) / static_cast<double>(n)));
    }
  }
}

TEST_CASE("rdft_magnitude closed forms: constant and cosine") {
  const std::size_t n = 480;
  std::vector<double> c(n, 2.5);
  auto sc = d::rdft_magnitude(c, 500.0);
  CHECK(sc.magnitude[0] == doctest::Approx(2.5 * n).epsilon(1e-12));
  for (std::size_t k = 1; k < sc.magnitude.size(); ++k) {
    CHECK(sc.magnitude[k] < 1e-9 * n);
  }

  const std::size_t k0 = 37;
  const double amp = 1.7;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::cos(2.0 * kPi * static_cast<double>(k0) * i / n);
  }
  auto sx = d::rdft_magnitude(x, 500.0);
  CHECK(sx.magnitude[k0] == doctest::Approx(n * amp / 2.0).epsilon(1e-9));
  for (std::size_t k = 0; k < sx.magnitude.size(); ++k) {
    if (k != k0) CHECK(sx.magnitude[k] < 1e-8 * n);
  }
}

TEST_CASE("band_power: concentration, empty band, Parseval") {
  const double fs = 500.0;
  const std::size_t n = 3000;
  auto tone = sine(10.0, fs, n);
  auto spec = d::rdft_magnitude(tone, fs);
  const double alpha = d::band_power(spec, 8.0, 14.0);
  const double total = d::band_power(spec, 0.0, fs / 2.0);
  CHECK(alpha / total > 0.99);

  CHECK(d::band_power(spec, 100.01, 100.05) == 0.0);  // no bin falls inside

  Rng rng(3);
  auto x = testutil::rand_vec(rng, n);
  auto sx = d::rdft_magnitude(x, fs);
  double energy = 0.0;
  for (double v : x) energy += v * v;
  const double full = d::band_power(sx, 0.0, fs / 2.0);
  CHECK(full == doctest::Approx(static_cast<double>(n) * energy).epsilon(1e-6));
}
