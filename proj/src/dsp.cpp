#include "eegvc/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

#include "eegvc/la.hpp"

namespace eegvc::dsp {

namespace {

using cd = std::complex<double>;

// ---- FFTW plan cache -------------------------------------------------------
// Plans are reused per length; FFTW planning is not thread-safe, execution on
// private buffers is, so the whole wrapper takes a lock (transforms here are
// short relative to the surrounding GEMMs).

struct FftwPlans {
  std::mutex mu;
  std::map<std::size_t, fftw_plan> r2c;
  std::map<std::size_t, fftw_plan> c2c_bwd;
  std::map<std::size_t, double*> rbuf;
  std::map<std::size_t, fftw_complex*> cbuf;   // r2c output
  std::map<std::size_t, fftw_complex*> cbuf2;  // c2c in/out pairs
  std::map<std::size_t, fftw_complex*> cbuf3;

  double* real_buffer(std::size_t n) {
    auto it = rbuf.find(n);
    if (it == rbuf.end()) {
      it = rbuf.emplace(n, fftw_alloc_real(n)).first;
    }
    return it->second;
  }
  fftw_complex* complex_buffer(std::map<std::size_t, fftw_complex*>& m, std::size_t n) {
    auto it = m.find(n);
    if (it == m.end()) {
      it = m.emplace(n, fftw_alloc_complex(n)).first;
    }
    return it->second;
  }
};

FftwPlans& plans() {
  static FftwPlans p;
  return p;
}

std::vector<cd> fft_r2c_locked(std::span<const double> x) {
  FftwPlans& P = plans();
  std::scoped_lock lock(P.mu);
  const std::size_t n = x.size();
  double* in = P.real_buffer(n);
  fftw_complex* out = P.complex_buffer(P.cbuf, n / 2 + 1);
  auto it = P.r2c.find(n);
  if (it == P.r2c.end()) {
    it = P.r2c.emplace(n, fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out,
                                               FFTW_ESTIMATE))
             .first;
  }
  std::memcpy(in, x.data(), n * sizeof(double));
  fftw_execute(it->second);
  std::vector<cd> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = cd(out[k][0], out[k][1]);
  return bins;
}

}  // namespace

std::vector<cd> fft_r2c(std::span<const double> x) {
  if (x.empty()) throw Error("fft_r2c: empty signal");
  if (x.size() == 1) return {cd(x[0], 0.0)};
  return fft_r2c_locked(x);
}

std::vector<double> ifft_real(std::span<const cd> w) {
  const std::size_t n = w.size();
  if (n == 0) throw Error("ifft_real: empty spectrum");
  if (n == 1) return {w[0].real()};
  FftwPlans& P = plans();
  std::scoped_lock lock(P.mu);
  fftw_complex* in = P.complex_buffer(P.cbuf2, n);
  fftw_complex* out = P.complex_buffer(P.cbuf3, n);
  auto it = P.c2c_bwd.find(n);
  if (it == P.c2c_bwd.end()) {
    it = P.c2c_bwd
             .emplace(n, fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD,
                                          FFTW_ESTIMATE))
             .first;
  }
  for (std::size_t k = 0; k < n; ++k) {
    in[k][0] = w[k].real();
    in[k][1] = w[k].imag();
  }
  fftw_execute(it->second);
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) res[k] = out[k][0];
  return res;
}

// ---- Butterworth bandpass ---------------------------------------------------

namespace {

// Multiply out prod_k (1 - r_k z^-1); returns real coefficients, c[0] = 1.
std::vector<double> poly_from_roots(const std::vector<cd>& roots) {
  std::vector<cd> c{1.0};
  for (const cd& r : roots) {
    std::vector<cd> next(c.size() + 1, cd(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

cd eval_poly_z(const std::vector<double>& c, const cd& zinv) {
  // c[0] + c[1] z^-1 + ...
  cd acc(0.0, 0.0);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * zinv + c[i];
  return acc;
}

}  // namespace

FilterCoeffs design_butter_bandpass(int order, double lo_hz, double hi_hz,
                                    double fs_hz) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs_hz / 2.0)) {
    throw Error("butter bandpass: need 0 < lo < hi < fs/2, got [" +
                std::to_string(lo_hz) + ", " + std::to_string(hi_hz) + "] at fs " +
                std::to_string(fs_hz));
  }
  if (order < 2 || order % 2 != 0) {
    throw Error("butter bandpass: order must be even and >= 2");
  }

  const double pi = std::numbers::pi;
  const double k2 = 2.0 * fs_hz;  // bilinear constant
  const double w_lo = k2 * std::tan(pi * lo_hz / fs_hz);
  const double w_hi = k2 * std::tan(pi * hi_hz / fs_hz);
  const double w0 = std::sqrt(w_lo * w_hi);
  const double bw = w_hi - w_lo;

  // Analog prototype poles on the unit left-half circle, lowpass -> bandpass,
  // then bilinear into z.
  std::vector<cd> zpoles;
  for (int k = 0; k < order; ++k) {
    const double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
    const cd proto(std::cos(theta), std::sin(theta));
    const cd s = proto * (bw / 2.0);
    const cd disc = std::sqrt(s * s - cd(w0 * w0, 0.0));
    for (const cd& sp : {s + disc, s - disc}) {
      zpoles.push_back((cd(k2, 0.0) + sp) / (cd(k2, 0.0) - sp));
    }
  }

  FilterCoeffs c;
  c.order = order;
  c.lo_hz = lo_hz;
  c.hi_hz = hi_hz;
  c.fs_hz = fs_hz;
  c.poles = zpoles;
  c.a = poly_from_roots(zpoles);

  std::vector<cd> zzeros;
  zzeros.insert(zzeros.end(), order, cd(1.0, 0.0));
  zzeros.insert(zzeros.end(), order, cd(-1.0, 0.0));
  c.b = poly_from_roots(zzeros);

  // Unit gain at the (warped) center frequency.
  const double theta_c = 2.0 * std::atan(w0 / k2);
  const cd zinv = std::exp(cd(0.0, -theta_c));
  const double g = std::abs(eval_poly_z(c.a, zinv)) / std::abs(eval_poly_z(c.b, zinv));
  for (double& bi : c.b) bi *= g;

  for (const cd& p : zpoles) {
    if (std::abs(p) >= 1.0) {
      throw Error("butter bandpass: unstable design, pole modulus " +
                  std::to_string(std::abs(p)));
    }
  }

  // Cascade realization: one conjugate pole pair per section, zeros (1, -1)
  // in every section, gain spread evenly. Least-peaked sections first.
  std::vector<cd> upper;
  for (const cd& p : zpoles) {
    if (p.imag() > 0.0) upper.push_back(p);
  }
  if (static_cast<int>(upper.size()) != order) {
    throw Error("butter bandpass: expected " + std::to_string(order) +
                " conjugate pole pairs, found " + std::to_string(upper.size()));
  }
  std::sort(upper.begin(), upper.end(),
            [](const cd& x, const cd& y) { return std::abs(x) < std::abs(y); });
  const double gs = std::pow(g, 1.0 / static_cast<double>(order));
  for (const cd& p : upper) {
    Biquad q;
    q.b0 = gs;
    q.b1 = 0.0;
    q.b2 = -gs;
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    c.sos.push_back(q);
  }
  return c;
}

double filter_gain(const FilterCoeffs& c, double freq_hz) {
  const cd zinv = std::exp(cd(0.0, -2.0 * std::numbers::pi * freq_hz / c.fs_hz));
  return std::abs(eval_poly_z(c.b, zinv) / eval_poly_z(c.a, zinv));
}

// ---- zero-phase filtering ---------------------------------------------------

namespace {

// Direct form II transposed.
void lfilter(const std::vector<double>& b, const std::vector<double>& a,
             std::span<const double> x, std::vector<double>& y,
             std::vector<double> z) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> bb(b), aa(a);
  bb.resize(n, 0.0);
  aa.resize(n, 0.0);
  z.resize(n - 1, 0.0);
  y.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = bb[0] * xi + z[0];
    for (std::size_t j = 0; j + 1 < n - 1; ++j) {
      z[j] = bb[j + 1] * xi + z[j + 1] - aa[j + 1] * yi;
    }
    z[n - 2] = bb[n - 1] * xi - aa[n - 1] * yi;
    y[i] = yi;
  }
}

// Steady-state initial conditions for a unit step (scaled by the first sample
// downstream), so the forward/backward passes start without a transient.
std::vector<double> lfilter_zi(const std::vector<double>& b,
                               const std::vector<double>& a) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> bb(b), aa(a);
  bb.resize(n, 0.0);
  aa.resize(n, 0.0);
  const std::size_t m = n - 1;
  // (I - A^T) zi = B with A the companion matrix of a.
  std::vector<double> M(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double A_t = 0.0;  // A^T: first column -a[1:], ones on the superdiagonal
      if (j == 0) {
        A_t = -aa[i + 1];
      } else if (j == i + 1) {
        A_t = 1.0;
      }
      M[i * m + j] = (i == j ? 1.0 : 0.0) - A_t;
    }
    rhs[i] = bb[i + 1] - aa[i + 1] * bb[0];
  }
  la::solve_dense(m, M, rhs);
  return rhs;
}

}  // namespace

namespace {

// One pass of the section cascade with steady-state initial conditions;
// x0 tracks the step level through the chain via each section's DC gain.
void sos_pass(const std::vector<Biquad>& sos, std::vector<double>& u) {
  double x0 = u.empty() ? 0.0 : u[0];
  std::vector<double> y;
  for (const Biquad& q : sos) {
    const std::vector<double> b{q.b0, q.b1, q.b2};
    const std::vector<double> a{1.0, q.a1, q.a2};
    std::vector<double> z = lfilter_zi(b, a);
    for (double& v : z) v *= x0;
    lfilter(b, a, u, y, z);
    u.swap(y);
    x0 *= (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
  }
}

}  // namespace

std::vector<double> filtfilt(const FilterCoeffs& c, std::span<const double> x) {
  if (c.sos.empty()) throw Error("filtfilt: filter has no section realization");
  const std::size_t ntaps = std::max(c.a.size(), c.b.size());
  const std::size_t padlen = 3 * ntaps;
  if (x.size() <= padlen) {
    throw Error("filtfilt: signal length " + std::to_string(x.size()) +
                " too short for pad length " + std::to_string(padlen));
  }
  const std::size_t n = x.size();
  std::vector<double> ext(n + 2 * padlen);
  for (std::size_t i = 0; i < padlen; ++i) {
    ext[i] = 2.0 * x[0] - x[padlen - i];
    ext[padlen + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + padlen);

  sos_pass(c.sos, ext);
  std::reverse(ext.begin(), ext.end());
  sos_pass(c.sos, ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw Error("detrend_linear: need at least 2 samples");
  const double nn = static_cast<double>(n);
  double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    sx += t;
    sxx += t * t;
    sy += x[i];
    sxy += t * x[i];
  }
  const double det = nn * sxx - sx * sx;
  const double slope = (nn * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / nn;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] - (intercept + slope * static_cast<double>(i));
  }
  return out;
}

std::vector<double> zscore(std::span<const double> x, bool* degenerate) {
  const std::size_t n = x.size();
  if (n < 2) throw Error("zscore: need at least 2 samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (degenerate) *degenerate = false;
  if (sd < 1e-12) {
    if (degenerate) *degenerate = true;
    return std::vector<double>(n, 0.0);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean) / sd;
  return out;
}

std::vector<Mat> segment(const Mat& x, std::size_t seg_len) {
  if (seg_len < 1) throw Error("segment: seg_len must be >= 1");
  const std::size_t nseg = x.cols / seg_len;
  std::vector<Mat> out;
  out.reserve(nseg);
  for (std::size_t s = 0; s < nseg; ++s) {
    Mat m(x.rows, seg_len);
    for (std::size_t r = 0; r < x.rows; ++r) {
      std::copy_n(x.row(r) + s * seg_len, seg_len, m.row(r));
    }
    out.push_back(std::move(m));
  }
  return out;
}

Spectrum rdft_magnitude(std::span<const double> x, double fs_hz) {
  const auto bins = fft_r2c(x);
  Spectrum s;
  s.n = x.size();
  s.fs_hz = fs_hz;
  s.freqs_hz.resize(bins.size());
  s.magnitude.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    s.freqs_hz[k] = static_cast<double>(k) * fs_hz / static_cast<double>(s.n);
    s.magnitude[k] = std::abs(bins[k]);
  }
  return s;
}

double band_power(const Spectrum& s, double lo_hz, double hi_hz) {
  if (!(lo_hz >= 0.0 && lo_hz < hi_hz && hi_hz <= s.fs_hz / 2.0 + 1e-12)) {
    throw Error("band_power: need 0 <= lo < hi <= fs/2");
  }
  const bool top_closed = hi_hz >= s.fs_hz / 2.0 - 1e-12 * s.fs_hz;
  double acc = 0.0;
  for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
    const double f = s.freqs_hz[k];
    const bool in_band = f >= lo_hz && (f < hi_hz || (top_closed && f <= hi_hz));
    if (!in_band) continue;
    const bool interior = k > 0 && 2 * k != s.n;
    acc += (interior ? 2.0 : 1.0) * s.magnitude[k] * s.magnitude[k];
  }
  return acc;
}

}  // namespace eegvc::dsp
