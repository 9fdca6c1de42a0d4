#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "eegvc/types.hpp"

namespace eegvc::dsp {

// One second-order section: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Digital IIR bandpass, a[0] = 1. `poles` holds the z-plane poles from the
// design stage so stability is checkable without re-rooting the denominator;
// `sos` is the cascade realization actually used for filtering (the expanded
// transfer function is too ill-conditioned for narrow bands).
struct FilterCoeffs {
  std::vector<double> b, a;
  int order = 0;  // analog prototype order; the digital filter has 2*order poles
  double lo_hz = 0.0, hi_hz = 0.0;
  double fs_hz = 0.0;
  std::vector<std::complex<double>> poles;
  std::vector<Biquad> sos;
};

// Butterworth bandpass via analog prototype + bilinear transform with
// frequency pre-warping. order is the prototype order (even, >= 2); the
// band edges land at -3 dB. Throws Error on invalid edges or instability.
FilterCoeffs design_butter_bandpass(int order, double lo_hz, double hi_hz, double fs_hz);

// |H(e^{j 2 pi f / fs})| of the filter.
double filter_gain(const FilterCoeffs& c, double freq_hz);

// Zero-phase forward-backward filtering with odd-reflection edge padding of
// length 3*max(len(a), len(b)) and steady-state initial conditions. Output
// length equals input length. Throws Error when the signal is too short.
std::vector<double> filtfilt(const FilterCoeffs& c, std::span<const double> x);

// Subtracts the least-squares line.
std::vector<double> detrend_linear(std::span<const double> x);

// (x - mean) / population std. A flat signal (std < 1e-12) maps to zeros and
// sets *degenerate when provided.
std::vector<double> zscore(std::span<const double> x, bool* degenerate = nullptr);

// Consecutive non-overlapping windows of seg_len columns; incomplete tail dropped.
std::vector<Mat> segment(const Mat& channels_by_samples, std::size_t seg_len);

// One-sided spectrum; bins k = 0..floor(N/2), freqs[k] = k*fs/N.
struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> magnitude;
  std::size_t n = 0;  // original signal length
  double fs_hz = 0.0;
};

// Magnitude of the DFT at bins 0..floor(N/2); arbitrary N.
Spectrum rdft_magnitude(std::span<const double> x, double fs_hz);

// Sum of magnitude^2 over bins with lo <= f < hi, one-sided doubling for
// 0 < k < N/2. The upper edge is closed when hi == fs/2 so the full-band sum
// satisfies Parseval.
double band_power(const Spectrum& s, double lo_hz, double hi_hz);

// DFT building blocks (FFT-backed, any N).
// Forward bins 0..floor(N/2) of a real signal: X_k = sum_n x_n e^{-i 2 pi k n / N}.
std::vector<std::complex<double>> fft_r2c(std::span<const double> x);
// Real part of the unnormalized inverse transform sum_k W_k e^{+i 2 pi k n / N}
// over all N bins of W.
std::vector<double> ifft_real(std::span<const std::complex<double>> w);

}  // namespace eegvc::dsp
