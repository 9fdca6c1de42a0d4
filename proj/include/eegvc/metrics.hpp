#pragma once

#include <span>
#include <string>
#include <vector>

#include "eegvc/types.hpp"

namespace eegvc {

// Mean absolute error between equal-length signals.
double mae(std::span<const double> f, std::span<const double> g);

// Pearson correlation coefficient, clamped to [-1, 1]. Throws Error when
// either signal is constant (std < 1e-12) rather than returning NaN.
double cc(std::span<const double> f, std::span<const double> g);

struct ChannelReport {
  std::string channel;
  double cc_mean = 0.0, cc_std = 0.0;
  double mae_mean = 0.0, mae_std = 0.0;
  std::size_t n_segments = 0;    // segments that entered the aggregate
  std::size_t n_degenerate = 0;  // segments excluded as degenerate
};

struct EvalSummary {
  std::vector<ChannelReport> channels;  // canonical montage order
  double virtual_cc_mean = 0.0, virtual_mae_mean = 0.0;  // 13 synthesized
  double source_cc_mean = 0.0, source_mae_mean = 0.0;    // 4 reconstructed
  double all_cc_mean = 0.0, all_mae_mean = 0.0;
};

// Per-channel per-segment CC/MAE between generated and reference blocks
// (each montage-rows x seg_len), aggregated mean +- std across segments.
EvalSummary evaluate_channels(const std::vector<Mat>& gen,
                              const std::vector<Mat>& target);

// CSV: channel,cc_mean,cc_std,mae_mean,mae_std,n_segments — 6-decimal fixed.
void write_channel_report_csv(const EvalSummary& s, const std::string& path);

}  // namespace eegvc
