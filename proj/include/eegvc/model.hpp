#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "eegvc/adam.hpp"
#include "eegvc/metrics.hpp"
#include "eegvc/nn.hpp"
#include "eegvc/rng.hpp"
#include "eegvc/segment_pair.hpp"
#include "eegvc/tensor.hpp"

namespace eegvc {

// Architecture + training configuration. The stock sizes build the full
// network (filters 64/128/256, hidden 512, segments of 3000 samples); the
// shrunken clone keeps the topology at desk scale for gradient checks.
struct NetConfig {
  std::size_t seg_len = 3000;
  std::size_t in_rows = 4;
  std::size_t out_rows = 17;
  std::size_t f1 = 64, f2 = 128, f3 = 256;
  std::size_t hidden = 512;
  double leaky_slope = 0.2;
  std::uint64_t seed = 1;

  double alpha = 1.0, beta = 1.0;
  AdamConfig adam;
  std::size_t epochs = 11;
  std::size_t batch_size = 1;
  std::size_t max_updates = 0;  // 0 = no cap

  void validate() const;
  static NetConfig shrunken(std::uint64_t seed = 1);
};

// The full parameter set: three temporal convs + BiLSTM, four spatial convs,
// four fusion deconvs, and the 1x1 output conv.
struct NetParams {
  std::array<ConvParams, 3> temporal;
  BiLstmParams lstm;
  std::array<ConvParams, 4> spatial;
  std::array<ConvParams, 4> fusion;
  ConvParams head;
  void zero();
};

struct ParamView {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double>* data;
};

// Named views over every tensor in a NetParams, in a fixed traversal order
// (also the checkpoint entry order).
std::vector<ParamView> param_views(NetParams& p, const NetConfig& cfg);

struct ForwardCache {
  Tensor4 input;
  std::array<Tensor4, 3> t_out;
  std::array<ConvCache, 3> t_cc;
  std::vector<Mat> seq;  // per batch item, T x (rows * f3)
  std::vector<BiLstmCache> lstm_cc;
  Tensor4 lstm_out;
  std::array<Tensor4, 4> s_out;
  std::array<ConvCache, 4> s_cc;
  Tensor4 concat;
  std::array<Tensor4, 4> fu_out;
  std::array<ConvCache, 4> fu_cc;
  ConvCache head_cc;
};

class Generator {
 public:
  explicit Generator(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  NetParams& params() { return params_; }
  const NetParams& params() const { return params_; }

  // (B, in_rows, seg_len, 1) -> (B, out_rows, seg_len, 1). Pure in params;
  // the cache, when given, carries everything backward needs.
  Tensor4 forward(const Tensor4& in, ForwardCache* cache = nullptr) const;

  // d_out is dL/d(output); accumulates parameter gradients, returns dL/d(input).
  Tensor4 backward(const ForwardCache& cache, const Tensor4& d_out,
                   NetParams& grads) const;

  NetParams zero_grads() const;
  std::size_t param_count() const;

  const std::array<ConvSpec, 3>& temporal_specs() const { return t_spec_; }
  const std::array<ConvSpec, 4>& spatial_specs() const { return s_spec_; }
  const std::array<ConvSpec, 4>& fusion_specs() const { return fu_spec_; }
  const ConvSpec& head_spec() const { return head_spec_; }

 private:
  NetConfig cfg_;
  std::array<ConvSpec, 3> t_spec_;
  std::array<ConvSpec, 4> s_spec_;
  std::array<ConvSpec, 4> fu_spec_;
  ConvSpec head_spec_;
  NetParams params_;
};

// L = alpha * TMSE + beta * FMSE with the gradient taken w.r.t. gen.
// TMSE: mean squared sample difference over all channels. FMSE: per channel,
// mean over DFT bins k = 1..floor(N/2) of the squared difference of
// N-normalized magnitude spectra, averaged over channels (zero-magnitude bins
// use subgradient 0).
struct LossValue {
  double total = 0.0;
  double tmse = 0.0;
  double fmse = 0.0;
  Tensor4 grad;
};
LossValue composite_loss(const Tensor4& gen, const Tensor4& target, double alpha,
                         double beta);

struct EpochLog {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_cc_mean = 0.0;
  double val_mae_mean = 0.0;
};

struct TrainingReport {
  std::vector<EpochLog> epochs;
  std::vector<ChannelReport> val_channels;  // validation stats of the kept params
  std::size_t updates = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// Incremental trainer: per-example (or small-batch) Adam updates in a seeded
// shuffle order. Exposed so callers can interleave epochs with evaluation.
class Trainer {
 public:
  explicit Trainer(const NetConfig& cfg);

  // One pass over the pairs; returns the mean training loss of the updates
  // performed. Honors config().max_updates.
  double run_epoch(const std::vector<SegmentPair>& train);

  double evaluate_loss(const std::vector<SegmentPair>& pairs) const;

  Generator& net() { return net_; }
  const Generator& net() const { return net_; }
  AdamState& opt_state() { return opt_; }
  std::size_t updates() const { return updates_; }
  bool capped() const;

 private:
  Generator net_;
  AdamState opt_;
  Rng shuffle_rng_;
  std::size_t updates_ = 0;
};

// Full protocol: epoch loop with validation each epoch; the parameters with
// the best validation loss (training loss when val is empty) are kept.
std::pair<Generator, TrainingReport> train(const std::vector<SegmentPair>& train_pairs,
                                           const std::vector<SegmentPair>& val_pairs,
                                           const NetConfig& cfg);

// Pure inference over source blocks (source rows x seg_len each).
std::vector<Mat> generate(const Generator& net, const std::vector<Mat>& sources);

// Conversions between segment pairs and the rank-4 layer currency.
Tensor4 sources_to_tensor(const std::vector<const Mat*>& blocks);
Tensor4 targets_to_tensor(const std::vector<const Mat*>& blocks);

}  // namespace eegvc
