#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace eegvc {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m, v;  // congruent with the parameter list

  static AdamState init(const std::vector<std::size_t>& sizes, const AdamConfig& cfg);
};

// Standard Adam with bias correction; increments state.t. Parameter, gradient
// and state lists must be congruent.
void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state);

}  // namespace eegvc
