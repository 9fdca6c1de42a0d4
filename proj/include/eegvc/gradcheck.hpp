#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eegvc/tensor.hpp"

namespace eegvc {

// One storage block whose gradient gets checked (a parameter tensor or an
// input), plus the analytic gradient written by the backward callback.
struct CheckBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> grads;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "block[i]" of the worst coordinate
  std::size_t coords_checked = 0;
};

// Probes d/dx of sum(projection .* forward()) by central differences with the
// given step and compares against the analytic gradients produced by
// backward(projection). When max_coords_per_block > 0, a deterministic
// evenly-strided subset of each block is checked instead of every coordinate.
// Relative error: |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult check_gradients(const std::function<Tensor4()>& forward,
                                const std::function<void(const Tensor4&)>& backward,
                                const std::vector<CheckBlock>& blocks,
                                const Tensor4& projection, double eps,
                                std::size_t max_coords_per_block = 0);

}  // namespace eegvc
