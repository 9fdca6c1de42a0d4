#include "eegvc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace eegvc {

namespace {

double project(const Tensor4& out, const Tensor4& proj) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * proj.data[i];
  return acc;
}

}  // namespace

GradCheckResult check_gradients(const std::function<Tensor4()>& forward,
                                const std::function<void(const Tensor4&)>& backward,
                                const std::vector<CheckBlock>& blocks,
                                const Tensor4& projection, double eps,
                                std::size_t max_coords_per_block) {
  Tensor4 out = forward();
  require_same_dims(out, projection, "check_gradients projection");
  backward(projection);

  GradCheckResult res;
  for (const CheckBlock& blk : blocks) {
    const std::size_t n = blk.values.size();
    std::size_t stride = 1;
    if (max_coords_per_block > 0 && n > max_coords_per_block) {
      stride = (n + max_coords_per_block - 1) / max_coords_per_block;
    }
    for (std::size_t j = 0; j < n; j += stride) {
      const double keep = blk.values[j];
      blk.values[j] = keep + eps;
      const double up = project(forward(), projection);
      blk.values[j] = keep - eps;
      const double dn = project(forward(), projection);
      blk.values[j] = keep;
      const double numeric = (up - dn) / (2.0 * eps);
      const double analytic = blk.grads[j];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++res.coords_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = blk.name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return res;
}

}  // namespace eegvc
