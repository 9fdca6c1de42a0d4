#include "eegvc/adam.hpp"

#include <cmath>
#include <string>

#include "eegvc/types.hpp"

namespace eegvc {

AdamState AdamState::init(const std::vector<std::size_t>& sizes, const AdamConfig& cfg) {
  AdamState st;
  st.cfg = cfg;
  st.m.reserve(sizes.size());
  st.v.reserve(sizes.size());
  for (std::size_t n : sizes) {
    st.m.emplace_back(n, 0.0);
    st.v.emplace_back(n, 0.0);
  }
  return st;
}

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.m.size()) + " state slots");
  }
  state.t += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw ShapeError("adam_step: tensor " + std::to_string(i) + " sizes " +
                       std::to_string(p.size()) + "/" + std::to_string(g.size()) +
                       "/" + std::to_string(m.size()) + " differ");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

}  // namespace eegvc
