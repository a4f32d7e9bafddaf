#include "piig/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace piig {

AdamState AdamState::init(const NetworkParams& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m.reserve(params.items.size());
  s.v.reserve(params.items.size());
  for (const auto& it : params.items) {
    const auto n = static_cast<std::size_t>(it.tensor.numel());
    s.m.emplace_back(n, 0.0f);
    s.v.emplace_back(n, 0.0f);
  }
  return s;
}

void adam_step(NetworkParams& params, AdamState& state) {
  if (state.m.size() != params.items.size()) {
    throw std::invalid_argument("adam_step: state does not match params");
  }
  state.step_count += 1;
  const AdamConfig& c = state.cfg;
  const float bc1 = static_cast<float>(
      1.0 - std::pow(static_cast<double>(c.beta1), state.step_count));
  const float bc2 = static_cast<float>(
      1.0 - std::pow(static_cast<double>(c.beta2), state.step_count));
  for (std::size_t p = 0; p < params.items.size(); ++p) {
    auto& item = params.items[p];
    if (!item.tensor.requires_grad()) {
      throw std::invalid_argument("adam_step: missing gradient for '" +
                                  item.name + "'");
    }
    auto g = item.tensor.grad();
    float* w = item.tensor.data();
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != g.size()) {
      throw std::invalid_argument("adam_step: moment size mismatch for '" +
                                  item.name + "'");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g[i] * g[i];
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace piig
