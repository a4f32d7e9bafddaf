#include "piig/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace piig {

Tensor kl_divergence(const Tensor& mean, const Tensor& logvar) {
  if (!(mean.shape() == logvar.shape())) {
    throw std::invalid_argument("kl_divergence: mean " +
                                to_string(mean.shape()) + " vs logvar " +
                                to_string(logvar.shape()));
  }
  mean.assert_finite("kl_divergence mean");
  logvar.assert_finite("kl_divergence logvar");
  Tensor sigma2 = exp(logvar);
  Tensor inner = add_scalar(sub(sub(logvar, mul(mean, mean)), sigma2), 1.0f);
  const float inv_batch = 1.0f / static_cast<float>(mean.shape().n);
  return scale(sum(inner), -0.5f * inv_batch);
}

Tensor consistency_loss(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("consistency_loss: shape mismatch " +
                                to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
  return mean(abs(sub(a, b)));
}

Tensor latent_consistency_loss(const Tensor& z_f, const Tensor& z) {
  return consistency_loss(z_f, z);
}

CriticOps make_critic_ops(const CriticStack& critic) {
  CriticStack frozen = critic.detached();
  CriticOps ops;
  ops.score = [critic](const Tensor& x) { return critic.score(x); };
  ops.score_detached = [frozen](const Tensor& x) { return frozen.score(x); };
  ops.score_dual = [critic](const Dual& x) { return critic.score(x); };
  return ops;
}

Tensor gradient_penalty(const CriticOps& ops, const Tensor& real,
                        const Tensor& fake, std::span<const float> u,
                        const Tensor* mask) {
  if (!(real.shape() == fake.shape())) {
    throw std::invalid_argument("gradient_penalty: real " +
                                to_string(real.shape()) + " vs fake " +
                                to_string(fake.shape()));
  }
  const Shape4 s = real.shape();
  if (static_cast<int>(u.size()) != s.n) {
    throw std::invalid_argument("gradient_penalty: got " +
                                std::to_string(u.size()) +
                                " interpolation weights for batch " +
                                std::to_string(s.n));
  }
  const std::int64_t per = s.numel() / s.n;
  if (mask) {
    const Shape4 ms = mask->shape();
    if (ms.c != 1 || ms.h != s.h || ms.w != s.w ||
        (ms.n != 1 && ms.n != s.n)) {
      throw std::invalid_argument("gradient_penalty: mask shape " +
                                  to_string(ms) + " incompatible with " +
                                  to_string(s));
    }
  }

  // Per-sample interpolates, built as a fresh leaf so the probe pass below
  // measures the critic's gradient with respect to its input image.
  std::vector<float> mix(static_cast<std::size_t>(s.numel()));
  for (int b = 0; b < s.n; ++b) {
    const float ub = u[b];
    const float* r = real.data() + b * per;
    const float* f = fake.data() + b * per;
    for (std::int64_t i = 0; i < per; ++i) {
      mix[b * per + i] = ub * r[i] + (1.0f - ub) * f[i];
    }
  }
  Tensor ihat = Tensor::from_data(s, mix, /*requires_grad=*/true);

  std::vector<float> g(static_cast<std::size_t>(s.numel()), 0.0f);
  {
    Tensor probe = ops.score_detached(ihat);
    if (probe.shape().n != s.n || probe.numel() != s.n) {
      throw std::invalid_argument(
          "gradient_penalty: critic must emit one score per sample");
    }
    // A critic that ignores its input has zero gradient everywhere.
    if (probe.requires_grad()) {
      backward(sum(probe));
      auto gi = ihat.grad();
      std::copy(gi.begin(), gi.end(), g.begin());
    }
  }

  if (mask) {
    const Shape4 ms = mask->shape();
    const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
    for (int b = 0; b < s.n; ++b) {
      const float* m = mask->data() + (ms.n == 1 ? 0 : b * hw);
      for (int c = 0; c < s.c; ++c) {
        float* gp = g.data() + (static_cast<std::int64_t>(b) * s.c + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i) gp[i] *= 1.0f - m[i];
      }
    }
  }

  // Penalty value and the per-sample scaling of the surrogate direction.
  std::vector<double> norms(s.n, 0.0);
  double penalty = 0.0;
  for (int b = 0; b < s.n; ++b) {
    double acc = 0.0;
    const float* gb = g.data() + b * per;
    for (std::int64_t i = 0; i < per; ++i)
      acc += static_cast<double>(gb[i]) * gb[i];
    norms[b] = std::sqrt(acc);
    const double d = norms[b] - 1.0;
    penalty += d * d;
  }
  penalty /= s.n;
  const float penalty_f = static_cast<float>(penalty);

  if (!ops.score_dual) {
    return Tensor::scalar(penalty_f);
  }

  // d penalty / d theta = sum_b c_b * d/d theta [J_D(ihat_b) . g_b] with
  // c_b = 2(||g_b|| - 1) / (N ||g_b||). The bracket is exactly what a dual
  // pass with tangent c_b * g_b computes, recorded over live parameters, so
  // one backward through its sum yields the parameter gradient.
  std::vector<float> tangent(static_cast<std::size_t>(s.numel()), 0.0f);
  for (int b = 0; b < s.n; ++b) {
    const double nb = norms[b];
    if (nb <= 0.0) continue;  // zero direction contributes nothing
    const float cb = static_cast<float>(2.0 * (nb - 1.0) / (s.n * nb));
    const float* gb = g.data() + b * per;
    float* tb = tangent.data() + b * per;
    for (std::int64_t i = 0; i < per; ++i) tb[i] = cb * gb[i];
  }
  Dual din{ihat.detached(), Tensor::from_data(s, std::move(tangent))};
  Dual dout = ops.score_dual(din);
  Tensor surrogate = sum(dout.tangent);

  auto sn = surrogate.node();
  return detail::make_op({1, 1, 1, 1}, {penalty_f}, {sn},
                         [sn](detail::Node& self) {
                           if (sn->requires_grad) sn->grad[0] += self.grad[0];
                         });
}

CriticLoss critic_loss(const CriticOps& ops, const Tensor& real,
                       const Tensor& fake, std::span<const float> u,
                       float lambda, const Tensor* mask) {
  Tensor s_fake = mean(ops.score(fake));
  Tensor s_real = mean(ops.score(real));
  Tensor wass = sub(s_fake, s_real);
  Tensor gp = gradient_penalty(ops, real, fake, u, mask);
  CriticLoss out;
  out.wasserstein = wass.item();
  out.penalty = gp.item();
  if (gp.requires_grad()) {
    out.total = add(wass, scale(gp, lambda));
  } else {
    out.total = add_scalar(wass, lambda * gp.item());
  }
  return out;
}

Tensor generator_adv_loss(const std::function<Tensor(const Tensor&)>& score,
                          const Tensor& fake) {
  return scale(mean(score(fake)), -1.0f);
}

double total_objective(const LossReport& parts, const LossWeights& weights) {
  const struct {
    const char* name;
    double value;
  } fields[] = {
      {"kl_e", parts.kl_e},           {"kl_g", parts.kl_g},
      {"cons_e", parts.cons_e},       {"cons_g", parts.cons_g},
      {"adv_global", parts.adv_global}, {"adv_local", parts.adv_local},
  };
  for (const auto& f : fields) {
    if (!std::isfinite(f.value)) {
      throw std::invalid_argument(std::string("total_objective: non-finite ") +
                                  f.name);
    }
  }
  return weights.alpha_kl * (parts.kl_e + parts.kl_g) +
         weights.alpha_c * (parts.cons_e + parts.cons_g) +
         weights.alpha_adv * (parts.adv_global + parts.adv_local);
}

}  // namespace piig
