#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "piig/dual.hpp"
#include "piig/networks.hpp"
#include "piig/tensor.hpp"

namespace piig {

struct LossWeights {
  float alpha_kl = 10.0f;
  float alpha_c = 0.9f;
  float alpha_adv = 1.0f;
  float lambda = 10.0f;  // gradient penalty coefficient
};

struct LossReport {
  std::int64_t iteration = 0;
  double kl_e = 0;
  double kl_g = 0;
  double cons_e = 0;
  double cons_g = 0;
  double latent_cons = 0;
  double adv_global = 0;
  double adv_local = 0;
  double total = 0;
};

// KL(N(mean, exp(logvar)) || N(0, I)), summed over the code and averaged
// over the batch: -1/2 * sum(1 + logvar - mean^2 - exp(logvar)) / N.
Tensor kl_divergence(const Tensor& mean, const Tensor& logvar);

// Mean absolute difference.
Tensor consistency_loss(const Tensor& a, const Tensor& b);
Tensor latent_consistency_loss(const Tensor& z_f, const Tensor& z);

// The three views of one critic that the penalty machinery needs: a live
// recorded score, a score over detached parameters (for probing input
// gradients without touching parameter gradients), and a live dual pass.
struct CriticOps {
  std::function<Tensor(const Tensor&)> score;
  std::function<Tensor(const Tensor&)> score_detached;
  std::function<Dual(const Dual&)> score_dual;
};

CriticOps make_critic_ops(const CriticStack& critic);

// Two-sided unit-norm gradient penalty on per-sample interpolates
// u*real + (1-u)*fake: mean over the batch of (||g|| - 1)^2 where g is the
// critic's input gradient, optionally zeroed on known pixels (mask 1)
// before the norm. The returned scalar backpropagates into the critic's
// parameters through a directional-derivative surrogate when score_dual is
// available; otherwise it is a constant.
Tensor gradient_penalty(const CriticOps& ops, const Tensor& real,
                        const Tensor& fake, std::span<const float> u,
                        const Tensor* mask = nullptr);

struct CriticLoss {
  Tensor total;        // recorded: E[D(fake)] - E[D(real)] + lambda * penalty
  double wasserstein;  // E[D(fake)] - E[D(real)]
  double penalty;
};

CriticLoss critic_loss(const CriticOps& ops, const Tensor& real,
                       const Tensor& fake, std::span<const float> u,
                       float lambda, const Tensor* mask = nullptr);

// -E[D(fake)] with gradients flowing into the fake images only; pass a
// score closure over detached critic parameters.
Tensor generator_adv_loss(const std::function<Tensor(const Tensor&)>& score,
                          const Tensor& fake);

// Weighted sum of the reported parts; latent consistency is tracked
// separately and deliberately not part of this value.
double total_objective(const LossReport& parts, const LossWeights& weights);

}  // namespace piig
