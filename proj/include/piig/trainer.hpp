#pragma once

#include <functional>
#include <vector>

#include "piig/adam.hpp"
#include "piig/config.hpp"
#include "piig/data.hpp"
#include "piig/latent.hpp"
#include "piig/losses.hpp"
#include "piig/networks.hpp"
#include "piig/rng.hpp"

namespace piig {

// Everything a training run carries between iterations. The single RNG
// stream drives every draw in a fixed order, so restoring a serialized
// state continues a run bit for bit.
struct TrainState {
  std::int64_t iteration = 0;
  ExtractorNet extractor;
  GeneratorNet generator;
  CriticNets critics;
  AdamState opt_extractor;
  AdamState opt_generator;
  AdamState opt_global;
  AdamState opt_local;
  RngStream rng{0};

  static TrainState init(const TrainConfig& cfg);
};

// Encoder path: the extractor reads the intact image, the code is
// reparameterized, and the generator repaints the hole.
struct ReconResult {
  Tensor i_cr;
  Tensor kl;
  Tensor cons;
  LatentSample latent;
};
ReconResult reconstruction_path(const ExtractorNet& extractor,
                                const GeneratorNet& generator,
                                const Tensor& ground_truth, const Tensor& mask,
                                const Tensor& eps);

// Prior path: a code drawn from the prior drives the generator; the
// extractor then reads the completion back. Critic scores are taken over
// detached critic parameters when critics are supplied.
struct GenResult {
  Tensor i_cf;
  Tensor kl;
  Tensor cons;
  Tensor latent_cons;
  Tensor adv_global;  // undefined when critics are absent
  Tensor adv_local;
};
GenResult generative_path(const ExtractorNet& extractor,
                          const GeneratorNet& generator,
                          const CriticNets* critics, const Tensor& raw,
                          const Tensor& mask, const Tensor& z);

// One Adam update of both critics on a real batch and detached fakes.
struct CriticStepLosses {
  double global_total = 0, global_wasserstein = 0, global_penalty = 0;
  double local_total = 0, local_wasserstein = 0, local_penalty = 0;
};
CriticStepLosses critic_step(TrainState& state, const TrainConfig& cfg,
                             const Tensor& real, const Tensor& fake,
                             const Tensor& mask,
                             std::span<const float> u_global,
                             std::span<const float> u_local);

struct IterationArtifacts {
  std::int64_t iteration = 0;
  const Tensor& recon_input;
  const Tensor& recon_output;
  const Tensor& gen_input;
  const Tensor& gen_output;
  const Tensor& mask;
};
using TrainObserver = std::function<void(const IterationArtifacts&)>;

struct TrainRun {
  std::vector<LossReport> reports;
};

// Runs from state.iteration + 1 through cfg.iterations. When cfg.out_dir is
// set, appends losses.csv rows every log_interval iterations and writes
// checkpoints every checkpoint_interval iterations plus a final one.
TrainRun train(const TrainConfig& cfg, const Dataset& data, TrainState& state,
               const TrainObserver& observer = {});
TrainRun train(const TrainConfig& cfg, const Dataset& data,
               const TrainObserver& observer = {});

// CSV row layout shared by the trainer and its tests.
extern const char* const kLossCsvHeader;
std::string loss_report_csv_row(const LossReport& report);

}  // namespace piig
