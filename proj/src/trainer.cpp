#include "piig/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "piig/checkpoint.hpp"

namespace piig {

namespace fs = std::filesystem;

const char* const kLossCsvHeader =
    "iteration,kl_e,kl_g,cons_e,cons_g,latent_cons,adv_global,adv_local,total";

std::string loss_report_csv_row(const LossReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                static_cast<long long>(r.iteration), r.kl_e, r.kl_g, r.cons_e,
                r.cons_g, r.latent_cons, r.adv_global, r.adv_local, r.total);
  return buf;
}

TrainState TrainState::init(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.rng = RngStream(cfg.seed);
  s.extractor = ExtractorNet::init(cfg.image_channels, cfg.resolution,
                                   cfg.latent_dim, s.rng);
  s.generator = GeneratorNet::init(cfg.image_channels, cfg.latent_dim, s.rng);
  s.critics = CriticNets::init(cfg.image_channels, cfg.resolution, cfg.hole_h,
                               cfg.hole_w, s.rng);
  const AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8f};
  NetworkParams pe = s.extractor.params("extractor");
  NetworkParams pg = s.generator.params("generator");
  NetworkParams pdg = s.critics.global_net.params("critic_global");
  NetworkParams pdl = s.critics.local_net.params("critic_local");
  s.opt_extractor = AdamState::init(pe, adam);
  s.opt_generator = AdamState::init(pg, adam);
  s.opt_global = AdamState::init(pdg, adam);
  s.opt_local = AdamState::init(pdl, adam);
  return s;
}

namespace {

Tensor gather_batch(const Dataset& data, const std::vector<std::size_t>& idx) {
  const Shape4 s0 = data.images.at(idx.at(0)).shape();
  const std::int64_t per = s0.numel();
  std::vector<float> out(static_cast<std::size_t>(per) * idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Tensor& img = data.images.at(idx[i]);
    if (!(img.shape() == s0)) {
      throw std::invalid_argument("gather_batch: inconsistent image shapes");
    }
    std::copy(img.data(), img.data() + per, out.begin() + i * per);
  }
  return Tensor::from_data(
      {static_cast<int>(idx.size()), s0.c, s0.h, s0.w}, std::move(out));
}

std::vector<std::size_t> draw_indices(RngStream& rng, std::size_t count,
                                      std::size_t upper) {
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(upper));
  return idx;
}

Tensor draw_normal_tensor(RngStream& rng, Shape4 shape) {
  std::vector<float> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = rng.normal();
  return Tensor::from_data(shape, std::move(v));
}

std::vector<float> draw_uniforms(RngStream& rng, int count) {
  std::vector<float> u(static_cast<std::size_t>(count));
  for (auto& x : u) x = rng.uniform();
  return u;
}

double checked(double v, const char* term, std::int64_t iteration) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("train: non-finite loss term '" +
                             std::string(term) + "' at iteration " +
                             std::to_string(iteration));
  }
  return v;
}

}  // namespace

ReconResult reconstruction_path(const ExtractorNet& extractor,
                                const GeneratorNet& generator,
                                const Tensor& ground_truth, const Tensor& mask,
                                const Tensor& eps) {
  const Shape4 s = ground_truth.shape();
  ReconResult out;
  out.latent = extractor.forward(ground_truth);
  Tensor z = reparameterize(out.latent, eps);
  Tensor masked = apply_mask(ground_truth, mask);
  Tensor pred = generator.forward(masked, mask, tile_latent(z, s.h, s.w));
  out.i_cr = composite(masked, pred, mask);
  out.kl = kl_divergence(out.latent.mean, out.latent.logvar);
  out.cons = consistency_loss(out.i_cr, ground_truth);
  return out;
}

GenResult generative_path(const ExtractorNet& extractor,
                          const GeneratorNet& generator,
                          const CriticNets* critics, const Tensor& raw,
                          const Tensor& mask, const Tensor& z) {
  const Shape4 s = raw.shape();
  GenResult out;
  Tensor masked = apply_mask(raw, mask);
  Tensor pred = generator.forward(masked, mask, tile_latent(z, s.h, s.w));
  out.i_cf = composite(masked, pred, mask);
  LatentSample read_back = extractor.forward(out.i_cf);
  out.latent_cons = latent_consistency_loss(read_back.mean, z);
  out.kl = kl_divergence(read_back.mean, read_back.logvar);
  out.cons = consistency_loss(out.i_cf, raw);
  if (critics) {
    const HoleBox box = mask_hole_bbox(mask);
    CriticStack frozen_global = critics->global_net.detached();
    out.adv_global = generator_adv_loss(
        [&frozen_global](const Tensor& x) { return frozen_global.score(x); },
        out.i_cf);
    if (!box.empty()) {
      CriticStack frozen_local = critics->local_net.detached();
      Tensor crop = crop_spatial(out.i_cf, box.top, box.left, box.h, box.w);
      out.adv_local = generator_adv_loss(
          [&frozen_local](const Tensor& x) { return frozen_local.score(x); },
          crop);
    } else {
      out.adv_local = Tensor::scalar(0.0f);
    }
  }
  return out;
}

CriticStepLosses critic_step(TrainState& state, const TrainConfig& cfg,
                             const Tensor& real, const Tensor& fake,
                             const Tensor& mask,
                             std::span<const float> u_global,
                             std::span<const float> u_local) {
  CriticStepLosses out;
  const float lambda = cfg.weights.lambda;

  {
    CriticOps ops = make_critic_ops(state.critics.global_net);
    CriticLoss loss = critic_loss(ops, real, fake, u_global, lambda, nullptr);
    out.global_total = loss.total.item();
    out.global_wasserstein = loss.wasserstein;
    out.global_penalty = loss.penalty;
    NetworkParams p = state.critics.global_net.params("critic_global");
    backward(loss.total);
    adam_step(p, state.opt_global);
    zero_grads(p);
  }

  const HoleBox box = mask_hole_bbox(mask);
  if (!box.empty()) {
    Tensor real_crop = crop_spatial(real, box.top, box.left, box.h, box.w);
    Tensor fake_crop = crop_spatial(fake, box.top, box.left, box.h, box.w);
    Tensor mask_crop = crop_spatial(mask, box.top, box.left, box.h, box.w);
    CriticOps ops = make_critic_ops(state.critics.local_net);
    CriticLoss loss =
        critic_loss(ops, real_crop, fake_crop, u_local, lambda, &mask_crop);
    out.local_total = loss.total.item();
    out.local_wasserstein = loss.wasserstein;
    out.local_penalty = loss.penalty;
    NetworkParams p = state.critics.local_net.params("critic_local");
    backward(loss.total);
    adam_step(p, state.opt_local);
    zero_grads(p);
  }
  return out;
}

TrainRun train(const TrainConfig& cfg, const Dataset& data, TrainState& state,
               const TrainObserver& observer) {
  cfg.validate();
  if (data.images.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (data.resolution != cfg.resolution) {
    throw std::invalid_argument(
        "train: dataset resolution " + std::to_string(data.resolution) +
        " does not match config resolution " + std::to_string(cfg.resolution));
  }

  const int b = cfg.batch_size;
  const int j = cfg.latent_dim;
  Tensor mask =
      make_center_mask(cfg.resolution, cfg.resolution, cfg.hole_h, cfg.hole_w);

  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / "losses.csv";
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    csv.open(path, std::ios::app);
    if (!csv) throw std::runtime_error("train: cannot open " + path.string());
    if (fresh) csv << kLossCsvHeader << "\n";
  }

  NetworkParams pe = state.extractor.params("extractor");
  NetworkParams pg = state.generator.params("generator");

  TrainRun run;
  while (state.iteration < cfg.iterations) {
    const std::int64_t iter = state.iteration + 1;

    // One iteration draws from the stream in a fixed order: reconstruction
    // batch, its eps, then per critic step (batch, z, u_global, u_local),
    // then the prior-path batch and its z. Never reorder these.
    const auto recon_idx = draw_indices(state.rng, b, data.images.size());
    Tensor eps = draw_normal_tensor(state.rng, {b, j, 1, 1});

    CriticStepLosses critic_losses;
    for (int k = 0; k < cfg.n_critic; ++k) {
      const auto idx = draw_indices(state.rng, b, data.images.size());
      Tensor z = draw_normal_tensor(state.rng, {b, j, 1, 1});
      const auto u_global = draw_uniforms(state.rng, b);
      const auto u_local = draw_uniforms(state.rng, b);

      Tensor real = gather_batch(data, idx);
      // Fakes for critic training come from a no-graph generator pass.
      GeneratorNet frozen = state.generator.detached();
      Tensor masked = apply_mask(real, mask);
      Tensor pred = frozen.forward(
          masked, mask, tile_latent(z, cfg.resolution, cfg.resolution));
      Tensor fake = composite(masked, pred, mask);
      critic_losses =
          critic_step(state, cfg, real, fake, mask, u_global, u_local);
    }

    const auto gen_idx = draw_indices(state.rng, b, data.images.size());
    Tensor z_gen = draw_normal_tensor(state.rng, {b, j, 1, 1});

    Tensor gt = gather_batch(data, recon_idx);
    Tensor raw = gather_batch(data, gen_idx);

    ReconResult recon =
        reconstruction_path(state.extractor, state.generator, gt, mask, eps);
    GenResult gen = generative_path(state.extractor, state.generator,
                                    &state.critics, raw, mask, z_gen);

    LossReport report;
    report.iteration = iter;
    report.kl_e = checked(recon.kl.item(), "kl_e", iter);
    report.kl_g = checked(gen.kl.item(), "kl_g", iter);
    report.cons_e = checked(recon.cons.item(), "cons_e", iter);
    report.cons_g = checked(gen.cons.item(), "cons_g", iter);
    report.latent_cons = checked(gen.latent_cons.item(), "latent_cons", iter);
    report.adv_global = checked(gen.adv_global.item(), "adv_global", iter);
    report.adv_local = checked(gen.adv_local.item(), "adv_local", iter);
    report.total = checked(total_objective(report, cfg.weights), "total", iter);

    // The optimized objective also carries the latent consistency term,
    // weighted like the image consistency losses; the reported total is the
    // weighted sum of the named parts alone.
    const LossWeights& w = cfg.weights;
    Tensor objective = add(
        add(scale(add(recon.kl, gen.kl), w.alpha_kl),
            scale(add(add(recon.cons, gen.cons), gen.latent_cons), w.alpha_c)),
        scale(add(gen.adv_global, gen.adv_local), w.alpha_adv));
    backward(objective);
    adam_step(pg, state.opt_generator);
    adam_step(pe, state.opt_extractor);
    zero_grads(pg);
    zero_grads(pe);

    state.iteration = iter;
    run.reports.push_back(report);

    if (observer) {
      observer(IterationArtifacts{iter, gt, recon.i_cr, raw, gen.i_cf, mask});
    }
    if (csv.is_open() && (iter % cfg.log_interval == 0)) {
      csv << loss_report_csv_row(report) << "\n";
      csv.flush();
    }
    if (!cfg.out_dir.empty() && (iter % cfg.checkpoint_interval == 0) &&
        iter < cfg.iterations) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06lld.piig",
                    static_cast<long long>(iter));
      save_checkpoint((fs::path(cfg.out_dir) / name).string(), cfg, state);
    }
    (void)critic_losses;
  }

  if (!cfg.out_dir.empty()) {
    save_checkpoint((fs::path(cfg.out_dir) / "ckpt_final.piig").string(), cfg,
                    state);
  }
  return run;
}

TrainRun train(const TrainConfig& cfg, const Dataset& data,
               const TrainObserver& observer) {
  TrainState state = TrainState::init(cfg);
  return train(cfg, data, state, observer);
}

}  // namespace piig
