#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adam.hpp"
#include "adaptation.hpp"
#include "backbone.hpp"
#include "metrics.hpp"
#include "sampling.hpp"
#include "sr.hpp"
#include "tape.hpp"

namespace lfsafa {

enum class TrainPhase { Backbone, Adaptation };

struct TrainConfig {
  int scale = 2;
  int patch = 32;  // LR pixels
  int batch = 4;
  int epochs = 250;
  int batches_per_epoch = 1000;
  double lr0 = 1e-4;
  double lr_decay = 0.5;
  int decay_every = 50;  // epochs
  uint64_t seed = 0;
  TrainPhase phase = TrainPhase::Backbone;
  int a = 5;
  AdaptFlags flags;
  int width = 64;     // backbone feature channels
  int exchange = 32;  // adaptation exchange channels
  int blocks = 4;     // backbone residual blocks
  int sas_k = 3;      // adaptation conv kernel size

  void validate() const {
    require(scale == 2 || scale == 4, ErrorKind::InvalidArgument,
            "scale must be 2 or 4, got " + std::to_string(scale));
    require(patch >= 8, ErrorKind::InvalidArgument, "patch must be >= 8 LR px");
    require(batch >= 1 && epochs >= 0 && batches_per_epoch >= 1, ErrorKind::InvalidArgument,
            "batch and batches_per_epoch must be positive, epochs >= 0");
    require(lr0 > 0 && lr_decay > 0 && lr_decay <= 1 && decay_every >= 1,
            ErrorKind::InvalidArgument, "bad learning-rate schedule");
    require(a >= 1, ErrorKind::InvalidArgument, "angular resolution must be >= 1");
    require(width >= 1 && exchange >= 1 && blocks >= 0, ErrorKind::InvalidArgument,
            "bad channel or depth config");
    require(sas_k % 2 == 1, ErrorKind::InvalidArgument, "sas kernel size must be odd");
  }
};

inline TrainConfig paper_config() { return {}; }

// Small enough to train on one core in seconds to minutes.
inline TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batches_per_epoch = 100;
  cfg.a = 3;
  cfg.patch = 16;
  cfg.batch = 2;
  cfg.width = 32;
  cfg.exchange = 16;
  cfg.blocks = 4;
  return cfg;
}

// Repeated exact halving, so the trace matches literal doubles 5e-5, 2.5e-5...
inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  double lr = cfg.lr0;
  for (int k = 0; k < epoch / cfg.decay_every; ++k) lr *= cfg.lr_decay;
  return lr;
}

inline std::vector<double> lr_trace(const TrainConfig& cfg) {
  std::vector<double> out;
  for (int e = 0; e < cfg.epochs; ++e) out.push_back(lr_at_epoch(cfg, e));
  return out;
}

inline void log_line(std::ostream* log, int step, int epoch, double lr, double loss,
                     double psnr_val = std::numeric_limits<double>::quiet_NaN()) {
  if (!log) return;
  nlohmann::json j = {{"step", step}, {"epoch", epoch}, {"lr", lr}, {"loss", loss}};
  if (!std::isnan(psnr_val)) j["psnr_val"] = psnr_val;
  *log << j.dump() << "\n";
}

// ---- dataset preparation ----

struct LfPairs {
  std::vector<LightField<float>> lr, hr;
};

// Luminance + modcrop to a multiple of the scale, then bicubic degrade.
inline LfPairs prepare_lf_pairs(const std::vector<LightField<float>>& dataset, int scale) {
  LfPairs out;
  for (const LightField<float>& lf : dataset) {
    lf.validate();
    LightField<float> hr = lf_map(lf_to_y(lf), [&](const Tensor<float>& v) {
      return modcrop(v, scale);
    });
    out.hr.push_back(hr);
    out.lr.push_back(lf_map(hr, [&](const Tensor<float>& v) {
      return bicubic_resize(v, v.dim(1) / scale, v.dim(2) / scale);
    }));
  }
  return out;
}

inline size_t validation_count(size_t n) { return n / 10; }

// ---- phase 1: backbone on independent single views ----

namespace detail {

struct ImagePair {
  Tensor<float> lr, hr;
};

inline ImagePair sample_image_patch(const std::vector<ImagePair>& images, int p, int scale,
                                    Rng& rng) {
  const ImagePair& src = images[static_cast<size_t>(rng.uniform_int(static_cast<int>(images.size())))];
  const int oy = rng.uniform_int(src.lr.dim(1) - p + 1);
  const int ox = rng.uniform_int(src.lr.dim(2) - p + 1);
  ImagePair out;
  out.lr = crop(src.lr, oy, ox, p, p);
  out.hr = crop(src.hr, scale * oy, scale * ox, scale * p, scale * p);
  const int rot_k = rng.uniform_int(4);
  const bool hf = rng.coin(), vf = rng.coin();
  for (int k = 0; k < rot_k; ++k) {
    out.lr = rot90_t(out.lr);
    out.hr = rot90_t(out.hr);
  }
  if (hf) {
    out.lr = hflip_t(out.lr);
    out.hr = hflip_t(out.hr);
  }
  if (vf) {
    out.lr = vflip_t(out.lr);
    out.hr = vflip_t(out.hr);
  }
  return out;
}

}  // namespace detail

inline BackboneParams<float> train_backbone(const std::vector<LightField<float>>& dataset,
                                            const TrainConfig& cfg,
                                            std::ostream* log = nullptr) {
  cfg.validate();
  require(!dataset.empty(), ErrorKind::InvalidArgument, "training dataset is empty");
  Rng root(cfg.seed);
  Rng init_rng = root.fork(0);
  Rng data_rng = root.fork(1);

  BackboneParams<float> bb = make_backbone<float>(init_rng, cfg.scale, 1, cfg.width, cfg.blocks);

  LfPairs pairs = prepare_lf_pairs(dataset, cfg.scale);
  const size_t val_n = validation_count(pairs.hr.size());
  const size_t train_n = pairs.hr.size() - val_n;
  std::vector<detail::ImagePair> train_imgs, val_imgs;
  for (size_t i = 0; i < pairs.hr.size(); ++i)
    for (size_t v = 0; v < pairs.hr[i].views.size(); ++v) {
      detail::ImagePair ip{pairs.lr[i].views[v], pairs.hr[i].views[v]};
      (i < train_n ? train_imgs : val_imgs).push_back(std::move(ip));
    }
  for (const detail::ImagePair& ip : train_imgs)
    require(ip.lr.dim(1) >= cfg.patch && ip.lr.dim(2) >= cfg.patch, ErrorKind::InvalidArgument,
            "a training view is smaller than the " + std::to_string(cfg.patch) + " px patch");

  AdamState<float> opt;
  const int total_steps = cfg.epochs * cfg.batches_per_epoch;
  for (int step = 0; step < total_steps; ++step) {
    const int epoch = step / cfg.batches_per_epoch;
    const double lr = lr_at_epoch(cfg, epoch);

    Tape<float> tape;
    std::vector<ParamRef<float>> refs;
    BackboneVars<float> vars = register_backbone(tape, bb, &refs);
    typename Tape<float>::Var total;
    for (int b = 0; b < cfg.batch; ++b) {
      detail::ImagePair pp = detail::sample_image_patch(train_imgs, cfg.patch, cfg.scale, data_rng);
      auto x = tape.constant(pp.lr);
      auto out = tape_upscale(tape, tape_extract_features(tape, x, vars), vars);
      auto loss = tape.l1_loss(out, tape.constant(pp.hr));
      total = b == 0 ? loss : tape.add(total, loss);
    }
    total = tape.scale(total, 1.0f / static_cast<float>(cfg.batch));
    const double loss_val = tape.value(total).data[0];
    require(std::isfinite(loss_val), ErrorKind::NotFinite,
            "loss is not finite at step " + std::to_string(step));
    tape.backward(total);

    std::vector<Tensor<float>*> params;
    std::vector<const Tensor<float>*> grads;
    std::vector<std::string> names;
    for (const ParamRef<float>& r : refs) {
      params.push_back(r.tensor);
      grads.push_back(&tape.grad(r.var));
      names.push_back(r.name);
    }
    adam_step<float>(params, grads, names, opt, static_cast<float>(lr));

    const bool epoch_end = (step + 1) % cfg.batches_per_epoch == 0;
    if (epoch_end && !val_imgs.empty()) {
      double psum = 0.0;
      for (const detail::ImagePair& ip : val_imgs) {
        Tensor<float> sr = upscale(extract_features(ip.lr, bb), bb, cfg.scale);
        const int sh = cfg.scale;
        psum += psnr(crop(ip.hr, sh, sh, ip.hr.dim(1) - 2 * sh, ip.hr.dim(2) - 2 * sh),
                     crop(sr, sh, sh, sr.dim(1) - 2 * sh, sr.dim(2) - 2 * sh));
      }
      log_line(log, step, epoch, lr, loss_val, psum / static_cast<double>(val_imgs.size()));
    } else {
      log_line(log, step, epoch, lr, loss_val);
    }
  }
  return bb;
}

// ---- phase 2: adaptation against a frozen backbone ----

inline std::vector<PatchPair<float>> draw_adapt_batch(const LfPairs& pairs, size_t train_n,
                                                      const TrainConfig& cfg, Rng& rng) {
  std::vector<PatchPair<float>> batch;
  for (int b = 0; b < cfg.batch; ++b) {
    const size_t i = static_cast<size_t>(rng.uniform_int(static_cast<int>(train_n)));
    PatchPair<float> pp = sample_patch(pairs.lr[i], pairs.hr[i], cfg.patch, cfg.scale, rng);
    batch.push_back(random_augment(pp, rng));
  }
  return batch;
}

// Loss the trainer minimizes: per patch, L1 summed over the views; mean over
// the batch. Straight-line functional version used for step-0 checks.
inline double adapt_batch_loss(const std::vector<PatchPair<float>>& batch,
                               const BackboneParams<float>& bb,
                               const AdaptationParams<float>* adapt) {
  double total = 0.0;
  for (const PatchPair<float>& pp : batch) {
    std::vector<Tensor<float>> feats;
    for (const Tensor<float>& v : pp.lr.views) feats.push_back(extract_features(v, bb));
    if (adapt) feats = adapt_all_views(std::span<const Tensor<float>>(feats), *adapt);
    double patch_loss = 0.0;
    for (size_t i = 0; i < feats.size(); ++i)
      patch_loss += ops::l1(upscale(feats[i], bb, bb.scale), pp.hr.views[i]);
    total += patch_loss;
  }
  return total / static_cast<double>(batch.size());
}

inline AdaptationParams<float> train_adaptation(const std::vector<LightField<float>>& dataset,
                                                const BackboneParams<float>& backbone,
                                                const TrainConfig& cfg,
                                                std::ostream* log = nullptr) {
  cfg.validate();
  require(!dataset.empty(), ErrorKind::InvalidArgument, "training dataset is empty");
  require(backbone.frozen, ErrorKind::InvalidState,
          "adaptation training requires a frozen backbone; freeze it first");
  require(backbone.scale == cfg.scale, ErrorKind::InvalidArgument,
          "backbone is x" + std::to_string(backbone.scale) + ", config asks for x" +
              std::to_string(cfg.scale));
  for (const LightField<float>& lf : dataset)
    require(lf.a == cfg.a, ErrorKind::ShapeMismatch,
            "dataset light field has a=" + std::to_string(lf.a) + ", config expects a=" +
                std::to_string(cfg.a));

  Rng root(cfg.seed);
  Rng init_rng = root.fork(0);
  Rng data_rng = root.fork(1);
  AdaptationParams<float> adapt = make_adaptation<float>(init_rng, cfg.a, backbone.width(),
                                                         cfg.exchange, cfg.sas_k, cfg.flags);

  LfPairs pairs = prepare_lf_pairs(dataset, cfg.scale);
  const size_t val_n = validation_count(pairs.hr.size());
  const size_t train_n = pairs.hr.size() - val_n;

  // the frozen weights only ever enter the tape as constants
  BackboneParams<float>& bb = const_cast<BackboneParams<float>&>(backbone);

  AdamState<float> opt;
  const int total_steps = cfg.epochs * cfg.batches_per_epoch;
  for (int step = 0; step < total_steps; ++step) {
    const int epoch = step / cfg.batches_per_epoch;
    const double lr = lr_at_epoch(cfg, epoch);
    std::vector<PatchPair<float>> batch = draw_adapt_batch(pairs, train_n, cfg, data_rng);

    Tape<float> tape;
    std::vector<ParamRef<float>> refs;
    BackboneVars<float> bvars = register_backbone(tape, bb, &refs);
    AdaptationVars<float> avars = register_adaptation(tape, adapt, &refs);
    typename Tape<float>::Var total;
    for (int b = 0; b < cfg.batch; ++b) {
      const PatchPair<float>& pp = batch[static_cast<size_t>(b)];
      std::vector<typename Tape<float>::Var> feats;
      for (const Tensor<float>& v : pp.lr.views)
        feats.push_back(tape_extract_features(tape, tape.constant(v), bvars));
      std::vector<typename Tape<float>::Var> adapted = tape_adapt_all_views(
          tape, std::span<const typename Tape<float>::Var>(feats), avars);
      typename Tape<float>::Var patch_loss;
      for (size_t i = 0; i < adapted.size(); ++i) {
        auto out = tape_upscale(tape, adapted[i], bvars);
        auto l = tape.l1_loss(out, tape.constant(pp.hr.views[i]));
        patch_loss = i == 0 ? l : tape.add(patch_loss, l);
      }
      total = b == 0 ? patch_loss : tape.add(total, patch_loss);
    }
    total = tape.scale(total, 1.0f / static_cast<float>(cfg.batch));
    const double loss_val = tape.value(total).data[0];
    require(std::isfinite(loss_val), ErrorKind::NotFinite,
            "loss is not finite at step " + std::to_string(step));
    tape.backward(total);

    std::vector<Tensor<float>*> params;
    std::vector<const Tensor<float>*> grads;
    std::vector<std::string> names;
    for (const ParamRef<float>& r : refs) {
      params.push_back(r.tensor);
      grads.push_back(&tape.grad(r.var));
      names.push_back(r.name);
    }
    adam_step<float>(params, grads, names, opt, static_cast<float>(lr));

    const bool epoch_end = (step + 1) % cfg.batches_per_epoch == 0;
    if (epoch_end && val_n > 0) {
      double psum = 0.0;
      for (size_t i = train_n; i < pairs.hr.size(); ++i) {
        LightField<float> sr = super_resolve_lf(pairs.lr[i], backbone, &adapt);
        psum += evaluate_lf(sr, pairs.hr[i], cfg.scale).mean_psnr;
      }
      log_line(log, step, epoch, lr, loss_val, psum / static_cast<double>(val_n));
    } else {
      log_line(log, step, epoch, lr, loss_val);
    }
  }
  return adapt;
}

}  // namespace lfsafa
