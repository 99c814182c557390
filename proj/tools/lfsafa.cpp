#include <CLI11.hpp>
#include <json.hpp>

#include <lfsafa/checkpoint.hpp>
#include <lfsafa/composite_check.hpp>
#include <lfsafa/metrics.hpp>
#include <lfsafa/sr.hpp>
#include <lfsafa/synth.hpp>
#include <lfsafa/train.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t hash_file(const fs::path& p) {
  return lfsafa::fnv1a64(lfsafa::detail::read_file(p.string()));
}

// Digest of a directory tree: sorted relative paths chained with file bytes.
uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  uint64_t h = 0xcbf29ce484222325ull;
  for (const fs::path& f : files) {
    const std::string rel = fs::relative(f, root).generic_string();
    h = lfsafa::fnv1a64(rel.data(), rel.size(), h);
    const std::string bytes = lfsafa::detail::read_file(f.string());
    h = lfsafa::fnv1a64(bytes.data(), bytes.size(), h);
  }
  return h;
}

uint64_t hash_path(const fs::path& p) {
  return fs::is_directory(p) ? hash_tree(p) : hash_file(p);
}

// Reserve an output location. Existing paths are only replaced under --force.
void claim_out(const fs::path& out, bool force) {
  if (fs::exists(out)) {
    lfsafa::require(force, lfsafa::ErrorKind::Usage,
                    "output " + out.string() + " already exists; pass --force to replace it");
    fs::remove_all(out);
  }
  fs::create_directories(out);
}

// Every run drops config.json (resolved settings) and manifest.json (input
// digests, config digest, and a digest per output file) into its output dir.
void write_provenance(const fs::path& out, const json& config,
                      const std::vector<fs::path>& inputs) {
  const std::string cfg_text = config.dump(2) + "\n";
  {
    std::ofstream f(out / "config.json", std::ios::binary);
    f << cfg_text;
  }
  json manifest;
  manifest["config_digest"] = lfsafa::hex64(lfsafa::fnv1a64(cfg_text));
  manifest["inputs"] = json::object();
  for (const fs::path& in : inputs)
    manifest["inputs"][in.generic_string()] = lfsafa::hex64(hash_path(in));
  manifest["outputs"] = json::object();
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files)
    manifest["outputs"][fs::relative(f, out).generic_string()] = lfsafa::hex64(hash_file(f));
  std::ofstream f(out / "manifest.json", std::ios::binary);
  f << manifest.dump(2) << "\n";
}

int infer_angular(const fs::path& dir) {
  int best = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".png") continue;
    int u = 0, v = 0;
    if (std::sscanf(e.path().filename().string().c_str(), "view_%d_%d", &u, &v) == 2)
      best = std::max({best, u + 1, v + 1});
  }
  lfsafa::require(best > 0, lfsafa::ErrorKind::Usage,
                  "no view_*.png files under " + dir.string() +
                      "; for macro-pixel input pass --angular");
  return best;
}

lfsafa::LightField<float> load_lf(const fs::path& path, std::optional<int> angular) {
  lfsafa::require(fs::exists(path), lfsafa::ErrorKind::Io,
                  "no such file or directory: " + path.string());
  if (fs::is_directory(path))
    return lfsafa::read_lf_dir(path.string(), angular ? *angular : infer_angular(path));
  lfsafa::require(angular.has_value(), lfsafa::ErrorKind::Usage,
                  "--angular is required to decode macro-pixel input " + path.string());
  return lfsafa::decode_macro_pixel(lfsafa::read_png(path.string()), *angular);
}

// A dataset directory holds one subdirectory of view images per light field.
std::vector<lfsafa::LightField<float>> load_dataset(const fs::path& dir,
                                                    std::optional<int> angular) {
  lfsafa::require(fs::is_directory(dir), lfsafa::ErrorKind::Usage,
                  "dataset " + dir.string() + " is not a directory");
  std::vector<fs::path> subs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / lfsafa::view_filename(0, 0)))
      subs.push_back(e.path());
  std::sort(subs.begin(), subs.end());
  lfsafa::require(!subs.empty(), lfsafa::ErrorKind::Usage,
                  "no light fields under " + dir.string() +
                      " (expected subdirectories holding view_u_v.png images)");
  std::vector<lfsafa::LightField<float>> ds;
  for (const fs::path& s : subs) ds.push_back(load_lf(s, angular));
  for (const auto& lf : ds)
    lfsafa::require(lf.a == ds[0].a, lfsafa::ErrorKind::Format,
                    "light fields under " + dir.string() + " disagree on angular resolution (" +
                        std::to_string(ds[0].a) + " vs " + std::to_string(lf.a) + ")");
  return ds;
}

// ---- decode / encode ----------------------------------------------------

struct DecodeCli {
  std::string in, out;
  int angular = 0;
  int bits = 8;
  bool force = false;
};

int cmd_decode(const DecodeCli& c) {
  const lfsafa::LightField<float> lf =
      lfsafa::decode_macro_pixel(lfsafa::read_png(c.in), c.angular);
  claim_out(c.out, c.force);
  lfsafa::write_lf_dir(lf, c.out, c.bits);
  const json cfg = {{"command", "decode"}, {"in", c.in},     {"angular", c.angular},
                    {"out", c.out},        {"bits", c.bits}};
  write_provenance(c.out, cfg, {c.in});
  return 0;
}

struct EncodeCli {
  std::string in, out;
  std::optional<int> angular;
  int bits = 8;
  bool force = false;
};

int cmd_encode(const EncodeCli& c) {
  const lfsafa::LightField<float> lf = load_lf(c.in, c.angular);
  claim_out(c.out, c.force);
  lfsafa::write_png((fs::path(c.out) / "macro.png").string(), lfsafa::encode_macro_pixel(lf),
                    c.bits);
  const json cfg = {{"command", "encode"}, {"in", c.in},     {"angular", lf.a},
                    {"out", c.out},        {"bits", c.bits}};
  write_provenance(c.out, cfg, {c.in});
  return 0;
}

// ---- synth --------------------------------------------------------------

struct SynthCli {
  std::string out;
  int count = 5;
  int angular = 3;
  double disparity = 1.0;
  int height = 64, width = 64;
  uint64_t seed = 0;
  bool color = false;
  int bits = 8;
  bool force = false;
};

int cmd_synth(const SynthCli& c) {
  lfsafa::require(c.count >= 1, lfsafa::ErrorKind::Usage, "--count must be >= 1");
  lfsafa::require(c.height >= 8 && c.width >= 8, lfsafa::ErrorKind::Usage,
                  "--height and --width must be >= 8");
  claim_out(c.out, c.force);
  // Base images carry the margin that the view shift consumes, so the views
  // come out at the requested size.
  const int margin =
      static_cast<int>(std::ceil(std::abs(c.disparity) * (c.angular - 1) / 2.0)) + 2;
  lfsafa::Rng rng(c.seed);
  for (int i = 0; i < c.count; ++i) {
    const lfsafa::Tensor<float> base = lfsafa::make_procedural_image(
        rng, c.height + 2 * margin, c.width + 2 * margin, c.color ? 3 : 1);
    const lfsafa::LightField<float> lf = lfsafa::synth_lf(base, c.angular, c.disparity);
    char name[32];
    std::snprintf(name, sizeof name, "lf_%03d", i);
    const fs::path sub = fs::path(c.out) / name;
    fs::create_directories(sub);
    lfsafa::write_lf_dir(lf, sub.string(), c.bits);
  }
  const json cfg = {{"command", "synth"},   {"out", c.out},
                    {"count", c.count},     {"angular", c.angular},
                    {"disparity", c.disparity}, {"height", c.height},
                    {"width", c.width},     {"seed", c.seed},
                    {"color", c.color},     {"bits", c.bits}};
  write_provenance(c.out, cfg, {});
  return 0;
}

// ---- train --------------------------------------------------------------

struct TrainCli {
  std::string data, out;
  std::string phase = "backbone";
  std::string preset = "desk";
  std::string ablation = "full";
  std::string backbone;
  std::optional<int> scale, angular, epochs, batches, batch, patch;
  std::optional<int> width, blocks, exchange, sas_k;
  std::optional<double> lr;
  std::optional<uint64_t> seed;
  bool force = false;
};

json config_json(const lfsafa::TrainConfig& cfg) {
  return {{"scale", cfg.scale},
          {"patch", cfg.patch},
          {"batch", cfg.batch},
          {"epochs", cfg.epochs},
          {"batches_per_epoch", cfg.batches_per_epoch},
          {"lr0", cfg.lr0},
          {"lr_decay", cfg.lr_decay},
          {"decay_every", cfg.decay_every},
          {"seed", cfg.seed},
          {"angular", cfg.a},
          {"use_difference", cfg.flags.use_difference},
          {"use_residual", cfg.flags.use_residual},
          {"width", cfg.width},
          {"exchange", cfg.exchange},
          {"blocks", cfg.blocks},
          {"sas_k", cfg.sas_k}};
}

lfsafa::TrainConfig resolve_train_config(const TrainCli& c) {
  lfsafa::TrainConfig cfg = c.preset == "paper" ? lfsafa::paper_config() : lfsafa::desk_config();
  if (c.scale) cfg.scale = *c.scale;
  if (c.angular) cfg.a = *c.angular;
  if (c.epochs) cfg.epochs = *c.epochs;
  if (c.batches) cfg.batches_per_epoch = *c.batches;
  if (c.batch) cfg.batch = *c.batch;
  if (c.patch) cfg.patch = *c.patch;
  if (c.width) cfg.width = *c.width;
  if (c.blocks) cfg.blocks = *c.blocks;
  if (c.exchange) cfg.exchange = *c.exchange;
  if (c.sas_k) cfg.sas_k = *c.sas_k;
  if (c.lr) cfg.lr0 = *c.lr;
  if (c.seed) cfg.seed = *c.seed;
  if (c.ablation == "no-diff") cfg.flags.use_difference = false;
  if (c.ablation == "no-residual") cfg.flags.use_residual = false;
  return cfg;
}

int cmd_train(const TrainCli& c) {
  lfsafa::TrainConfig cfg = resolve_train_config(c);
  const std::vector<lfsafa::LightField<float>> ds = load_dataset(c.data, c.angular);
  if (!c.angular) cfg.a = ds[0].a;

  std::vector<fs::path> inputs = {c.data};
  lfsafa::BackboneParams<float> bb;
  if (c.phase == "adapt") {
    lfsafa::require(!c.backbone.empty(), lfsafa::ErrorKind::Usage,
                    "--phase adapt requires --backbone <checkpoint>");
    bb = lfsafa::set_frozen(lfsafa::load_backbone(c.backbone), true);
    if (!c.scale) cfg.scale = bb.scale;
    cfg.phase = lfsafa::TrainPhase::Adaptation;
    inputs.push_back(c.backbone);
  }
  cfg.validate();

  claim_out(c.out, c.force);
  std::ofstream log(fs::path(c.out) / "train_log.jsonl", std::ios::binary);
  if (c.phase == "adapt") {
    const lfsafa::AdaptationParams<float> ad = lfsafa::train_adaptation(ds, bb, cfg, &log);
    lfsafa::save_adaptation((fs::path(c.out) / "adaptation.ckpt").string(), ad);
  } else {
    bb = lfsafa::train_backbone(ds, cfg, &log);
    lfsafa::save_backbone((fs::path(c.out) / "backbone.ckpt").string(),
                          lfsafa::set_frozen(bb, true));
  }
  log.close();

  json cfg_json = config_json(cfg);
  cfg_json["command"] = "train";
  cfg_json["phase"] = c.phase;
  cfg_json["preset"] = c.preset;
  cfg_json["ablation"] = c.ablation;
  cfg_json["data"] = c.data;
  if (!c.backbone.empty()) cfg_json["backbone"] = c.backbone;
  write_provenance(c.out, cfg_json, inputs);
  return 0;
}

// ---- sr -----------------------------------------------------------------

struct SrCli {
  std::string in, backbone, adapt, out;
  std::optional<int> angular, scale;
  int bits = 8;
  bool downscale = false;
  bool force = false;
};

int cmd_sr(const SrCli& c) {
  const lfsafa::BackboneParams<float> bb = lfsafa::load_backbone(c.backbone);
  lfsafa::require(!c.scale || *c.scale == bb.scale, lfsafa::ErrorKind::Usage,
                  "backbone checkpoint upscales x" + std::to_string(bb.scale) +
                      " but --scale asked for x" + std::to_string(c.scale.value_or(0)));
  std::optional<lfsafa::AdaptationParams<float>> ad;
  if (!c.adapt.empty()) ad = lfsafa::load_adaptation(c.adapt);
  std::optional<int> angular = c.angular;
  if (!angular && ad) angular = ad->a;
  lfsafa::LightField<float> lf = load_lf(c.in, angular);
  if (c.downscale)
    // Treat the input as ground truth: degrade it the same way training does,
    // so the output can be scored against the (modcropped) input.
    lf = lfsafa::lf_map(lf, [&](const lfsafa::Tensor<float>& v) {
      const lfsafa::Tensor<float> m = lfsafa::modcrop(v, bb.scale);
      return lfsafa::bicubic_resize(m, m.dim(1) / bb.scale, m.dim(2) / bb.scale);
    });
  const lfsafa::LightField<float> sr =
      lfsafa::super_resolve_lf(lf, bb, ad ? &*ad : nullptr);
  claim_out(c.out, c.force);
  lfsafa::write_lf_dir(sr, c.out, c.bits);
  json cfg = {{"command", "sr"}, {"in", c.in},      {"backbone", c.backbone},
              {"out", c.out},    {"angular", lf.a}, {"scale", bb.scale},
              {"bits", c.bits},  {"downscale", c.downscale}};
  std::vector<fs::path> inputs = {c.in, c.backbone};
  if (!c.adapt.empty()) {
    cfg["adapt"] = c.adapt;
    inputs.push_back(c.adapt);
  }
  write_provenance(c.out, cfg, inputs);
  return 0;
}

// ---- eval ---------------------------------------------------------------

struct EvalCli {
  std::string sr, hr, out;
  std::optional<int> angular;
  int scale = 2;
  int border = -1;
  bool quantize = false;
  bool force = false;
};

int cmd_eval(const EvalCli& c) {
  const lfsafa::LightField<float> sr = load_lf(c.sr, c.angular);
  const lfsafa::LightField<float> hr = load_lf(c.hr, c.angular);
  const lfsafa::EvalReport rep = lfsafa::evaluate_lf(sr, hr, c.scale, c.border, c.quantize);
  std::cout << rep.to_table();
  if (!c.out.empty()) {
    claim_out(c.out, c.force);
    {
      std::ofstream f(fs::path(c.out) / "report.json", std::ios::binary);
      f << rep.to_json() << "\n";
    }
    const json cfg = {{"command", "eval"},   {"sr", c.sr},
                      {"hr", c.hr},          {"out", c.out},
                      {"scale", c.scale},    {"border", c.border},
                      {"quantize", c.quantize}};
    write_provenance(c.out, cfg, {c.sr, c.hr});
  }
  return 0;
}

// ---- gradcheck ----------------------------------------------------------

struct GradcheckCli {
  int seeds = 5;
  int coords = 16;
  double eps = 1e-4;
  double tol = 1e-4;
  int angular = 2;
  int size = 8;
};

int cmd_gradcheck(const GradcheckCli& c) {
  double worst = 0.0;
  std::string worst_slot = "-";
  uint64_t worst_seed = 0;
  long checked = 0, skipped = 0;
  for (int s = 0; s < c.seeds; ++s) {
    const auto slots =
        lfsafa::composite_gradient_check(static_cast<uint64_t>(s), c.coords, c.eps, c.angular,
                                         c.size);
    double seed_worst = 0.0;
    std::string seed_slot = "-";
    for (const auto& slot : slots) {
      checked += slot.report.checked;
      skipped += slot.report.skipped;
      if (slot.report.max_rel_err > seed_worst) {
        seed_worst = slot.report.max_rel_err;
        seed_slot = slot.name;
      }
    }
    std::printf("seed %d: max rel err %.3e (%s)\n", s, seed_worst, seed_slot.c_str());
    if (seed_worst > worst) {
      worst = seed_worst;
      worst_slot = seed_slot;
      worst_seed = static_cast<uint64_t>(s);
    }
  }
  std::printf("checked %ld coordinates (%ld skipped at kinks), worst %.3e at %s (seed %llu)\n",
              checked, skipped, worst, worst_slot.c_str(),
              static_cast<unsigned long long>(worst_seed));
  lfsafa::require(checked > 0, lfsafa::ErrorKind::InvalidState,
                  "gradient check evaluated no coordinates");
  if (worst < c.tol) {
    std::printf("analytic gradients match finite differences (tol %.1e)\n", c.tol);
    return 0;
  }
  std::fprintf(stderr, "lfsafa: gradient check FAILED, %.3e exceeds tol %.1e\n", worst, c.tol);
  return 1;
}

// ---- ablate -------------------------------------------------------------

struct AblateCli {
  std::string data, backbone, out;
  int steps = 300;
  std::optional<int> angular, patch, batch, exchange;
  std::optional<double> lr;
  std::optional<uint64_t> seed;
  bool force = false;
};

struct AblationRow {
  std::string name;
  bool module = true;
  lfsafa::AdaptFlags flags;
  int sas_k = 3;
};

int cmd_ablate(const AblateCli& c) {
  const lfsafa::BackboneParams<float> bb =
      lfsafa::set_frozen(lfsafa::load_backbone(c.backbone), true);
  const std::vector<lfsafa::LightField<float>> ds = load_dataset(c.data, c.angular);
  lfsafa::require(ds.size() >= 2, lfsafa::ErrorKind::Usage,
                  "ablation needs at least 2 light fields (train + held out), got " +
                      std::to_string(ds.size()));

  lfsafa::TrainConfig cfg = lfsafa::desk_config();
  cfg.phase = lfsafa::TrainPhase::Adaptation;
  cfg.scale = bb.scale;
  cfg.a = ds[0].a;
  cfg.epochs = 1;
  cfg.batches_per_epoch = c.steps;
  if (c.patch) cfg.patch = *c.patch;
  if (c.batch) cfg.batch = *c.batch;
  if (c.exchange) cfg.exchange = *c.exchange;
  if (c.lr) cfg.lr0 = *c.lr;
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();

  // Hold out the tail of the dataset for evaluation.
  const size_t held_n = std::max<size_t>(1, ds.size() / 10);
  const std::vector<lfsafa::LightField<float>> train_set(ds.begin(),
                                                         ds.end() - static_cast<long>(held_n));
  const std::vector<lfsafa::LightField<float>> held(ds.end() - static_cast<long>(held_n),
                                                    ds.end());
  const lfsafa::LfPairs held_pairs = lfsafa::prepare_lf_pairs(held, cfg.scale);

  const std::vector<AblationRow> rows = {
      {"no-module", false, {}, 3},
      {"no-diff", true, {.use_difference = false, .use_residual = true}, 3},
      {"no-residual", true, {.use_difference = true, .use_residual = false}, 3},
      {"full-3x3", true, {.use_difference = true, .use_residual = true}, 3},
      {"full-5x5", true, {.use_difference = true, .use_residual = true}, 5},
  };

  claim_out(c.out, c.force);
  json results = json::array();
  std::printf("variant       mean_psnr_db   mean_ssim\n");
  for (const AblationRow& row : rows) {
    std::optional<lfsafa::AdaptationParams<float>> ad;
    if (row.module) {
      lfsafa::TrainConfig rc = cfg;
      rc.flags = row.flags;
      rc.sas_k = row.sas_k;
      std::ofstream log(fs::path(c.out) / ("train_" + row.name + ".jsonl"), std::ios::binary);
      ad = lfsafa::train_adaptation(train_set, bb, rc, &log);
    }
    double psum = 0.0, ssum = 0.0;
    for (size_t i = 0; i < held_pairs.lr.size(); ++i) {
      const lfsafa::LightField<float> sr =
          lfsafa::super_resolve_lf(held_pairs.lr[i], bb, ad ? &*ad : nullptr);
      const lfsafa::EvalReport rep = lfsafa::evaluate_lf(sr, held_pairs.hr[i], cfg.scale);
      psum += rep.mean_psnr;
      ssum += rep.mean_ssim;
    }
    const double mp = psum / held_pairs.lr.size();
    const double ms = ssum / held_pairs.lr.size();
    std::printf("%-13s %12.4f   %9.6f\n", row.name.c_str(), mp, ms);
    std::fflush(stdout);
    results.push_back({{"variant", row.name},
                       {"mean_psnr_db", mp},
                       {"mean_ssim", ms},
                       {"sas_k", row.module ? json(row.sas_k) : json(nullptr)},
                       {"use_difference", row.module ? json(row.flags.use_difference) : json(nullptr)},
                       {"use_residual", row.module ? json(row.flags.use_residual) : json(nullptr)}});
  }
  {
    std::ofstream f(fs::path(c.out) / "ablation.json", std::ios::binary);
    f << json({{"rows", results}, {"held_out", held_n}}).dump(2) << "\n";
  }
  json cfg_json = config_json(cfg);
  cfg_json["command"] = "ablate";
  cfg_json["data"] = c.data;
  cfg_json["backbone"] = c.backbone;
  cfg_json["steps"] = c.steps;
  write_provenance(c.out, cfg_json, {c.data, c.backbone});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"light-field super-resolution toolkit"};
  app.require_subcommand(1);

  DecodeCli dec;
  auto* d = app.add_subcommand("decode", "split a macro-pixel image into per-view images");
  d->add_option("--in", dec.in, "macro-pixel PNG")->required();
  d->add_option("--angular", dec.angular, "views per axis")->required();
  d->add_option("--out", dec.out, "output directory")->required();
  d->add_option("--bits", dec.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  d->add_flag("--force", dec.force, "replace existing output");

  EncodeCli enc;
  auto* e = app.add_subcommand("encode", "assemble view images into a macro-pixel image");
  e->add_option("--in", enc.in, "directory of view_u_v.png images")->required();
  e->add_option("--angular", enc.angular, "views per axis (default: inferred)");
  e->add_option("--out", enc.out, "output directory (gets macro.png)")->required();
  e->add_option("--bits", enc.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  e->add_flag("--force", enc.force, "replace existing output");

  SynthCli syn;
  auto* s = app.add_subcommand("synth", "generate a procedural light-field dataset");
  s->add_option("--out", syn.out, "output directory")->required();
  s->add_option("--count", syn.count, "number of light fields");
  s->add_option("--angular", syn.angular, "views per axis");
  s->add_option("--disparity", syn.disparity, "per-view shift in pixels");
  s->add_option("--height", syn.height, "view height");
  s->add_option("--width", syn.width, "view width");
  s->add_option("--seed", syn.seed, "generator seed");
  s->add_flag("--color", syn.color, "RGB instead of grayscale");
  s->add_option("--bits", syn.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  s->add_flag("--force", syn.force, "replace existing output");

  TrainCli tr;
  auto* t = app.add_subcommand("train", "train the backbone or the adaptation module");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--phase", tr.phase, "backbone|adapt")
      ->check(CLI::IsMember({"backbone", "adapt"}));
  t->add_option("--preset", tr.preset, "desk|paper (default desk)")
      ->check(CLI::IsMember({"desk", "paper"}));
  t->add_option("--ablation", tr.ablation, "full|no-diff|no-residual")
      ->check(CLI::IsMember({"full", "no-diff", "no-residual"}));
  t->add_option("--backbone", tr.backbone, "frozen backbone checkpoint (adapt phase)");
  t->add_option("--scale", tr.scale, "upscaling factor");
  t->add_option("--angular", tr.angular, "views per axis (default: from dataset)");
  t->add_option("--epochs", tr.epochs, "epochs");
  t->add_option("--batches", tr.batches, "batches per epoch");
  t->add_option("--batch", tr.batch, "batch size");
  t->add_option("--patch", tr.patch, "LR patch size");
  t->add_option("--lr", tr.lr, "initial learning rate");
  t->add_option("--width", tr.width, "backbone feature channels");
  t->add_option("--blocks", tr.blocks, "backbone residual blocks");
  t->add_option("--exchange", tr.exchange, "adaptation exchange channels");
  t->add_option("--sas-k", tr.sas_k, "adaptation kernel size");
  t->add_option("--seed", tr.seed, "training seed");
  t->add_flag("--force", tr.force, "replace existing output");

  SrCli sr;
  auto* r = app.add_subcommand("sr", "super-resolve a light field");
  r->add_option("--in", sr.in, "light field (view directory or macro-pixel PNG)")->required();
  r->add_option("--backbone", sr.backbone, "backbone checkpoint")->required();
  r->add_option("--adapt", sr.adapt, "adaptation checkpoint (optional)");
  r->add_option("--angular", sr.angular, "views per axis");
  r->add_option("--scale", sr.scale, "expected upscaling factor (checked)");
  r->add_option("--out", sr.out, "output directory")->required();
  r->add_flag("--downscale", sr.downscale,
              "bicubic-downscale the input by the model scale first (self-test "
              "against the input as ground truth)");
  r->add_option("--bits", sr.bits, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  r->add_flag("--force", sr.force, "replace existing output");

  EvalCli ev;
  auto* v = app.add_subcommand("eval", "report PSNR and SSIM between two light fields");
  v->add_option("--sr", ev.sr, "reconstructed light field")->required();
  v->add_option("--hr", ev.hr, "ground-truth light field")->required();
  v->add_option("--angular", ev.angular, "views per axis");
  v->add_option("--scale", ev.scale, "upscaling factor (sets default border crop)");
  v->add_option("--border", ev.border, "border crop in pixels (-1: scale)");
  v->add_flag("--quantize", ev.quantize, "quantize to 8-bit before measuring");
  v->add_option("--out", ev.out, "optional output directory for report.json");
  v->add_flag("--force", ev.force, "replace existing output");

  GradcheckCli gc;
  auto* g = app.add_subcommand("gradcheck",
                               "compare analytic gradients of the full pipeline "
                               "against finite differences");
  g->add_option("--seeds", gc.seeds, "number of random configurations");
  g->add_option("--coords", gc.coords, "coordinates sampled per tensor");
  g->add_option("--eps", gc.eps, "finite-difference step");
  g->add_option("--tol", gc.tol, "relative error tolerance");
  g->add_option("--angular", gc.angular, "views per axis");
  g->add_option("--size", gc.size, "input view size in pixels");

  AblateCli ab;
  auto* a = app.add_subcommand("ablate", "train and score the ablation matrix");
  a->add_option("--data", ab.data, "dataset directory")->required();
  a->add_option("--backbone", ab.backbone, "frozen backbone checkpoint")->required();
  a->add_option("--out", ab.out, "output directory")->required();
  a->add_option("--steps", ab.steps, "adaptation steps per variant");
  a->add_option("--angular", ab.angular, "views per axis (default: from dataset)");
  a->add_option("--patch", ab.patch, "LR patch size");
  a->add_option("--batch", ab.batch, "batch size");
  a->add_option("--exchange", ab.exchange, "adaptation exchange channels");
  a->add_option("--lr", ab.lr, "learning rate");
  a->add_option("--seed", ab.seed, "training seed");
  a->add_flag("--force", ab.force, "replace existing output");

  int rc = 0;
  d->callback([&] { rc = cmd_decode(dec); });
  e->callback([&] { rc = cmd_encode(enc); });
  s->callback([&] { rc = cmd_synth(syn); });
  t->callback([&] { rc = cmd_train(tr); });
  r->callback([&] { rc = cmd_sr(sr); });
  v->callback([&] { rc = cmd_eval(ev); });
  g->callback([&] { rc = cmd_gradcheck(gc); });
  a->callback([&] { rc = cmd_ablate(ab); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const lfsafa::Error& err) {
    std::cerr << "lfsafa: " << err.what() << "\n";
    const auto k = err.kind();
    return (k == lfsafa::ErrorKind::Io || k == lfsafa::ErrorKind::NotFinite) ? 1 : 2;
  } catch (const std::exception& err) {
    std::cerr << "lfsafa: " << err.what() << "\n";
    return 1;
  }
  return rc;
}
