#include <catch2/catch_amalgamated.hpp>
#include <lfsafa/synth.hpp>
#include <lfsafa/train.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using Catch::Matchers::ContainsSubstring;
using lfsafa::LightField;
using lfsafa::Rng;
using lfsafa::Tensor;
using lfsafa::TrainConfig;

namespace {

// oscillating texture just under the low-res Nyquist rate: bicubic up-scaling
// attenuates it everywhere, so learning the inverse filter pays off fast
Tensor<float> toy_image(Rng& rng, int h, int w) {
  Tensor<float> img({1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at3(0, y, x) = 0.5f;
  for (int k = 0; k < 3; ++k) {
    const double period = rng.uniform(5.0, 7.0);
    const double theta = rng.uniform(0.0, 3.14159265358979);
    const double fx = std::cos(theta) / period, fy = std::sin(theta) / period;
    const double phase = rng.uniform(0.0, 6.28318530717959);
    const float amp = static_cast<float>(rng.uniform(0.05, 0.1));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at3(0, y, x) +=
            amp * static_cast<float>(std::sin(6.28318530717959 * (fx * x + fy * y) + phase));
  }
  return img;
}

LightField<float> wrap_lf(Tensor<float> img) {
  LightField<float> lf;
  lf.a = 1;
  lf.color = lfsafa::ColorSpace::Y;
  lf.views.push_back(std::move(img));
  return lf;
}

std::vector<LightField<float>> toy_dataset(uint64_t seed, int count, int h, int w) {
  Rng rng(seed);
  std::vector<LightField<float>> ds;
  for (int i = 0; i < count; ++i) ds.push_back(wrap_lf(toy_image(rng, h, w)));
  return ds;
}

std::vector<LightField<float>> synth_dataset(uint64_t seed, int count, int a,
                                             double disparity, int h, int w) {
  Rng rng(seed);
  std::vector<LightField<float>> ds;
  for (int i = 0; i < count; ++i) ds.push_back(lfsafa::synth_lf(toy_image(rng, h, w), a, disparity));
  return ds;
}

std::vector<nlohmann::json> parse_log(const std::string& text) {
  std::vector<nlohmann::json> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

TrainConfig tiny_adapt_config() {
  TrainConfig cfg;
  cfg.phase = lfsafa::TrainPhase::Adaptation;
  cfg.a = 3;
  cfg.scale = 2;
  cfg.patch = 8;
  cfg.batch = 2;
  cfg.epochs = 1;
  cfg.batches_per_epoch = 1;
  cfg.width = 8;
  cfg.exchange = 4;
  cfg.blocks = 1;
  cfg.lr0 = 1e-3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("the learning-rate staircase is exact", "[train]") {
  std::vector<double> trace = lfsafa::lr_trace(lfsafa::paper_config());
  REQUIRE(trace.size() == 250);
  for (int e = 0; e < 250; ++e) {
    const double expect = e < 50    ? 1e-4
                          : e < 100 ? 5e-5
                          : e < 150 ? 2.5e-5
                          : e < 200 ? 1.25e-5
                                    : 6.25e-6;
    REQUIRE(trace[static_cast<size_t>(e)] == expect);
  }

  TrainConfig cfg;
  cfg.lr0 = 1.0;
  cfg.decay_every = 3;
  cfg.epochs = 7;
  REQUIRE(lfsafa::lr_trace(cfg) == std::vector<double>{1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.25});
}

TEST_CASE("zero epochs hands back the untouched initialization", "[train]") {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.width = 8;
  cfg.blocks = 2;
  cfg.patch = 8;
  cfg.seed = 7;
  lfsafa::BackboneParams<float> got = lfsafa::train_backbone(toy_dataset(1, 1, 24, 24), cfg);
  Rng root(7);
  Rng init = root.fork(0);
  lfsafa::BackboneParams<float> want = lfsafa::make_backbone<float>(init, 2, 1, 8, 2);
  REQUIRE(lfsafa::params_checksum(got) == lfsafa::params_checksum(want));
}

TEST_CASE("backbone training is reproducible per seed", "[train]") {
  std::vector<LightField<float>> ds = toy_dataset(2, 2, 24, 24);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batches_per_epoch = 4;
  cfg.patch = 8;
  cfg.batch = 1;
  cfg.width = 4;
  cfg.blocks = 1;
  cfg.lr0 = 1e-3;
  cfg.seed = 3;
  const uint64_t run1 = lfsafa::params_checksum(lfsafa::train_backbone(ds, cfg));
  const uint64_t run2 = lfsafa::params_checksum(lfsafa::train_backbone(ds, cfg));
  REQUIRE(run1 == run2);
  cfg.seed = 4;
  REQUIRE(lfsafa::params_checksum(lfsafa::train_backbone(ds, cfg)) != run1);
}

TEST_CASE("bad configs and datasets are rejected", "[train]") {
  TrainConfig cfg;
  REQUIRE_THROWS_WITH(lfsafa::train_backbone({}, cfg), ContainsSubstring("empty"));

  TrainConfig bad = cfg;
  bad.scale = 3;
  REQUIRE_THROWS_AS(bad.validate(), lfsafa::Error);
  bad = cfg;
  bad.sas_k = 4;
  REQUIRE_THROWS_AS(bad.validate(), lfsafa::Error);
  bad = cfg;
  bad.batch = 0;
  REQUIRE_THROWS_AS(bad.validate(), lfsafa::Error);

  TrainConfig small = cfg;
  small.patch = 100;
  small.epochs = 1;
  REQUIRE_THROWS_WITH(lfsafa::train_backbone(toy_dataset(3, 1, 24, 24), small),
                      ContainsSubstring("smaller than"));
}

TEST_CASE("a short run beats plain bicubic on a held-out image", "[train]") {
  std::vector<LightField<float>> ds = toy_dataset(10, 6, 48, 48);
  LightField<float> held_out = ds.back();
  ds.pop_back();

  TrainConfig cfg;
  cfg.scale = 2;
  cfg.patch = 12;
  cfg.batch = 4;
  cfg.epochs = 1;
  cfg.batches_per_epoch = 200;
  cfg.width = 16;
  cfg.blocks = 1;
  cfg.lr0 = 1e-3;
  cfg.seed = 1;

  std::ostringstream log;
  lfsafa::BackboneParams<float> bb = lfsafa::train_backbone(ds, cfg, &log);

  lfsafa::LfPairs pair = lfsafa::prepare_lf_pairs({held_out}, 2);
  const Tensor<float>& hr = pair.hr[0].views[0];
  const Tensor<float>& lr = pair.lr[0].views[0];
  Tensor<float> net = lfsafa::upscale(lfsafa::extract_features(lr, bb), bb, 2);
  Tensor<float> cubic = lfsafa::bicubic_resize(lr, hr.dim(1), hr.dim(2));
  const double p_net = lfsafa::psnr(lfsafa::crop(hr, 2, 2, hr.dim(1) - 4, hr.dim(2) - 4),
                                    lfsafa::crop(net, 2, 2, net.dim(1) - 4, net.dim(2) - 4));
  const double p_cubic = lfsafa::psnr(lfsafa::crop(hr, 2, 2, hr.dim(1) - 4, hr.dim(2) - 4),
                                      lfsafa::crop(cubic, 2, 2, cubic.dim(1) - 4, cubic.dim(2) - 4));
  INFO("net " << p_net << " dB vs bicubic " << p_cubic << " dB");
  REQUIRE(p_net > p_cubic);

  std::vector<nlohmann::json> lines = parse_log(log.str());
  REQUIRE(lines.size() == 200);
  REQUIRE(lines[0].at("step") == 0);
  REQUIRE(lines[0].at("epoch") == 0);
  REQUIRE(lines[0].at("lr") == 1e-3);
  REQUIRE(lines[0].at("loss").get<double>() > 0.0);
  REQUIRE_FALSE(lines[0].contains("psnr_val"));
}

TEST_CASE("adaptation training guards its preconditions", "[train]") {
  std::vector<LightField<float>> ds = synth_dataset(20, 2, 3, 1.0, 30, 30);
  TrainConfig cfg = tiny_adapt_config();
  Rng rng(21);
  lfsafa::BackboneParams<float> bb = lfsafa::make_backbone<float>(rng, 2, 1, 8, 1);

  REQUIRE_THROWS_WITH(lfsafa::train_adaptation(ds, bb, cfg), ContainsSubstring("freeze"));
  bb = lfsafa::set_frozen(bb, true);

  TrainConfig wrong_scale = cfg;
  wrong_scale.scale = 4;
  REQUIRE_THROWS_WITH(lfsafa::train_adaptation(ds, bb, wrong_scale),
                      ContainsSubstring("x2") && ContainsSubstring("x4"));

  TrainConfig wrong_a = cfg;
  wrong_a.a = 5;
  REQUIRE_THROWS_WITH(lfsafa::train_adaptation(ds, bb, wrong_a),
                      ContainsSubstring("a=3") && ContainsSubstring("a=5"));
}

TEST_CASE("adaptation starts exactly where the frozen backbone stands", "[train]") {
  std::vector<LightField<float>> ds = synth_dataset(22, 10, 3, 1.0, 30, 30);
  TrainConfig cfg = tiny_adapt_config();
  Rng rng(23);
  lfsafa::BackboneParams<float> bb =
      lfsafa::set_frozen(lfsafa::make_backbone<float>(rng, 2, 1, 8, 1), true);
  const uint64_t bb_sum = lfsafa::params_checksum(bb);

  std::ostringstream log_full;
  lfsafa::AdaptationParams<float> trained = lfsafa::train_adaptation(ds, bb, cfg, &log_full);
  REQUIRE(lfsafa::params_checksum(bb) == bb_sum);
  REQUIRE(trained.a == 3);

  std::vector<nlohmann::json> lines = parse_log(log_full.str());
  REQUIRE(lines.size() == 1);
  const double first_loss = lines[0].at("loss").get<double>();
  REQUIRE(lines[0].at("lr") == 1e-3);
  REQUIRE(lines[0].contains("psnr_val"));  // 1 step per epoch, so it ends an epoch

  // replay the first batch through the plain frozen pipeline
  lfsafa::LfPairs pairs = lfsafa::prepare_lf_pairs(ds, cfg.scale);
  const size_t train_n = pairs.hr.size() - lfsafa::validation_count(pairs.hr.size());
  REQUIRE(train_n == 9);
  Rng data = Rng(cfg.seed).fork(1);
  std::vector<lfsafa::PatchPair<float>> batch =
      lfsafa::draw_adapt_batch(pairs, train_n, cfg, data);
  const double plain = lfsafa::adapt_batch_loss(batch, bb, nullptr);
  REQUIRE(first_loss == Catch::Approx(plain).margin(1e-5));

  // flags that keep the residual path do not move the starting point
  TrainConfig nodiff = cfg;
  nodiff.flags.use_difference = false;
  std::ostringstream log_nd;
  lfsafa::train_adaptation(ds, bb, nodiff, &log_nd);
  REQUIRE(parse_log(log_nd.str())[0].at("loss").get<double>() == first_loss);

  // reruns are bitwise deterministic
  std::ostringstream log_again;
  lfsafa::AdaptationParams<float> again = lfsafa::train_adaptation(ds, bb, cfg, &log_again);
  REQUIRE(lfsafa::params_checksum(again) == lfsafa::params_checksum(trained));
  REQUIRE(log_again.str() == log_full.str());
}

TEST_CASE("dataset preparation crops, degrades and splits", "[train]") {
  Rng rng(24);
  std::vector<LightField<float>> ds = {wrap_lf(toy_image(rng, 31, 30))};
  lfsafa::LfPairs pairs = lfsafa::prepare_lf_pairs(ds, 2);
  REQUIRE(pairs.hr[0].views[0].dim(1) == 30);
  REQUIRE(pairs.hr[0].views[0].dim(2) == 30);
  REQUIRE(pairs.lr[0].views[0].dim(1) == 15);
  REQUIRE(pairs.lr[0].views[0].dim(2) == 15);

  REQUIRE(lfsafa::validation_count(9) == 0);
  REQUIRE(lfsafa::validation_count(10) == 1);
  REQUIRE(lfsafa::validation_count(25) == 2);
}
