#include <catch2/catch_amalgamated.hpp>
#include <lfsafa/checkpoint.hpp>
#include <lfsafa/sr.hpp>

#include <filesystem>
#include <string>

using Catch::Matchers::ContainsSubstring;
using lfsafa::AdaptationParams;
using lfsafa::BackboneParams;
using lfsafa::Rng;
using lfsafa::Tensor;

namespace {

struct TempDir {
  std::filesystem::path root;
  explicit TempDir(const char* name) : root(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
  }
  ~TempDir() { std::filesystem::remove_all(root); }
  std::string file(const char* name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("backbone checkpoints round-trip byte for byte", "[checkpoint]") {
  TempDir dir("lfsafa_ckpt_bb");
  Rng rng(1);
  BackboneParams<float> bb = lfsafa::make_backbone<float>(rng, 2, 1, 8, 2);
  bb = lfsafa::set_frozen(bb, true);

  const std::string path = dir.file("bb.ckpt");
  lfsafa::save_backbone(path, bb);
  BackboneParams<float> back = lfsafa::load_backbone(path);
  REQUIRE(back.frozen);
  REQUIRE(back.scale == 2);
  REQUIRE(back.width() == 8);
  REQUIRE(back.body.size() == 2);
  REQUIRE(lfsafa::params_checksum(back) == lfsafa::params_checksum(bb));

  const std::string path2 = dir.file("bb2.ckpt");
  lfsafa::save_backbone(path2, back);
  REQUIRE(lfsafa::detail::read_file(path) == lfsafa::detail::read_file(path2));

  nlohmann::json meta = lfsafa::read_checkpoint_meta(path);
  REQUIRE(meta.at("kind") == "backbone");
  REQUIRE(meta.at("scale") == 2);
  REQUIRE(meta.at("width") == 8);
  REQUIRE(meta.at("frozen") == true);
}

TEST_CASE("adaptation checkpoints round-trip with their flags", "[checkpoint]") {
  TempDir dir("lfsafa_ckpt_ad");
  Rng rng(2);
  AdaptationParams<float> ad =
      lfsafa::make_adaptation<float>(rng, 3, 16, 8, 5, {.use_difference = false});
  ad.fusion.process = lfsafa::make_conv<float>(rng, 16, 16, 3);

  const std::string path = dir.file("ad.ckpt");
  lfsafa::save_adaptation(path, ad);
  AdaptationParams<float> back = lfsafa::load_adaptation(path);
  REQUIRE(back.a == 3);
  REQUIRE_FALSE(back.flags.use_difference);
  REQUIRE(back.flags.use_residual);
  REQUIRE(back.sas_ksize() == 5);
  REQUIRE(lfsafa::params_checksum(back) == lfsafa::params_checksum(ad));

  const std::string path2 = dir.file("ad2.ckpt");
  lfsafa::save_adaptation(path2, back);
  REQUIRE(lfsafa::detail::read_file(path) == lfsafa::detail::read_file(path2));

  nlohmann::json meta = lfsafa::read_checkpoint_meta(path);
  REQUIRE(meta.at("kind") == "adaptation");
  REQUIRE(meta.at("angular") == 3);
  REQUIRE(meta.at("use_difference") == false);
}

TEST_CASE("damaged files are refused with a reason", "[checkpoint]") {
  TempDir dir("lfsafa_ckpt_bad");
  Rng rng(3);
  BackboneParams<float> bb = lfsafa::make_backbone<float>(rng, 2, 1, 8, 2);
  const std::string path = dir.file("bb.ckpt");
  lfsafa::save_backbone(path, bb);
  const std::string good = lfsafa::detail::read_file(path);

  SECTION("flipped payload byte") {
    std::string bad = good;
    bad[bad.size() - 20] ^= 0x40;
    lfsafa::detail::write_file(path, bad);
    REQUIRE_THROWS_WITH(lfsafa::load_backbone(path), ContainsSubstring("corrupt"));
  }
  SECTION("cut mid-payload, caught by the digest") {
    lfsafa::detail::write_file(path, good.substr(0, good.size() / 2));
    REQUIRE_THROWS_WITH(lfsafa::load_backbone(path), ContainsSubstring("corrupt"));
  }
  SECTION("cut inside the header") {
    lfsafa::detail::write_file(path, good.substr(0, 16));
    REQUIRE_THROWS_WITH(lfsafa::load_backbone(path), ContainsSubstring("truncated"));
  }
  SECTION("not a checkpoint at all") {
    lfsafa::detail::write_file(path, "PNG?" + good.substr(4));
    REQUIRE_THROWS_WITH(lfsafa::load_backbone(path), ContainsSubstring("not a checkpoint"));
  }
  SECTION("wrong kind") {
    REQUIRE_THROWS_WITH(lfsafa::load_adaptation(path),
                        ContainsSubstring("backbone") && ContainsSubstring("adaptation"));
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(lfsafa::load_backbone(dir.file("nope.ckpt")), lfsafa::Error);
  }
}

TEST_CASE("reloaded weights drive super-resolution identically", "[checkpoint]") {
  TempDir dir("lfsafa_ckpt_sr");
  Rng rng(4);
  BackboneParams<float> bb = lfsafa::make_backbone<float>(rng, 2, 1, 8, 2);
  bb = lfsafa::set_frozen(bb, true);
  AdaptationParams<float> ad = lfsafa::make_adaptation<float>(rng, 2, 8, 4);
  ad.fusion.process = lfsafa::make_conv<float>(rng, 8, 8, 3);

  lfsafa::LightField<float> lf;
  lf.a = 2;
  lf.color = lfsafa::ColorSpace::Y;
  for (int i = 0; i < 4; ++i)
    lf.views.push_back(lfsafa::random_uniform<float>(rng, {1, 8, 10}, 0.f, 1.f));

  lfsafa::save_backbone(dir.file("bb.ckpt"), bb);
  lfsafa::save_adaptation(dir.file("ad.ckpt"), ad);
  BackboneParams<float> bb2 = lfsafa::load_backbone(dir.file("bb.ckpt"));
  AdaptationParams<float> ad2 = lfsafa::load_adaptation(dir.file("ad.ckpt"));

  lfsafa::LightField<float> a = lfsafa::super_resolve_lf(lf, bb, &ad);
  lfsafa::LightField<float> b = lfsafa::super_resolve_lf(lf, bb2, &ad2);
  REQUIRE(a.views.size() == 4);
  for (int i = 0; i < 4; ++i)
    REQUIRE(a.views[static_cast<size_t>(i)].data == b.views[static_cast<size_t>(i)].data);

  AdaptationParams<float> wrong = lfsafa::make_adaptation<float>(rng, 3, 8, 4);
  REQUIRE_THROWS_WITH(lfsafa::super_resolve_lf(lf, bb, &wrong),
                      ContainsSubstring("a=3") && ContainsSubstring("a=2"));
}
