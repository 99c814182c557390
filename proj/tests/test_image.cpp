#include <catch2/catch_amalgamated.hpp>
#include <lfsafa/color.hpp>
#include <lfsafa/image.hpp>

#include <filesystem>

#include "oracles.hpp"

using lfsafa::Rng;
using lfsafa::Tensor;

namespace {

std::string tmp_png(const std::string& name) {
  static const std::string dir = [] {
    auto d = std::filesystem::temp_directory_path() / "lfsafa_img_tests";
    std::filesystem::create_directories(d);
    return d.string();
  }();
  return dir + "/" + name;
}

// values already on the quantization lattice survive a write/read round trip
Tensor<float> lattice_image(Rng& rng, int c, int h, int w, int depth) {
  const float maxval = static_cast<float>((1 << depth) - 1);
  Tensor<float> img({c, h, w});
  for (float& v : img.data)
    v = static_cast<float>(rng.uniform_int(static_cast<int>(maxval) + 1)) / maxval;
  return img;
}

}  // namespace

TEST_CASE("8-bit gray png round trip is exact on lattice values", "[image]") {
  Rng rng(1);
  Tensor<float> img = lattice_image(rng, 1, 13, 9, 8);
  const std::string path = tmp_png("gray8.png");
  lfsafa::write_png(path, img, 8);
  Tensor<float> back = lfsafa::read_png(path);
  REQUIRE(back.shape == img.shape);
  REQUIRE(oracle::max_abs_diff(back, img) < 1e-6);
}

TEST_CASE("8-bit rgb png round trip is exact on lattice values", "[image]") {
  Rng rng(2);
  Tensor<float> img = lattice_image(rng, 3, 7, 11, 8);
  const std::string path = tmp_png("rgb8.png");
  lfsafa::write_png(path, img, 8);
  REQUIRE(oracle::max_abs_diff(lfsafa::read_png(path), img) < 1e-6);
}

TEST_CASE("16-bit png round trip is exact on lattice values", "[image]") {
  Rng rng(3);
  Tensor<float> img = lattice_image(rng, 1, 6, 6, 16);
  const std::string path = tmp_png("gray16.png");
  lfsafa::write_png(path, img, 16);
  REQUIRE(oracle::max_abs_diff(lfsafa::read_png(path), img) < 1e-7);
  Tensor<float> rgb = lattice_image(rng, 3, 5, 4, 16);
  const std::string path3 = tmp_png("rgb16.png");
  lfsafa::write_png(path3, rgb, 16);
  REQUIRE(oracle::max_abs_diff(lfsafa::read_png(path3), rgb) < 1e-7);
}

TEST_CASE("writing quantizes by rounding and clamps out-of-range values", "[image]") {
  Tensor<float> img({1, 1, 4}, {-0.25f, 2.f, 100.4f / 255.f, 100.6f / 255.f});
  const std::string path = tmp_png("clamp.png");
  lfsafa::write_png(path, img, 8);
  Tensor<float> back = lfsafa::read_png(path);
  CHECK(back.data[0] == 0.f);
  CHECK(back.data[1] == 1.f);
  CHECK(back.data[2] == Catch::Approx(100.f / 255.f));
  CHECK(back.data[3] == Catch::Approx(101.f / 255.f));
}

TEST_CASE("read errors are structured", "[image]") {
  REQUIRE_THROWS_AS(lfsafa::read_png(tmp_png("missing_file.png")), lfsafa::Error);
  const std::string junk = tmp_png("junk.png");
  {
    FILE* f = std::fopen(junk.c_str(), "wb");
    std::fputs("definitely not a png", f);
    std::fclose(f);
  }
  try {
    lfsafa::read_png(junk);
    FAIL("expected a format error");
  } catch (const lfsafa::Error& e) {
    CHECK(e.kind() == lfsafa::ErrorKind::Format);
  }
}

TEST_CASE("write_png rejects unsupported shapes", "[image]") {
  Tensor<float> bad({2, 4, 4}, 0.5f);
  REQUIRE_THROWS_AS(lfsafa::write_png(tmp_png("bad.png"), bad, 8), lfsafa::Error);
  Tensor<float> ok({1, 4, 4}, 0.5f);
  REQUIRE_THROWS_AS(lfsafa::write_png(tmp_png("bad.png"), ok, 12), lfsafa::Error);
}

TEST_CASE("white and black hit the studio-swing luma endpoints", "[image]") {
  Tensor<float> white({3, 1, 1}, 1.f);
  Tensor<float> black({3, 1, 1}, 0.f);
  CHECK(lfsafa::rgb_to_ycbcr(white).data[0] == Catch::Approx(235.0 / 255.0).margin(1e-6));
  CHECK(lfsafa::rgb_to_ycbcr(black).data[0] == Catch::Approx(16.0 / 255.0).margin(1e-6));
  // neutral gray keeps both chroma channels at their midpoint
  Tensor<float> gray({3, 1, 1}, 0.5f);
  Tensor<float> ycc = lfsafa::rgb_to_ycbcr(gray);
  CHECK(ycc.data[1] == Catch::Approx(128.0 / 255.0).margin(1e-5));
  CHECK(ycc.data[2] == Catch::Approx(128.0 / 255.0).margin(1e-5));
}

TEST_CASE("ycbcr round trip stays within 1e-4 per channel", "[image]") {
  Rng rng(5);
  Tensor<float> rgb = lfsafa::random_uniform<float>(rng, {3, 16, 16}, 0.f, 1.f);
  Tensor<float> back = lfsafa::ycbcr_to_rgb(lfsafa::rgb_to_ycbcr(rgb));
  REQUIRE(oracle::max_abs_diff(back, rgb) < 1e-4);
}

TEST_CASE("luma equals the Y channel of the full conversion", "[image]") {
  Rng rng(6);
  Tensor<float> rgb = lfsafa::random_uniform<float>(rng, {3, 5, 7}, 0.f, 1.f);
  Tensor<float> ycc = lfsafa::rgb_to_ycbcr(rgb);
  Tensor<float> y = lfsafa::luma(rgb);
  REQUIRE(y.shape == std::vector<int>{1, 5, 7});
  for (int i = 0; i < 35; ++i) CHECK(y.data[static_cast<size_t>(i)] == ycc.data[static_cast<size_t>(i)]);
  Tensor<float> single({1, 3, 3}, 0.25f);
  CHECK(lfsafa::luma(single).data == single.data);
}
