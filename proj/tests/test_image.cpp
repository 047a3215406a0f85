#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "panoqa/image.hpp"
#include "support/synthetic.hpp"

using namespace panoqa;
namespace fs = std::filesystem;

namespace {

double mse(const RasterImage& a, const RasterImage& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / a.data.size();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("panoqa_img_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("jpeg roundtrip keeps dimensions and follows rate-distortion") {
  RasterImage img = panoqa::testing::make_scene(1, 128, 64);
  const RasterImage q5 = jpeg_roundtrip(img, 5);
  const RasterImage q60 = jpeg_roundtrip(img, 60);
  CHECK(q5.width == img.width);
  CHECK(q5.height == img.height);
  CHECK(q5.channels == 3);
  CHECK(mse(img, q5) >= mse(img, q60));
}

TEST_CASE("the paper's quality grid is accepted") {
  RasterImage img = panoqa::testing::make_scene(2, 64, 32);
  for (int qf : {5, 15, 35, 60}) CHECK_NOTHROW(jpeg_roundtrip(img, qf));
  CHECK_THROWS_AS(jpeg_roundtrip(img, 0), std::invalid_argument);
  CHECK_THROWS_AS(jpeg_roundtrip(img, 101), std::invalid_argument);
  RasterImage gray = make_image(32, 32, 1, 0.5);
  CHECK_THROWS_AS(jpeg_roundtrip(gray, 50), std::invalid_argument);
}

TEST_CASE("constant mid-gray survives qf 60 within 2/255") {
  RasterImage img = make_image(64, 64, 3, 128.0 / 255.0);
  const RasterImage out = jpeg_roundtrip(img, 60);
  double worst = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    worst = std::max(worst, std::abs(img.data[i] - out.data[i]));
  CHECK(worst <= 2.0 / 255.0);
}

TEST_CASE("tiling yields aligned row-major origins") {
  RasterImage img = make_image(512, 256, 1);
  const auto patches = extract_patches(img, 256, 0, 0, PatchMode::TileAll);
  REQUIRE(patches.size() == 2);
  CHECK(patches[0].origin.x == 0);
  CHECK(patches[0].origin.y == 0);
  CHECK(patches[1].origin.x == 256);
  CHECK(patches[1].origin.y == 0);
  CHECK(patches[0].image.width == 256);
  CHECK(patches[0].image.height == 256);
}

TEST_CASE("random non-overlapping extraction is deterministic and disjoint") {
  RasterImage img = panoqa::testing::make_scene(3, 1024, 512);
  const auto a = extract_patches(img, 256, 8, 99, PatchMode::RandomNonOverlap);
  const auto b = extract_patches(img, 256, 8, 99, PatchMode::RandomNonOverlap);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a[i].origin.x == b[i].origin.x);
    CHECK(a[i].origin.y == b[i].origin.y);
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool overlap_x = std::abs(a[i].origin.x - a[j].origin.x) < 256;
      const bool overlap_y = std::abs(a[i].origin.y - a[j].origin.y) < 256;
      CHECK(!(overlap_x && overlap_y));
    }
}

TEST_CASE("requesting more patches than slots is an error") {
  RasterImage img = make_image(1024, 512, 1);
  // 4 x 2 = 8 aligned slots
  CHECK_THROWS_AS(extract_patches(img, 256, 9, 0, PatchMode::RandomNonOverlap),
                  std::invalid_argument);
  CHECK_NOTHROW(extract_patches(img, 256, 8, 0, PatchMode::RandomNonOverlap));
  CHECK_THROWS_AS(extract_patches(img, 2048, 1, 0, PatchMode::TileAll),
                  std::invalid_argument);
}

TEST_CASE("PNG round trip preserves 8-bit-derived pixels exactly") {
  TempDir tmp;
  RasterImage img = panoqa::testing::make_scene(4, 64, 32);
  // snap to the 8-bit lattice first, as a loaded image would be
  for (auto& v : img.data) v = std::round(v * 255.0) / 255.0;
  const fs::path p = tmp.path / "x.png";
  save_png(img, p);
  const RasterImage back = load_image(p, Projection::Erp);
  REQUIRE(back.data.size() == img.data.size());
  CHECK(back.projection == Projection::Erp);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("luma follows BT.601") {
  RasterImage img = make_image(2, 1, 3);
  img.at(0, 0, 0) = 1.0;  // pure red
  img.at(1, 1, 0) = 1.0;  // pure green
  const auto y = luma(img);
  CHECK(y[0] == doctest::Approx(0.299));
  CHECK(y[1] == doctest::Approx(0.587));
}

TEST_CASE("loading a missing file is an I/O error") {
  CHECK_THROWS_AS(load_image("/nonexistent/nope.png"), std::runtime_error);
}
