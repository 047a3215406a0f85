#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "panoqa/dataset.hpp"
#include "support/synthetic.hpp"

using namespace panoqa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("panoqa_ds_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<fs::path> write_sources(const fs::path& dir, int count, int width,
                                    int height) {
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (int i = 0; i < count; ++i) {
    const fs::path p = dir / ("scene" + std::to_string(i) + ".png");
    save_png(panoqa::testing::make_scene(100 + i, width, height), p);
    paths.push_back(p);
  }
  return paths;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("impairment spec invariants") {
  ImpairmentSpec ok1{ImpairmentMode::JpegOnly, 5, Projection::Erp};
  CHECK_NOTHROW(ok1.validate());
  ImpairmentSpec ok2{ImpairmentMode::ProjectionRoundTrip, 15, Projection::Cpp};
  CHECK_NOTHROW(ok2.validate());
  ImpairmentSpec bad_qf{ImpairmentMode::JpegOnly, 42, Projection::Erp};
  CHECK_THROWS_AS(bad_qf.validate(), std::invalid_argument);
  ImpairmentSpec bad_proj{ImpairmentMode::JpegOnly, 5, Projection::Cmp};
  CHECK_THROWS_AS(bad_proj.validate(), std::invalid_argument);
  ImpairmentSpec bad_mode2{ImpairmentMode::ProjectionRoundTrip, 5,
                           Projection::Cmp};
  CHECK_THROWS_AS(bad_mode2.validate(), std::invalid_argument);
}

TEST_CASE("build_dataset: counts, split hygiene, record order") {
  TempDir src("src"), out("out");
  const auto sources = write_sources(src.path / "imgs", 6, 128, 64);
  const auto specs = default_impairments();
  const auto manifest = build_dataset(sources, specs, 5.0 / 6.0, 7, out.path);

  CHECK(manifest.records.size() == 6 * specs.size());
  std::set<std::string> train_sources, test_sources;
  for (const auto& r : manifest.records) {
    if (r.split == Split::Train)
      train_sources.insert(r.source_id);
    else
      test_sources.insert(r.source_id);
    CHECK(fs::exists(record_path(out.path, r)));
    CHECK(!r.dmos.has_value());
  }
  CHECK(train_sources.size() == 5);
  CHECK(test_sources.size() == 1);
  for (const auto& s : test_sources) CHECK(train_sources.count(s) == 0);
  for (std::size_t i = 1; i < manifest.records.size(); ++i)
    CHECK(manifest.records[i - 1].stimulus_id < manifest.records[i].stimulus_id);
  for (const auto& r : manifest.records)
    CHECK(fs::exists(reference_path(out.path, r.source_id)));
}

TEST_CASE("manifests round-trip through JSON and are byte-stable under seed") {
  TempDir src("src2"), out_a("outa"), out_b("outb");
  const auto sources = write_sources(src.path / "imgs", 3, 64, 32);
  std::vector<ImpairmentSpec> specs = {
      {ImpairmentMode::JpegOnly, 5, Projection::Erp},
      {ImpairmentMode::JpegOnly, 60, Projection::Erp},
  };
  const auto ma = build_dataset(sources, specs, 0.67, 11, out_a.path);
  const auto mb = build_dataset(sources, specs, 0.67, 11, out_b.path);
  save_manifest(ma, out_a.path / "manifest.json");
  save_manifest(mb, out_b.path / "manifest.json");
  CHECK(slurp(out_a.path / "manifest.json") ==
        slurp(out_b.path / "manifest.json"));

  const auto loaded = load_manifest(out_a.path / "manifest.json");
  REQUIRE(loaded.records.size() == ma.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    CHECK(loaded.records[i].stimulus_id == ma.records[i].stimulus_id);
    CHECK(loaded.records[i].path == ma.records[i].path);
    CHECK(loaded.records[i].split == ma.records[i].split);
    CHECK(loaded.records[i].spec.quality_factor ==
          ma.records[i].spec.quality_factor);
  }
}

TEST_CASE("unreadable sources are skipped; empty result is an error") {
  TempDir src("src3"), out("out3");
  auto sources = write_sources(src.path / "imgs", 2, 64, 32);
  const fs::path bogus = src.path / "imgs" / "broken.png";
  std::ofstream(bogus) << "not a png";
  sources.push_back(bogus);
  const auto manifest = build_dataset(
      sources, {{ImpairmentMode::JpegOnly, 15, Projection::Erp}}, 0.5, 1,
      out.path);
  CHECK(manifest.records.size() == 2);

  TempDir out2("out4");
  CHECK_THROWS(build_dataset({bogus},
                             {{ImpairmentMode::JpegOnly, 15, Projection::Erp}},
                             0.5, 1, out2.path));
}

TEST_CASE("merge_dmos updates records and rejects unknown stimuli") {
  TempDir src("src5"), out("out5");
  const auto sources = write_sources(src.path / "imgs", 2, 64, 32);
  auto manifest = build_dataset(
      sources, {{ImpairmentMode::JpegOnly, 5, Projection::Erp}}, 0.5, 1,
      out.path);
  std::map<std::string, double> dmos = {
      {manifest.records[0].stimulus_id, 41.5}};
  merge_dmos(manifest, dmos);
  CHECK(manifest.records[0].dmos == 41.5);
  CHECK_THROWS_AS(merge_dmos(manifest, {{"nope", 1.0}}), std::invalid_argument);
}

TEST_CASE("reference map pairs each stimulus with its source") {
  DatasetManifest m;
  ManifestRecord r;
  r.stimulus_id = "a__m1_qf05";
  r.source_id = "a";
  m.records.push_back(r);
  const auto map = m.reference_map();
  CHECK(map.at("a__m1_qf05") == "a");
}
