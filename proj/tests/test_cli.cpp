// End-to-end exercise of the panoqa binary (path via PANOQA_CLI).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "panoqa/image.hpp"
#include "support/synthetic.hpp"

using namespace panoqa;
namespace fs = std::filesystem;

namespace {

fs::path cli_path() {
  const char* env = std::getenv("PANOQA_CLI");
  REQUIRE_MESSAGE(env != nullptr, "PANOQA_CLI must point at the binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli_path().string() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() /
           ("panoqa_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "src");
    for (int i = 0; i < 6; ++i)
      save_png(panoqa::testing::make_scene(900 + i, 128, 64),
               root / "src" / ("scene" + std::to_string(i) + ".png"));
  }
  ~Workspace() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("full pipeline: generate, analyze, baselines, plots, train, eval") {
  Workspace ws;
  const std::string src = (ws.root / "src").string();
  const std::string data = (ws.root / "data").string();

  CHECK(run("generate --sources-dir " + src + " --out-dir " + data +
            " --seed 7 --proxy-dmos-fig2") == 0);
  CHECK(fs::exists(ws.root / "data" / "manifest.json"));
  CHECK(fs::exists(ws.root / "data" / "run_config.json"));

  CHECK(run("analyze-wavelet --manifest " + data + "/manifest.json --out-dir " +
            (ws.root / "wav").string()) == 0);
  CHECK(fs::exists(ws.root / "wav" / "energy_report.csv"));
  CHECK(fs::exists(ws.root / "wav" / "histogram_ref.csv"));

  CHECK(run("baseline-eval --manifest " + data + "/manifest.json --out-dir " +
            (ws.root / "base").string() +
            " --metrics psnr,ssim --spsnr-points 2000") == 0);
  CHECK(fs::exists(ws.root / "base" / "reports.csv"));
  CHECK(fs::exists(ws.root / "base" / "scatter_psnr.csv"));

  CHECK(run("plot-data --manifest " + data + "/manifest.json --out-dir " +
            (ws.root / "plots").string()) == 0);
  CHECK(fs::exists(ws.root / "plots" / "boxplot_by_qf.csv"));
  CHECK(fs::exists(ws.root / "plots" / "boxplot_by_projection.csv"));

  // tiny training configuration through the config file + flag overrides
  {
    std::ofstream cfg(ws.root / "cfg.json");
    cfg << R"({"model": {"patch_size": 32, "wbre": {"levels": 1, )"
        << R"("base_channels": 4, "res_blocks_per_level": 1}, )"
        << R"("pqe": {"stem_channels": 4}, "qr": {"conv_channels": [4,4], )"
        << R"("fc_hidden": 8}}, "train": {"epochs": 2, "batch_size": 8}})";
  }
  CHECK(run("train --manifest " + data + "/manifest.json --out-dir " +
            (ws.root / "run").string() + " --config " +
            (ws.root / "cfg.json").string() + " --lr 0.002 --seed 3") == 0);
  CHECK(fs::exists(ws.root / "run" / "checkpoint.pt"));
  CHECK(fs::exists(ws.root / "run" / "train_log.csv"));
  CHECK(fs::exists(ws.root / "run" / "resolved_config.json"));

  CHECK(run("evaluate --checkpoint " + (ws.root / "run").string() +
            "/checkpoint.pt --manifest " + data + "/manifest.json --out-dir " +
            (ws.root / "eval").string()) == 0);
  CHECK(fs::exists(ws.root / "eval" / "eval_report.csv"));
  CHECK(fs::exists(ws.root / "eval" / "per_stimulus.csv"));
  CHECK(fs::exists(ws.root / "eval" / "scatter_sapnet.csv"));
}

TEST_CASE("reruns with identical inputs produce byte-identical CSV artifacts") {
  Workspace ws;
  const std::string src = (ws.root / "src").string();
  for (const char* tag : {"a", "b"}) {
    const std::string data = (ws.root / ("data_" + std::string(tag))).string();
    REQUIRE(run("generate --sources-dir " + src + " --out-dir " + data +
                " --seed 11 --proxy-dmos-fig2") == 0);
    REQUIRE(run("plot-data --manifest " + data + "/manifest.json --out-dir " +
                (ws.root / ("plots_" + std::string(tag))).string()) == 0);
  }
  CHECK(slurp(ws.root / "data_a" / "manifest.json") ==
        slurp(ws.root / "data_b" / "manifest.json"));
  CHECK(slurp(ws.root / "plots_a" / "boxplot_by_qf.csv") ==
        slurp(ws.root / "plots_b" / "boxplot_by_qf.csv"));
}

TEST_CASE("user errors exit with code 1") {
  Workspace ws;
  CHECK(run("analyze-wavelet --manifest /nonexistent/manifest.json --out-dir " +
            (ws.root / "x").string()) == 1);
  CHECK(run("definitely-not-a-subcommand") == 1);
  CHECK(run("generate --out-dir " + (ws.root / "y").string()) == 1);  // no sources
}
