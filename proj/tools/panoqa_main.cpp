// panoqa: dataset synthesis, wavelet/DMOS analyses, baseline metrics, and
// SAP-net training/evaluation for omnidirectional image quality assessment.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "panoqa/artifacts.hpp"
#include "panoqa/dataset.hpp"
#include "panoqa/metrics.hpp"
#include "panoqa/subjective.hpp"
#include "panoqa/training.hpp"
#include "panoqa/wavelet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace panoqa;

namespace {

constexpr int kExitUserError = 1;
constexpr int kExitInternalError = 2;

void write_run_config(const fs::path& out_dir, const std::string& subcommand,
                      const json& options) {
  fs::create_directories(out_dir);
  json j;
  j["subcommand"] = subcommand;
  j["options"] = options;
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["timestamp"] = stamp;  // timestamps live here only, never in CSV artifacts
  std::ofstream out(out_dir / "run_config.json");
  out << j.dump(2) << "\n";
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) if (!item.empty()) out.push_back(item);
  return out;
}

// DMOS from a raw subjective CSV, merged into the manifest. Reference stimuli
// are keyed by source_id in the CSV.
void apply_subjective(DatasetManifest& manifest, const fs::path& csv,
                      const fs::path& out_dir) {
  const auto records = load_subjective_csv(csv);
  const auto table = compute_dmos(records, manifest.reference_map());
  std::map<std::string, double> dmos;
  for (const auto& r : manifest.records) {
    const auto it = table.per_stimulus.find(r.stimulus_id);
    if (it != table.per_stimulus.end()) dmos[r.stimulus_id] = it->second.dmos;
  }
  merge_dmos(manifest, dmos);
  {
    std::ofstream out(out_dir / "dmos.csv");
    out << "stimulus_id,mos,dmos,n_subjects\n";
    for (const auto& [id, e] : table.per_stimulus)
      out << id << ',' << format_double(e.mos) << ',' << format_double(e.dmos)
          << ',' << e.n_subjects << '\n';
  }
  save_manifest(manifest, out_dir / "manifest_with_dmos.json");
}

void require_dmos(const DatasetManifest& manifest, const std::string& hint) {
  for (const auto& r : manifest.records)
    if (!r.dmos)
      throw std::invalid_argument("record " + r.stimulus_id +
                                  " has no DMOS; " + hint);
}

struct MetricJob {
  std::string name;
  ScoreSeries series;
};

int run_generate(const std::vector<std::string>& source_args,
                 const std::string& sources_dir, const fs::path& out_dir,
                 std::uint64_t seed, double split_ratio,
                 const std::vector<int>& qf_list,
                 const std::vector<std::string>& projections,
                 bool proxy_dmos_fig2) {
  std::vector<fs::path> sources;
  for (const auto& s : source_args) sources.emplace_back(s);
  if (!sources_dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(sources_dir)) {
      const auto ext = entry.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
        found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    sources.insert(sources.end(), found.begin(), found.end());
  }
  if (sources.empty()) throw std::invalid_argument("no source images given");

  std::vector<ImpairmentSpec> specs;
  for (int qf : qf_list)
    specs.push_back({ImpairmentMode::JpegOnly, qf, Projection::Erp});
  for (const auto& p : projections) {
    if (p == "none") continue;
    std::string upper = p;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    specs.push_back({ImpairmentMode::ProjectionRoundTrip, 15,
                     projection_from_string(upper)});
  }

  auto manifest = build_dataset(sources, specs, split_ratio, seed, out_dir);
  if (proxy_dmos_fig2) {
    const std::map<int, double> proxy = {
        {5, 76.8}, {15, 50.5}, {35, 36.9}, {60, 32.9}};
    for (auto& r : manifest.records) r.dmos = proxy.at(r.spec.quality_factor);
  }
  save_manifest(manifest, out_dir / "manifest.json");
  std::cout << "wrote " << manifest.records.size() << " records to "
            << (out_dir / "manifest.json") << "\n";
  return 0;
}

int run_analyze_wavelet(const fs::path& manifest_path, const fs::path& out_dir,
                        int levels, bool render) {
  const auto manifest = load_manifest(manifest_path);
  const fs::path manifest_dir = manifest_path.parent_path();
  std::vector<EnergyPair> pairs;
  for (const auto& r : manifest.records) {
    if (r.spec.mode != ImpairmentMode::JpegOnly) continue;
    EnergyPair pair;
    pair.reference = load_image(reference_path(manifest_dir, r.source_id));
    pair.impaired = load_image(record_path(manifest_dir, r));
    // crop to DWT-divisible dimensions
    const int div = 1 << levels;
    const int w = pair.reference.width / div * div;
    const int h = pair.reference.height / div * div;
    if (w != pair.reference.width || h != pair.reference.height)
      throw std::invalid_argument("image dimensions not divisible by 2^levels");
    pair.quality_factor = r.spec.quality_factor;
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty())
    throw std::invalid_argument("manifest has no JPEG_ONLY records");
  const auto report = energy_loss_report(pairs, levels);
  fs::create_directories(out_dir);
  write_energy_report_csv(out_dir / "energy_report.csv", report);
  write_histogram_csvs(out_dir, report);
  if (render)
    for (const auto* band : kSubbandNames)
      render_histogram_png(out_dir / ("histogram_" + std::string(band) + ".png"),
                           report, band);
  std::cout << "wrote energy report for " << pairs.size() << " pairs\n";
  return 0;
}

int run_baseline_eval(const fs::path& manifest_path, const fs::path& out_dir,
                      const std::vector<std::string>& metric_names,
                      std::size_t spsnr_points, const std::string& subjective,
                      bool render) {
  auto manifest = load_manifest(manifest_path);
  const fs::path manifest_dir = manifest_path.parent_path();
  fs::create_directories(out_dir);
  if (!subjective.empty())
    apply_subjective(manifest, subjective, out_dir);
  require_dmos(manifest, "supply --subjective or regenerate with proxy DMOS");

  SampleGrid grid;
  for (const auto& name : metric_names)
    if (name == "s-psnr") grid = uniform_sphere_samples(spsnr_points);

  std::vector<MetricJob> jobs;
  for (const auto& name : metric_names) jobs.push_back({name, {}});

  for (const auto& r : manifest.records) {
    const auto ref =
        load_image(reference_path(manifest_dir, r.source_id), Projection::Erp);
    const auto imp = load_image(record_path(manifest_dir, r), Projection::Erp);
    for (auto& job : jobs) {
      double v = 0.0;
      if (job.name == "psnr") v = psnr(ref, imp);
      else if (job.name == "s-psnr") v = s_psnr(ref, imp, grid);
      else if (job.name == "cpp-psnr") v = cpp_psnr(ref, imp);
      else if (job.name == "ssim") v = ssim(ref, imp);
      else throw std::invalid_argument("unknown metric: " + job.name);
      job.series.push_back({v, *r.dmos});
    }
  }

  std::vector<std::pair<std::string, CorrelationReport>> reports;
  for (const auto& job : jobs) {
    const auto rep = correlation_report(job.series, job.name);
    reports.emplace_back(job.name, rep);
    write_scatter_csv(out_dir / ("scatter_" + job.name + ".csv"), job.series,
                      rep.logistic);
    if (render)
      render_scatter_png(out_dir / ("scatter_" + job.name + ".png"), job.series,
                         rep.logistic, job.name + " vs DMOS");
  }
  write_correlation_reports_csv(out_dir / "reports.csv", reports);
  std::cout << "wrote reports.csv for " << jobs.size() << " metrics over "
            << manifest.records.size() << " stimuli\n";
  return 0;
}

struct TrainCliOptions {
  std::string config_file;
  double lr = -1, lambda1 = -1;
  int epochs = -1, batch_size = -1, patch_size = -1;
  std::int64_t seed = -1;
  std::string ablation;
};

std::pair<net::ModelConfig, net::TrainConfig> resolve_train_configs(
    const TrainCliOptions& opt) {
  net::ModelConfig mc;
  net::TrainConfig tc;
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    if (!in)
      throw std::invalid_argument("cannot open config " + opt.config_file);
    const json cfg = json::parse(in);
    if (cfg.contains("model")) net::apply_model_overrides(mc, cfg["model"].dump());
    if (cfg.contains("train")) net::apply_train_overrides(tc, cfg["train"].dump());
  }
  if (opt.lr > 0) tc.learning_rate = opt.lr;
  if (opt.lambda1 > 0) tc.lambda1 = opt.lambda1;
  if (opt.epochs > 0) tc.epochs = opt.epochs;
  if (opt.batch_size > 0) tc.batch_size = opt.batch_size;
  if (opt.patch_size > 0) mc.patch_size = opt.patch_size;
  if (opt.seed >= 0) tc.seed = static_cast<std::uint64_t>(opt.seed);
  if (!opt.ablation.empty())
    tc.ablation = net::ablation_from_string(opt.ablation);
  mc.validate();
  tc.validate();
  return {mc, tc};
}

json resolved_config_json(const net::ModelConfig& mc, const net::TrainConfig& tc) {
  json j;
  j["model"] = json::parse(net::model_config_to_json(mc));
  j["train"] = json::parse(net::train_config_to_json(tc));
  return j;
}

void write_eval_artifacts(const fs::path& out_dir, const net::EvalResult& eval,
                          const std::string& scorer, bool render) {
  fs::create_directories(out_dir);
  write_correlation_reports_csv(out_dir / "eval_report.csv",
                                {{scorer, eval.report}});
  {
    std::ofstream out(out_dir / "per_stimulus.csv");
    out << "stimulus_id,score,dmos\n";
    for (const auto& s : eval.stimulus_scores)
      out << s.stimulus_id << ',' << format_double(s.score) << ','
          << format_double(s.dmos) << '\n';
  }
  ScoreSeries series;
  for (const auto& s : eval.stimulus_scores)
    series.push_back({s.score, s.dmos});
  write_scatter_csv(out_dir / ("scatter_" + scorer + ".csv"), series,
                    eval.report.logistic);
  if (render)
    render_scatter_png(out_dir / ("scatter_" + scorer + ".png"), series,
                       eval.report.logistic, scorer + " vs DMOS");
}

int run_train(const fs::path& manifest_path, const fs::path& out_dir,
              const TrainCliOptions& opt) {
  auto manifest = load_manifest(manifest_path);
  const auto [mc, tc] = resolve_train_configs(opt);
  {
    std::ofstream out(out_dir / "resolved_config.json");
    out << resolved_config_json(mc, tc).dump(2) << "\n";
  }
  const auto result =
      net::train(manifest, manifest_path.parent_path(), mc, tc, out_dir);
  std::cout << "checkpoint: " << result.checkpoint << "\n";
  return 0;
}

int run_evaluate(const fs::path& checkpoint, const fs::path& manifest_path,
                 const fs::path& out_dir, bool render) {
  const auto manifest = load_manifest(manifest_path);
  const auto eval =
      net::evaluate(checkpoint, manifest, manifest_path.parent_path());
  write_eval_artifacts(out_dir, eval, "sapnet", render);
  std::cout << "PLCC " << format_double(eval.report.plcc) << "  SROCC "
            << format_double(eval.report.srocc) << "  KROCC "
            << format_double(eval.report.krocc) << "  RMSE "
            << format_double(eval.report.rmse) << "  MAE "
            << format_double(eval.report.mae) << "\n";
  return 0;
}

int run_ablate(const fs::path& manifest_path, const fs::path& out_dir,
               const TrainCliOptions& opt) {
  const auto manifest = load_manifest(manifest_path);
  const auto [mc, tc] = resolve_train_configs(opt);
  {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "resolved_config.json");
    out << resolved_config_json(mc, tc).dump(2) << "\n";
  }
  const auto rows =
      net::ablate(manifest, manifest_path.parent_path(), mc, tc, out_dir);
  std::vector<std::pair<std::string, CorrelationReport>> reports;
  for (const auto& row : rows) reports.emplace_back(row.variant, row.report);
  write_correlation_reports_csv(out_dir / "ablation.csv", reports);
  std::cout << "wrote ablation.csv with " << rows.size() << " variants\n";
  return 0;
}

int run_plot_data(const fs::path& manifest_path, const fs::path& out_dir,
                  const std::string& subjective, bool render) {
  auto manifest = load_manifest(manifest_path);
  fs::create_directories(out_dir);
  if (!subjective.empty()) apply_subjective(manifest, subjective, out_dir);
  require_dmos(manifest, "supply --subjective or regenerate with proxy DMOS");

  std::map<std::string, std::vector<double>> by_qf, by_projection;
  for (const auto& r : manifest.records) {
    if (r.spec.mode == ImpairmentMode::JpegOnly)
      by_qf["qf" + std::to_string(r.spec.quality_factor)].push_back(*r.dmos);
    else
      by_projection[to_string(r.spec.projection)].push_back(*r.dmos);
  }
  const auto qf_stats = grouped_boxplots(by_qf);
  write_boxplot_csv(out_dir / "boxplot_by_qf.csv", qf_stats);
  if (render && !qf_stats.empty())
    render_boxplot_png(out_dir / "boxplot_by_qf.png", qf_stats,
                       "DMOS by compression level");
  if (!by_projection.empty()) {
    const auto proj_stats = grouped_boxplots(by_projection);
    write_boxplot_csv(out_dir / "boxplot_by_projection.csv", proj_stats);
    if (render)
      render_boxplot_png(out_dir / "boxplot_by_projection.png", proj_stats,
                         "DMOS by projection");
  }
  std::cout << "wrote boxplot data\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoqa: no-reference perceptual quality toolkit for "
               "omnidirectional images"};
  app.require_subcommand(1);
  net::configure_threads_from_env();

  // generate
  auto* gen = app.add_subcommand("generate", "synthesize the impaired corpus");
  std::vector<std::string> gen_sources;
  std::string gen_sources_dir, gen_out, gen_qf = "5,15,35,60",
                               gen_projections = "cmp,cpp";
  std::uint64_t gen_seed = 0;
  double gen_split = 5.0 / 6.0;
  bool gen_proxy = false;
  gen->add_option("--sources", gen_sources, "source ERP images");
  gen->add_option("--sources-dir", gen_sources_dir, "directory of sources");
  gen->add_option("--out-dir", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "split/synthesis seed");
  gen->add_option("--split-ratio", gen_split, "train fraction (default 5/6)");
  gen->add_option("--qf", gen_qf, "JPEG quality factors (mode 1)");
  gen->add_option("--projections", gen_projections,
                  "mode-2 projections: cmp,cpp or none");
  gen->add_flag("--proxy-dmos-fig2", gen_proxy,
                "fill DMOS with the per-qf medians 76.8/50.5/36.9/32.9");

  // analyze-wavelet
  auto* wav = app.add_subcommand("analyze-wavelet",
                                 "sub-band energy-loss study (Table 3 style)");
  std::string wav_manifest, wav_out;
  int wav_levels = 2;
  bool wav_render = false;
  wav->add_option("--manifest", wav_manifest, "dataset manifest")->required();
  wav->add_option("--out-dir", wav_out, "output directory")->required();
  wav->add_option("--levels", wav_levels, "DWT levels (default 2)");
  wav->add_flag("--render", wav_render, "also render PNG charts");

  // baseline-eval
  auto* base = app.add_subcommand("baseline-eval",
                                  "full-reference metrics vs DMOS");
  std::string base_manifest, base_out, base_metrics = "psnr,s-psnr,cpp-psnr,ssim",
              base_subjective;
  std::size_t base_points = kDefaultSphereSamples;
  bool base_render = false;
  base->add_option("--manifest", base_manifest, "dataset manifest")->required();
  base->add_option("--out-dir", base_out, "output directory")->required();
  base->add_option("--metrics", base_metrics, "metric list");
  base->add_option("--spsnr-points", base_points,
                   "sphere sample count for S-PSNR");
  base->add_option("--subjective", base_subjective,
                   "raw subjective scores CSV (subject_id,stimulus_id,score)");
  base->add_flag("--render", base_render, "also render PNG charts");

  // train / ablate share options
  auto add_train_options = [](CLI::App* cmd, std::string& manifest,
                              std::string& out, TrainCliOptions& opt) {
    cmd->add_option("--manifest", manifest, "dataset manifest")->required();
    cmd->add_option("--out-dir", out, "output directory")->required();
    cmd->add_option("--config", opt.config_file,
                    "JSON config {\"model\":{...},\"train\":{...}}");
    cmd->add_option("--lr", opt.lr, "learning rate");
    cmd->add_option("--lambda1", opt.lambda1, "assessment loss weight");
    cmd->add_option("--epochs", opt.epochs, "training epochs");
    cmd->add_option("--batch-size", opt.batch_size, "batch size");
    cmd->add_option("--patch-size", opt.patch_size, "patch size");
    cmd->add_option("--seed", opt.seed, "training seed");
  };
  auto* train_cmd = app.add_subcommand("train", "train SAP-net");
  std::string train_manifest, train_out;
  TrainCliOptions train_opt;
  add_train_options(train_cmd, train_manifest, train_out, train_opt);
  train_cmd->add_option("--ablation", train_opt.ablation,
                        "NONE, NO_RSAB or NO_CONCAT");

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string eval_ckpt, eval_manifest, eval_out;
  bool eval_render = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint.pt")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")
      ->required();
  eval_cmd->add_option("--out-dir", eval_out, "output directory")->required();
  eval_cmd->add_flag("--render", eval_render, "also render PNG charts");

  auto* abl_cmd = app.add_subcommand("ablate",
                                     "train FULL/NO_RSAB/NO_CONCAT variants");
  std::string abl_manifest, abl_out;
  TrainCliOptions abl_opt;
  add_train_options(abl_cmd, abl_manifest, abl_out, abl_opt);

  auto* plot_cmd = app.add_subcommand("plot-data",
                                      "DMOS boxplot data (Fig. 2 style)");
  std::string plot_manifest, plot_out, plot_subjective;
  bool plot_render = false;
  plot_cmd->add_option("--manifest", plot_manifest, "dataset manifest")
      ->required();
  plot_cmd->add_option("--out-dir", plot_out, "output directory")->required();
  plot_cmd->add_option("--subjective", plot_subjective,
                       "raw subjective scores CSV");
  plot_cmd->add_flag("--render", plot_render, "also render PNG charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUserError;
  }

  try {
    if (gen->parsed()) {
      write_run_config(gen_out, "generate",
                       {{"sources", gen_sources},
                        {"sources_dir", gen_sources_dir},
                        {"seed", gen_seed},
                        {"split_ratio", gen_split},
                        {"qf", gen_qf},
                        {"projections", gen_projections},
                        {"proxy_dmos_fig2", gen_proxy}});
      return run_generate(gen_sources, gen_sources_dir, gen_out, gen_seed,
                          gen_split, parse_int_list(gen_qf),
                          parse_str_list(gen_projections), gen_proxy);
    }
    if (wav->parsed()) {
      write_run_config(wav_out, "analyze-wavelet",
                       {{"manifest", wav_manifest}, {"levels", wav_levels}});
      return run_analyze_wavelet(wav_manifest, wav_out, wav_levels, wav_render);
    }
    if (base->parsed()) {
      write_run_config(base_out, "baseline-eval",
                       {{"manifest", base_manifest},
                        {"metrics", base_metrics},
                        {"spsnr_points", base_points},
                        {"subjective", base_subjective}});
      return run_baseline_eval(base_manifest, base_out,
                               parse_str_list(base_metrics), base_points,
                               base_subjective, base_render);
    }
    if (train_cmd->parsed()) {
      fs::create_directories(train_out);
      write_run_config(train_out, "train",
                       {{"manifest", train_manifest},
                        {"config", train_opt.config_file}});
      return run_train(train_manifest, train_out, train_opt);
    }
    if (eval_cmd->parsed()) {
      write_run_config(eval_out, "evaluate",
                       {{"checkpoint", eval_ckpt}, {"manifest", eval_manifest}});
      return run_evaluate(eval_ckpt, eval_manifest, eval_out, eval_render);
    }
    if (abl_cmd->parsed()) {
      write_run_config(abl_out, "ablate",
                       {{"manifest", abl_manifest},
                        {"config", abl_opt.config_file}});
      return run_ablate(abl_manifest, abl_out, abl_opt);
    }
    if (plot_cmd->parsed()) {
      write_run_config(plot_out, "plot-data",
                       {{"manifest", plot_manifest},
                        {"subjective", plot_subjective}});
      return run_plot_data(plot_manifest, plot_out, plot_subjective,
                           plot_render);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::runtime_error& e) {
    // unreadable inputs are user errors; anything else is internal
    const std::string what = e.what();
    if (what.find("cannot") != std::string::npos ||
        what.find("failed to read") != std::string::npos ||
        what.find("missing") != std::string::npos) {
      std::cerr << "error: " << what << "\n";
      return kExitUserError;
    }
    std::cerr << "internal error: " << what << "\n";
    return kExitInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return 0;
}
