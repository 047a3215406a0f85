#include "panoqa/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <unordered_map>

namespace panoqa::net {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (learning_rate <= 0 || batch_size < 1 || lambda1 <= 0 ||
      epsilon_beta <= 0 || epochs < 1)
    throw std::invalid_argument("train config fields must be positive");
  for (double b : beta)
    if (b <= 0) throw std::invalid_argument("beta weights must be positive");
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["lambda1"] = cfg.lambda1;
  j["beta"] = cfg.beta;
  j["epsilon_beta"] = cfg.epsilon_beta;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["ablation"] = to_string(cfg.ablation);
  return j.dump(2);
}

void apply_train_overrides(TrainConfig& cfg, const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("learning_rate"))
    cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("lambda1")) cfg.lambda1 = j["lambda1"].get<double>();
  if (j.contains("beta")) cfg.beta = j["beta"].get<std::array<double, 4>>();
  if (j.contains("epsilon_beta"))
    cfg.epsilon_beta = j["epsilon_beta"].get<double>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("ablation"))
    cfg.ablation = ablation_from_string(j["ablation"].get<std::string>());
}

torch::Tensor charbonnier_wavelet_loss(const torch::Tensor& fhat,
                                       const torch::Tensor& f,
                                       const std::array<double, 4>& beta,
                                       double epsilon_beta) {
  TORCH_CHECK(fhat.sizes() == f.sizes(),
              "charbonnier_wavelet_loss: sub-band shape mismatch");
  TORCH_CHECK(fhat.dim() == 4 && fhat.size(1) % 4 == 0,
              "charbonnier_wavelet_loss expects band-major NCHW");
  const auto per_band = fhat.size(1) / 4;
  auto weights = torch::empty({fhat.size(1)}, fhat.options());
  for (int b = 0; b < 4; ++b)
    weights.index_put_({torch::indexing::Slice(b * per_band,
                                               (b + 1) * per_band)},
                       std::sqrt(beta[b]));
  const auto diff = fhat - f;
  const auto weighted =
      weights.view({1, fhat.size(1), 1, 1}) * diff * diff + epsilon_beta;
  return weighted.sqrt().mean();
}

LossParts total_loss(const ForwardOutputs& outputs,
                     const torch::Tensor& target_subbands,
                     const torch::Tensor& target_scores,
                     const TrainConfig& cfg) {
  TORCH_CHECK(target_subbands.defined() && target_scores.defined(),
              "total_loss: missing ground truth");
  LossParts parts;
  parts.enhance = charbonnier_wavelet_loss(outputs.fhat, target_subbands,
                                           cfg.beta, cfg.epsilon_beta);
  parts.assess = (outputs.score - target_scores).square().mean();
  parts.total = parts.enhance + cfg.lambda1 * parts.assess;
  return parts;
}

void configure_threads_from_env() {
  if (const char* env = std::getenv("PANOQA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
      torch::set_num_threads(n);
      at::set_num_interop_threads(n);
    }
  }
}

torch::Tensor image_to_tensor(const RasterImage& image) {
  TORCH_CHECK(image.channels == 3, "image_to_tensor expects 3 channels");
  auto t = torch::empty({3, image.height, image.width}, torch::kFloat64);
  std::copy(image.data.begin(), image.data.end(), t.data_ptr<double>());
  return t.to(torch::kFloat32);
}

// ---------------------------------------------------------------------------

namespace {

struct ImageCache {
  std::unordered_map<std::string, RasterImage> images;

  const RasterImage& get(const fs::path& path, Projection projection) {
    const std::string key = path.string();
    auto it = images.find(key);
    if (it != images.end()) return it->second;
    return images.emplace(key, load_image(path, projection)).first->second;
  }
};

std::vector<const ManifestRecord*> records_for_split(
    const DatasetManifest& manifest, Split split) {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : manifest.records)
    if (r.split == split) out.push_back(&r);
  return out;
}

void write_train_log(const fs::path& path, const std::vector<StepLog>& log) {
  std::ofstream out(path);
  out << "step,L,L_e,L_a\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", row.step, row.total,
                  row.enhance, row.assess);
    out << buf;
  }
}

}  // namespace

void save_checkpoint(SapNet& model, const TrainConfig& train_cfg, int epoch,
                     const fs::path& path) {
  torch::save(model, path.string());
  json side;
  side["model"] = json::parse(model_config_to_json(model->config));
  side["train"] = json::parse(train_config_to_json(train_cfg));
  side["ablation"] = to_string(model->ablation);
  side["epoch"] = epoch;
  std::ofstream out(path.string() + ".json");
  out << side.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream side_in(path.string() + ".json");
  if (!side_in)
    throw std::runtime_error("missing checkpoint sidecar: " + path.string() +
                             ".json");
  const json side = json::parse(side_in);
  LoadedCheckpoint out;
  out.model_cfg = model_config_from_json(side.at("model").dump());
  apply_train_overrides(out.train_cfg, side.at("train").dump());
  out.epoch = side.at("epoch").get<int>();
  const Ablation ab = ablation_from_string(side.at("ablation").get<std::string>());
  out.model = SapNet(out.model_cfg, ab);
  torch::load(out.model, path.string());
  return out;
}

TrainResult train(const DatasetManifest& manifest, const fs::path& manifest_dir,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const fs::path& out_dir) {
  model_cfg.validate();
  train_cfg.validate();
  configure_threads_from_env();
  fs::create_directories(out_dir);

  const auto train_records = records_for_split(manifest, Split::Train);
  if (train_records.empty())
    throw std::invalid_argument("train: empty TRAIN split");
  for (const auto* r : train_records) {
    if (!r->dmos)
      throw std::invalid_argument("train: record " + r->stimulus_id +
                                  " has no DMOS");
    if (!fs::exists(reference_path(manifest_dir, r->source_id)))
      throw std::invalid_argument("train: missing reference image for " +
                                  r->stimulus_id);
  }

  torch::manual_seed(train_cfg.seed);
  SapNet model(model_cfg, train_cfg.ablation);
  model->train();
  torch::optim::Adam opt(model->parameters(),
                         torch::optim::AdamOptions(train_cfg.learning_rate));

  ImageCache cache;
  std::mt19937_64 rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const int p = model_cfg.patch_size;

  TrainResult result;
  result.checkpoint = out_dir / "checkpoint.pt";
  int step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    std::vector<const ManifestRecord*> order = train_records;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng() % i]);

    double epoch_total = 0.0;
    int epoch_steps = 0;
    for (std::size_t pos = 0; pos < order.size();
         pos += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), pos + static_cast<std::size_t>(train_cfg.batch_size));
      std::vector<torch::Tensor> impaired, reference;
      std::vector<double> scores;
      std::vector<std::string> batch_ids;
      for (std::size_t i = pos; i < end; ++i) {
        const ManifestRecord& rec = *order[i];
        const RasterImage& img =
            cache.get(record_path(manifest_dir, rec), Projection::Erp);
        const RasterImage& ref =
            cache.get(reference_path(manifest_dir, rec.source_id),
                      Projection::Erp);
        if (!img.same_shape(ref))
          throw std::invalid_argument("train: reference shape mismatch for " +
                                      rec.stimulus_id);
        const int nx = img.width / p, ny = img.height / p;
        if (nx < 1 || ny < 1)
          throw std::invalid_argument("train: image smaller than patch for " +
                                      rec.stimulus_id);
        const int slot = static_cast<int>(rng() % (nx * ny));
        const int x0 = (slot % nx) * p, y0 = (slot / nx) * p;
        impaired.push_back(image_to_tensor(crop(img, x0, y0, p)));
        reference.push_back(image_to_tensor(crop(ref, x0, y0, p)));
        scores.push_back(*rec.dmos);
        batch_ids.push_back(rec.stimulus_id);
      }
      const auto batch = torch::stack(impaired);
      const auto ref_batch = torch::stack(reference);
      const auto target_subbands = dwt2_tensor(ref_batch);
      const auto target_scores =
          torch::tensor(scores, torch::kFloat64).to(torch::kFloat32);

      opt.zero_grad();
      const auto outputs = model->forward(batch);
      const auto parts =
          total_loss(outputs, target_subbands, target_scores, train_cfg);
      const double total = parts.total.item<double>();
      if (!std::isfinite(total)) {
        std::string ids;
        for (const auto& id : batch_ids) ids += " " + id;
        throw std::runtime_error(
            "train: non-finite loss at step " + std::to_string(step + 1) +
            " (L_e=" + std::to_string(parts.enhance.item<double>()) +
            ", L_a=" + std::to_string(parts.assess.item<double>()) +
            ", batch:" + ids + ")");
      }
      parts.total.backward();
      opt.step();

      ++step;
      result.log.push_back({step, total, parts.enhance.item<double>(),
                            parts.assess.item<double>()});
      epoch_total += total;
      ++epoch_steps;
    }
    result.final_epoch_total = epoch_total / std::max(1, epoch_steps);
    std::cout << "epoch " << epoch << "/" << train_cfg.epochs
              << " mean L = " << result.final_epoch_total << std::endl;
    save_checkpoint(model, train_cfg, epoch, result.checkpoint);
  }
  write_train_log(out_dir / "train_log.csv", result.log);
  return result;
}

EvalResult evaluate(const fs::path& checkpoint, const DatasetManifest& manifest,
                    const fs::path& manifest_dir) {
  configure_threads_from_env();
  auto loaded = load_checkpoint(checkpoint);
  loaded.model->eval();
  const int p = loaded.model_cfg.patch_size;

  const auto test_records = records_for_split(manifest, Split::Test);
  if (test_records.empty())
    throw std::invalid_argument("evaluate: empty TEST split");

  torch::NoGradGuard no_grad;
  EvalResult result;
  ScoreSeries series;
  for (const auto* rec : test_records) {
    if (!rec->dmos)
      throw std::invalid_argument("evaluate: record " + rec->stimulus_id +
                                  " has no DMOS");
    const RasterImage img =
        load_image(record_path(manifest_dir, *rec), Projection::Erp);
    const auto origins =
        patch_origins(img.width, img.height, p, 0, 0, PatchMode::TileAll);
    double sum = 0.0;
    constexpr std::size_t kEvalBatch = 16;
    for (std::size_t pos = 0; pos < origins.size(); pos += kEvalBatch) {
      const std::size_t end = std::min(origins.size(), pos + kEvalBatch);
      std::vector<torch::Tensor> patches;
      for (std::size_t i = pos; i < end; ++i)
        patches.push_back(
            image_to_tensor(crop(img, origins[i].x, origins[i].y, p)));
      const auto scores = loaded.model->forward(torch::stack(patches)).score;
      sum += scores.sum().item<double>();
    }
    const double mean_score = sum / static_cast<double>(origins.size());
    result.stimulus_scores.push_back({rec->stimulus_id, mean_score, *rec->dmos});
    series.push_back({mean_score, *rec->dmos});
  }
  result.report = correlation_report(series, "sapnet");
  return result;
}

std::vector<AblationRow> ablate(const DatasetManifest& manifest,
                                const fs::path& manifest_dir,
                                const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg,
                                const fs::path& out_dir) {
  const std::pair<Ablation, std::string> variants[] = {
      {Ablation::None, "FULL"},
      {Ablation::NoRsab, "NO_RSAB"},
      {Ablation::NoConcat, "NO_CONCAT"},
  };
  std::vector<AblationRow> rows;
  for (const auto& [ablation, name] : variants) {
    TrainConfig cfg = train_cfg;  // identical seed and budget per variant
    cfg.ablation = ablation;
    const fs::path variant_dir = out_dir / ("variant_" + name);
    const auto trained = train(manifest, manifest_dir, model_cfg, cfg,
                               variant_dir);
    const auto eval = evaluate(trained.checkpoint, manifest, manifest_dir);
    rows.push_back({name, eval.report});
  }
  return rows;
}

}  // namespace panoqa::net
