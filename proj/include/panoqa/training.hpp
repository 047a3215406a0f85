#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "panoqa/dataset.hpp"
#include "panoqa/metrics.hpp"
#include "panoqa/model.hpp"

namespace panoqa::net {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 8;
  double lambda1 = 10.0;                       // weight on the assessment loss
  std::array<double, 4> beta = {1, 2, 2, 4};   // {LL,LH,HL,HH} band weights
  double epsilon_beta = 1e-3;                  // Charbonnier scaling
  int epochs = 30;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::None;

  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
void apply_train_overrides(TrainConfig& cfg, const std::string& text);

// Weighted Charbonnier penalty in the wavelet domain:
// mean over sqrt(sqrt(beta_b) * (fhat - f)^2 + epsilon).
torch::Tensor charbonnier_wavelet_loss(const torch::Tensor& fhat,
                                       const torch::Tensor& f,
                                       const std::array<double, 4>& beta,
                                       double epsilon_beta);

struct LossParts {
  torch::Tensor total;    // enhance + lambda1 * assess
  torch::Tensor enhance;  // L_e
  torch::Tensor assess;   // L_a, batch-mean squared score error
};

LossParts total_loss(const ForwardOutputs& outputs,
                     const torch::Tensor& target_subbands,
                     const torch::Tensor& target_scores,
                     const TrainConfig& cfg);

struct StepLog {
  int step = 0;
  double total = 0.0;
  double enhance = 0.0;
  double assess = 0.0;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<StepLog> log;
  double final_epoch_total = 0.0;
};

// Reads PANOQA_THREADS and caps torch intra-op parallelism when set.
void configure_threads_from_env();

// Patch-wise optimization with adaptive-moment SGD (Adam). Each step samples
// impaired patches with origin-aligned reference patches; checkpoints land in
// out_dir as checkpoint.pt (+ .json sidecar), the log as train_log.csv.
TrainResult train(const DatasetManifest& manifest,
                  const std::filesystem::path& manifest_dir,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const std::filesystem::path& out_dir);

struct LoadedCheckpoint {
  SapNet model{nullptr};
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  int epoch = 0;
};

void save_checkpoint(SapNet& model, const TrainConfig& train_cfg, int epoch,
                     const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

struct StimulusScore {
  std::string stimulus_id;
  double score = 0.0;
  double dmos = 0.0;
};

struct EvalResult {
  std::vector<StimulusScore> stimulus_scores;
  CorrelationReport report;
};

// TILE_ALL patches per TEST stimulus, scores averaged, then the correlation
// protocol against DMOS.
EvalResult evaluate(const std::filesystem::path& checkpoint,
                    const DatasetManifest& manifest,
                    const std::filesystem::path& manifest_dir);

struct AblationRow {
  std::string variant;  // FULL / NO_RSAB / NO_CONCAT
  CorrelationReport report;
};

// Trains baseline and both ablations under identical seeds and budget.
std::vector<AblationRow> ablate(const DatasetManifest& manifest,
                                const std::filesystem::path& manifest_dir,
                                const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg,
                                const std::filesystem::path& out_dir);

// (3,H,W) float tensor from a 3-channel raster, values in [0,1].
torch::Tensor image_to_tensor(const RasterImage& image);

}  // namespace panoqa::net
