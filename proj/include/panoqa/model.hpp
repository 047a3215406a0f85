#pragma once

#include <torch/torch.h>

#include <array>
#include <string>

namespace panoqa::net {

// -- configuration -----------------------------------------------------------

struct WbreConfig {
  int levels = 2;
  int base_channels = 64;
  int res_blocks_per_level = 2;
};

struct PqeConfig {
  std::array<int, 4> stage_blocks = {3, 4, 6, 3};  // ResNet-34 layout
  int stem_channels = 64;
  int attention_kernel = 7;
};

struct QrConfig {
  std::array<int, 2> conv_channels = {64, 64};
  int fc_hidden = 128;
};

enum class Ablation { None, NoRsab, NoConcat };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

struct ModelConfig {
  int patch_size = 256;
  WbreConfig wbre;
  PqeConfig pqe;
  QrConfig qr;

  void validate() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);
// Merge a partial JSON object over an existing config.
void apply_model_overrides(ModelConfig& cfg, const std::string& text);

// -- differentiable orthonormal Haar on NCHW tensors -------------------------

// Returns channel concat [LL | LH | HL | HH], each C channels at half size.
torch::Tensor dwt2_tensor(const torch::Tensor& x);
// Inverse; expects 4*C channels laid out as above.
torch::Tensor iwt2_tensor(const torch::Tensor& bands);

// -- building blocks ----------------------------------------------------------

// Plain residual block without normalization (restoration-style).
struct PlainResBlockImpl : torch::nn::Module {
  PlainResBlockImpl(int channels);
  torch::Tensor forward(torch::Tensor x);
  void zero_residual();

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(PlainResBlock);

// Channel mean/max pooling -> k x k conv -> sigmoid gate.
struct SpatialAttentionImpl : torch::nn::Module {
  explicit SpatialAttentionImpl(int kernel);
  torch::Tensor forward(const torch::Tensor& features);

  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(SpatialAttention);

// Residual spatial-attention block: y = shortcut(x) + f(x) * att(f(x)).
// With use_attention = false it degrades to a plain residual block (ablation).
struct RsabImpl : torch::nn::Module {
  RsabImpl(int in_channels, int out_channels, int stride, int attention_kernel,
           bool use_attention);
  torch::Tensor forward(torch::Tensor x);
  void zero_residual();

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential shortcut{nullptr};  // null holder = identity
  SpatialAttention attention{nullptr};
  bool attended;
};
TORCH_MODULE(Rsab);

// -- SAP-net modules ----------------------------------------------------------

// Wavelet-based residual enhancement: encoder-decoder with DWT down-sampling
// and IWT up-sampling, long skip in the wavelet domain. Outputs one-level
// sub-bands fhat (12 channels at patch/2) and rhat = iwt2(fhat).
struct WbreImpl : torch::nn::Module {
  explicit WbreImpl(const ModelConfig& cfg);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& patch);
  void zero_residual();

  torch::nn::Conv2d conv_in{nullptr};
  std::vector<torch::nn::Sequential> enc_groups;
  std::vector<torch::nn::Conv2d> down_convs;
  std::vector<torch::nn::Conv2d> up_convs;
  std::vector<torch::nn::Sequential> dec_groups;
  torch::nn::Conv2d skip0{nullptr};
  torch::nn::Conv2d head{nullptr};
  int levels;
};
TORCH_MODULE(Wbre);

// Perceptual quality estimation: twin stems over (impaired, error map),
// concatenation, strided stem, four RSAB stages, light decoder to the
// stride-8 SAPQ map through a sigmoid.
struct PqeImpl : torch::nn::Module {
  PqeImpl(const ModelConfig& cfg, Ablation ablation);
  torch::Tensor forward(const torch::Tensor& patch,
                        const torch::Tensor& error_map);
  void zero_residual();

  torch::nn::Sequential stem_image, stem_error, stem_down;
  std::vector<Rsab> blocks;
  torch::nn::Sequential decoder;
};
TORCH_MODULE(Pqe);

// Quality regression over concat(pmap, pooled error map): two convolutions,
// parallel global max/avg pooling, two FC layers to the scalar score.
struct QrImpl : torch::nn::Module {
  QrImpl(const ModelConfig& cfg, Ablation ablation);
  // Returns (score, cfeat).
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& pmap,
                                                  const torch::Tensor& error_map);

  torch::nn::Sequential convs;
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  bool concat_pmap;
};
TORCH_MODULE(Qr);

struct ForwardOutputs {
  torch::Tensor score;  // (N)
  torch::Tensor rhat;   // (N,3,p,p) pseudo reference
  torch::Tensor fhat;   // (N,12,p/2,p/2) predicted sub-bands
  torch::Tensor emap;   // (N,3,p,p) error map
  torch::Tensor pmap;   // (N,1,p/8,p/8) SAPQ map
  torch::Tensor cfeat;  // QR input feature
};

struct SapNetImpl : torch::nn::Module {
  explicit SapNetImpl(const ModelConfig& cfg, Ablation ablation = Ablation::None);
  ForwardOutputs forward(const torch::Tensor& patch);
  void zero_residual();
  int rsab_count() const;

  ModelConfig config;
  Ablation ablation;
  Wbre wbre{nullptr};
  Pqe pqe{nullptr};
  Qr qr{nullptr};
};
TORCH_MODULE(SapNet);

}  // namespace panoqa::net
