#include "panoqa/model.hpp"

#include <json.hpp>

#include <stdexcept>

namespace panoqa::net {

using json = nlohmann::ordered_json;
using torch::indexing::None;
using torch::indexing::Slice;

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "NONE";
    case Ablation::NoRsab: return "NO_RSAB";
    case Ablation::NoConcat: return "NO_CONCAT";
  }
  throw std::invalid_argument("unknown ablation enum");
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "NONE") return Ablation::None;
  if (s == "NO_RSAB") return Ablation::NoRsab;
  if (s == "NO_CONCAT") return Ablation::NoConcat;
  throw std::invalid_argument("unknown ablation: " + s);
}

void ModelConfig::validate() const {
  const int div = 1 << (wbre.levels + 3);
  if (patch_size < div || patch_size % div != 0)
    throw std::invalid_argument("patch_size must be divisible by 2^(levels+3) = " +
                                std::to_string(div));
  if (wbre.levels < 1 || wbre.base_channels < 1 || wbre.res_blocks_per_level < 1)
    throw std::invalid_argument("WBRE config fields must be positive");
  for (int b : pqe.stage_blocks)
    if (b < 1) throw std::invalid_argument("PQE stage blocks must be positive");
  if (pqe.stem_channels < 2 || pqe.stem_channels % 2 != 0)
    throw std::invalid_argument("PQE stem_channels must be even and >= 2");
  if (pqe.attention_kernel < 1 || pqe.attention_kernel % 2 == 0)
    throw std::invalid_argument("attention kernel must be odd");
  if (qr.conv_channels[0] < 1 || qr.conv_channels[1] < 1 || qr.fc_hidden < 1)
    throw std::invalid_argument("QR config fields must be positive");
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["patch_size"] = cfg.patch_size;
  j["wbre"] = {{"levels", cfg.wbre.levels},
               {"base_channels", cfg.wbre.base_channels},
               {"res_blocks_per_level", cfg.wbre.res_blocks_per_level}};
  j["pqe"] = {{"stage_blocks", cfg.pqe.stage_blocks},
              {"stem_channels", cfg.pqe.stem_channels},
              {"attention_kernel", cfg.pqe.attention_kernel}};
  j["qr"] = {{"conv_channels", cfg.qr.conv_channels},
             {"fc_hidden", cfg.qr.fc_hidden}};
  return j.dump(2);
}

void apply_model_overrides(ModelConfig& cfg, const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("patch_size")) cfg.patch_size = j["patch_size"].get<int>();
  if (j.contains("wbre")) {
    const auto& w = j["wbre"];
    if (w.contains("levels")) cfg.wbre.levels = w["levels"].get<int>();
    if (w.contains("base_channels"))
      cfg.wbre.base_channels = w["base_channels"].get<int>();
    if (w.contains("res_blocks_per_level"))
      cfg.wbre.res_blocks_per_level = w["res_blocks_per_level"].get<int>();
  }
  if (j.contains("pqe")) {
    const auto& p = j["pqe"];
    if (p.contains("stage_blocks"))
      cfg.pqe.stage_blocks = p["stage_blocks"].get<std::array<int, 4>>();
    if (p.contains("stem_channels"))
      cfg.pqe.stem_channels = p["stem_channels"].get<int>();
    if (p.contains("attention_kernel"))
      cfg.pqe.attention_kernel = p["attention_kernel"].get<int>();
  }
  if (j.contains("qr")) {
    const auto& q = j["qr"];
    if (q.contains("conv_channels"))
      cfg.qr.conv_channels = q["conv_channels"].get<std::array<int, 2>>();
    if (q.contains("fc_hidden")) cfg.qr.fc_hidden = q["fc_hidden"].get<int>();
  }
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  apply_model_overrides(cfg, text);
  return cfg;
}

// ---------------------------------------------------------------------------

torch::Tensor dwt2_tensor(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() == 4, "dwt2_tensor expects NCHW");
  TORCH_CHECK(x.size(2) % 2 == 0 && x.size(3) % 2 == 0,
              "dwt2_tensor needs even spatial dims");
  const auto a = x.index({Slice(), Slice(), Slice(0, None, 2), Slice(0, None, 2)});
  const auto b = x.index({Slice(), Slice(), Slice(0, None, 2), Slice(1, None, 2)});
  const auto c = x.index({Slice(), Slice(), Slice(1, None, 2), Slice(0, None, 2)});
  const auto d = x.index({Slice(), Slice(), Slice(1, None, 2), Slice(1, None, 2)});
  return torch::cat({0.5 * (a + b + c + d), 0.5 * (a - b + c - d),
                     0.5 * (a + b - c - d), 0.5 * (a - b - c + d)},
                    1);
}

torch::Tensor iwt2_tensor(const torch::Tensor& bands) {
  TORCH_CHECK(bands.dim() == 4 && bands.size(1) % 4 == 0,
              "iwt2_tensor expects NCHW with 4k channels");
  const auto chunks = bands.chunk(4, 1);
  const auto& ll = chunks[0];
  const auto& lh = chunks[1];
  const auto& hl = chunks[2];
  const auto& hh = chunks[3];
  const auto a = 0.5 * (ll + lh + hl + hh);
  const auto b = 0.5 * (ll - lh + hl - hh);
  const auto c = 0.5 * (ll + lh - hl - hh);
  const auto d = 0.5 * (ll - lh - hl + hh);
  const auto n = bands.size(0), ch = bands.size(1) / 4;
  const auto h = bands.size(2), w = bands.size(3);
  const auto top = torch::stack({a, b}, 4).reshape({n, ch, h, 2 * w});
  const auto bottom = torch::stack({c, d}, 4).reshape({n, ch, h, 2 * w});
  return torch::stack({top, bottom}, 3).reshape({n, ch, 2 * h, 2 * w});
}

// ---------------------------------------------------------------------------

namespace {

torch::nn::Conv2d conv3x3(int in, int out, int stride = 1, bool bias = true) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(bias));
}

torch::nn::Conv2d conv1x1(int in, int out) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1));
}

}  // namespace

PlainResBlockImpl::PlainResBlockImpl(int channels) {
  conv1 = register_module("conv1", conv3x3(channels, channels));
  conv2 = register_module("conv2", conv3x3(channels, channels));
}

torch::Tensor PlainResBlockImpl::forward(torch::Tensor x) {
  return x + conv2(torch::relu(conv1(x)));
}

void PlainResBlockImpl::zero_residual() {
  torch::NoGradGuard guard;
  conv2->weight.zero_();
  conv2->bias.zero_();
}

SpatialAttentionImpl::SpatialAttentionImpl(int kernel) {
  conv = register_module(
      "conv", torch::nn::Conv2d(
                  torch::nn::Conv2dOptions(2, 1, kernel).padding(kernel / 2)));
}

torch::Tensor SpatialAttentionImpl::forward(const torch::Tensor& features) {
  const auto mean_pool = features.mean(1, /*keepdim=*/true);
  const auto max_pool = std::get<0>(features.max(1, /*keepdim=*/true));
  return torch::sigmoid(conv(torch::cat({mean_pool, max_pool}, 1)));
}

RsabImpl::RsabImpl(int in_channels, int out_channels, int stride,
                   int attention_kernel, bool use_attention)
    : attended(use_attention) {
  conv1 = register_module("conv1", conv3x3(in_channels, out_channels, stride,
                                           /*bias=*/false));
  bn1 = register_module("bn1", torch::nn::BatchNorm2d(out_channels));
  conv2 = register_module("conv2", conv3x3(out_channels, out_channels, 1,
                                           /*bias=*/false));
  bn2 = register_module("bn2", torch::nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    shortcut = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, 1)
                              .stride(stride)
                              .bias(false)),
        torch::nn::BatchNorm2d(out_channels));
    register_module("shortcut", shortcut);
  }
  if (attended)
    attention = register_module("attention",
                                SpatialAttention(attention_kernel));
}

torch::Tensor RsabImpl::forward(torch::Tensor x) {
  auto f = bn2(conv2(torch::relu(bn1(conv1(x)))));
  if (attended) f = f * attention(f);
  const auto base = shortcut.is_empty() ? x : shortcut->forward(x);
  return base + f;
}

void RsabImpl::zero_residual() {
  torch::NoGradGuard guard;
  bn2->weight.zero_();
  bn2->bias.zero_();
}

// ---------------------------------------------------------------------------

namespace {

torch::nn::Sequential residual_group(int channels, int blocks) {
  torch::nn::Sequential seq;
  for (int i = 0; i < blocks; ++i) seq->push_back(PlainResBlock(channels));
  return seq;
}

}  // namespace

WbreImpl::WbreImpl(const ModelConfig& cfg) : levels(cfg.wbre.levels) {
  const int base = cfg.wbre.base_channels;
  const int blocks = cfg.wbre.res_blocks_per_level;
  auto width = [base](int level) { return base << level; };

  conv_in = register_module("conv_in", conv3x3(3, width(0)));
  for (int l = 0; l <= levels; ++l) {
    enc_groups.push_back(residual_group(width(l), blocks));
    register_module("enc" + std::to_string(l), enc_groups.back());
  }
  for (int l = 1; l <= levels; ++l) {
    // dwt quadruples channels of level l-1: 4*width(l-1) = 2*width(l)
    down_convs.push_back(conv1x1(2 * width(l), width(l)));
    register_module("down" + std::to_string(l), down_convs.back());
  }
  for (int l = levels - 1; l >= 1; --l) {
    up_convs.push_back(conv1x1(width(l + 1), 4 * width(l)));
    register_module("up" + std::to_string(l), up_convs.back());
    dec_groups.push_back(residual_group(width(l), blocks));
    register_module("dec" + std::to_string(l), dec_groups.back());
  }
  skip0 = register_module("skip0", conv1x1(4 * width(0), width(1)));
  head = register_module("head", conv3x3(width(1), 12));
  {
    // wavelet-domain long skip carries the identity; the head starts silent
    torch::NoGradGuard guard;
    head->weight.zero_();
    head->bias.zero_();
  }
}

std::pair<torch::Tensor, torch::Tensor> WbreImpl::forward(
    const torch::Tensor& patch) {
  TORCH_CHECK(patch.dim() == 4 && patch.size(1) == 3,
              "WBRE expects (N,3,H,W) patches");
  std::vector<torch::Tensor> enc(levels + 1);
  enc[0] = enc_groups[0]->forward(conv_in(patch));
  for (int l = 1; l <= levels; ++l)
    enc[l] = enc_groups[l]->forward(down_convs[l - 1](dwt2_tensor(enc[l - 1])));

  torch::Tensor d = enc[levels];
  for (int i = 0; i < static_cast<int>(dec_groups.size()); ++i) {
    const int l = levels - 1 - i;
    d = iwt2_tensor(up_convs[i](d)) + enc[l];  // short skip across the scale
    d = dec_groups[i]->forward(d);
  }
  d = d + skip0(dwt2_tensor(enc[0]));

  const auto fhat = dwt2_tensor(patch) + head(d);
  return {fhat, iwt2_tensor(fhat)};
}

void WbreImpl::zero_residual() {
  torch::NoGradGuard guard;
  head->weight.zero_();
  head->bias.zero_();
  for (auto& group : enc_groups)
    for (auto& m : group->children())
      if (auto* rb = m->as<PlainResBlock>()) rb->zero_residual();
  for (auto& group : dec_groups)
    for (auto& m : group->children())
      if (auto* rb = m->as<PlainResBlock>()) rb->zero_residual();
}

PqeImpl::PqeImpl(const ModelConfig& cfg, Ablation ablation) {
  const int stem = cfg.pqe.stem_channels;
  const int half = stem / 2;
  auto make_stem = [&] {
    return torch::nn::Sequential(conv3x3(3, half), torch::nn::ReLU(),
                                 conv3x3(half, half), torch::nn::ReLU());
  };
  stem_image = register_module("stem_image", make_stem());
  stem_error = register_module("stem_error", make_stem());
  stem_down = register_module(
      "stem_down",
      torch::nn::Sequential(conv3x3(stem, stem, /*stride=*/2, /*bias=*/false),
                            torch::nn::BatchNorm2d(stem), torch::nn::ReLU()));

  const bool attended = ablation != Ablation::NoRsab;
  int in_ch = stem;
  for (int stage = 0; stage < 4; ++stage) {
    const int out_ch = stem << stage;
    const int stage_stride = stage == 0 ? 1 : 2;
    for (int b = 0; b < cfg.pqe.stage_blocks[stage]; ++b) {
      const int stride = b == 0 ? stage_stride : 1;
      blocks.push_back(Rsab(in_ch, out_ch, stride, cfg.pqe.attention_kernel,
                            attended));
      register_module("rsab" + std::to_string(blocks.size() - 1),
                      blocks.back());
      in_ch = out_ch;
    }
  }

  decoder = register_module(
      "decoder",
      torch::nn::Sequential(
          torch::nn::Upsample(
              torch::nn::UpsampleOptions().scale_factor(std::vector<double>{2, 2})
                  .mode(torch::kNearest)),
          conv3x3(in_ch, stem), torch::nn::ReLU(), conv3x3(stem, 1)));
}

torch::Tensor PqeImpl::forward(const torch::Tensor& patch,
                               const torch::Tensor& error_map) {
  TORCH_CHECK(patch.sizes() == error_map.sizes(),
              "PQE inputs must share the patch shape");
  auto x = torch::cat({stem_image->forward(patch),
                       stem_error->forward(error_map)}, 1);
  x = stem_down->forward(x);
  for (auto& block : blocks) x = block(x);
  return torch::sigmoid(decoder->forward(x));
}

void PqeImpl::zero_residual() {
  for (auto& block : blocks) block->zero_residual();
}

QrImpl::QrImpl(const ModelConfig& cfg, Ablation ablation)
    : concat_pmap(ablation != Ablation::NoConcat) {
  const int in_ch = concat_pmap ? 4 : 3;  // pmap + pooled 3-channel error map
  // leaky rectifiers: the error-map channels start near zero, and narrow
  // configurations must not lose the gradient path through dead units
  const auto leak = torch::nn::LeakyReLUOptions().negative_slope(0.1);
  convs = register_module(
      "convs",
      torch::nn::Sequential(conv3x3(in_ch, cfg.qr.conv_channels[0]),
                            torch::nn::LeakyReLU(leak),
                            conv3x3(cfg.qr.conv_channels[0],
                                    cfg.qr.conv_channels[1]),
                            torch::nn::LeakyReLU(leak)));
  fc1 = register_module(
      "fc1", torch::nn::Linear(2 * cfg.qr.conv_channels[1], cfg.qr.fc_hidden));
  fc2 = register_module("fc2", torch::nn::Linear(cfg.qr.fc_hidden, 1));
  {
    // start predictions mid-scale on the DMOS axis
    torch::NoGradGuard guard;
    fc2->bias.fill_(50.0);
  }
}

std::pair<torch::Tensor, torch::Tensor> QrImpl::forward(
    const torch::Tensor& pmap, const torch::Tensor& error_map) {
  const auto factor = error_map.size(2) / pmap.size(2);
  TORCH_CHECK(factor >= 1 && pmap.size(2) * factor == error_map.size(2),
              "QR: error map and pmap resolutions are incompatible");
  const auto pooled =
      torch::avg_pool2d(error_map, /*kernel_size=*/factor, /*stride=*/factor);
  const auto cfeat = concat_pmap ? torch::cat({pmap, pooled}, 1) : pooled;
  auto x = convs->forward(cfeat);
  const auto max_feat =
      std::get<0>(torch::adaptive_max_pool2d(x, {1, 1})).flatten(1);
  const auto avg_feat = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
  x = torch::leaky_relu(fc1(torch::cat({max_feat, avg_feat}, 1)), 0.1);
  return {fc2(x).squeeze(-1), cfeat};
}

SapNetImpl::SapNetImpl(const ModelConfig& cfg, Ablation ab)
    : config(cfg), ablation(ab) {
  cfg.validate();
  wbre = register_module("wbre", Wbre(cfg));
  pqe = register_module("pqe", Pqe(cfg, ab));
  qr = register_module("qr", Qr(cfg, ab));
}

ForwardOutputs SapNetImpl::forward(const torch::Tensor& patch) {
  TORCH_CHECK(patch.dim() == 4 && patch.size(1) == 3 &&
                  patch.size(2) == config.patch_size &&
                  patch.size(3) == config.patch_size,
              "SAP-net expects (N,3,", config.patch_size, ",",
              config.patch_size, ") input");
  ForwardOutputs out;
  auto [fhat, rhat] = wbre->forward(patch);
  out.fhat = fhat;
  out.rhat = rhat;
  out.emap = rhat - patch;
  out.pmap = pqe->forward(patch, out.emap);
  auto [score, cfeat] = qr->forward(out.pmap, out.emap);
  out.score = score;
  out.cfeat = cfeat;
  return out;
}

void SapNetImpl::zero_residual() {
  wbre->zero_residual();
  pqe->zero_residual();
}

int SapNetImpl::rsab_count() const {
  return static_cast<int>(pqe->blocks.size());
}

}  // namespace panoqa::net
