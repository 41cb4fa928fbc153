#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t3s/augment.hpp"
#include "t3s/stylebank.hpp"
#include "t3s/styleops.hpp"
#include "t3s/synthdomains.hpp"
#include "t3s/tensor.hpp"

namespace t3s {

enum class StyleMode { kAlways, kOff };

std::string_view style_mode_name(StyleMode mode);
StyleMode parse_style_mode(std::string_view name);

struct ModelConfig {
  std::size_t channels = 16;
  std::size_t classes = kNumClasses;
  std::size_t bases = 8;
  StyleMode mode = StyleMode::kAlways;
};

struct ConvLayer {
  Tensor weight;  // (Cout, Cin, 3, 3)
  Tensor bias;    // (Cout)
};

/// Low-rank update of a conv layer viewed as a (Cout, Cin*9) matrix:
/// W_eff = W + (alpha / rank) * B A. B starts at zero, so a fresh adapter
/// leaves the layer unchanged.
struct LoraAdapter {
  std::string target;  // "enc0", "enc1", "enc2"
  std::size_t rank = 4;
  double alpha = 8.0;
  Tensor a;  // (rank, fan_in)
  Tensor b;  // (fan_out, rank)

  double scaling() const { return alpha / static_cast<double>(rank); }
};

/// Network layout (C channels, K classes, input 3 x H x W):
///   enc0: conv 3->C, 2x2 avg pool        -> stage-1 map (C, H/2, W/2)
///   style hook on the stage-1 map
///   enc1, enc2: relu, conv C->C
///   dec0: relu, conv C->C; dec1: relu, conv C->K; bilinear x2 upsample
struct ModelParams {
  ModelConfig config;
  std::array<ConvLayer, 3> encoder;
  std::array<ConvLayer, 2> decoder;
  StyleBank bank;
  std::vector<LoraAdapter> adapters;
  bool lora_enabled = false;

  /// Every parameter tensor under a stable name, in checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;
  /// FNV-1a hash over all parameter bytes.
  std::uint64_t checksum() const;
  /// Deep copy with fresh leaves.
  ModelParams clone() const;
};

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// One fresh adapter per encoder conv.
std::vector<LoraAdapter> make_adapters(const ModelParams& params, std::size_t rank, double alpha,
                                       std::uint64_t seed);

/// Effective weight of a single layer.
Tensor lora_weight(const Tensor& base, const LoraAdapter& adapter);

/// Copy of `params` whose encoder weights are the adapted effective weights
/// (still attached to the graph of A and B). With `enabled == false` the
/// base weights are returned untouched.
ModelParams apply_lora(const ModelParams& params, const std::vector<LoraAdapter>& adapters,
                       bool enabled);

/// Stage-1 features of a (3, H, W) image; H and W must be multiples of 4.
Tensor encode(const Tensor& image, const ModelParams& params);

struct HookResult {
  Tensor feature;
  StyleVector pre;
  StyleVector post;
  ProjectionWeights weights;  // undefined when mode is kOff
};

/// mode kOff: identity. mode kAlways: decompose, project the style onto the
/// bank, recompose with the original content.
HookResult style_hook(const Tensor& feature, const StyleBank& bank, StyleMode mode);

/// Remaining encoder blocks and the decoder; returns (K, H, W) logits.
Tensor decode(const Tensor& feature, const ModelParams& params);

struct ForwardPass {
  Tensor logits;
  HookResult hook;
};

ForwardPass forward(const Tensor& image, const ModelParams& params);

/// Mean over pixels of -sum_k target_k * log softmax(logits)_k.
Tensor seg_loss(const Tensor& logits, const Tensor& soft_target);

Tensor total_loss(const Tensor& seg, const Tensor& sty, double lambda_sty);

Tensor image_tensor(const Sample& s);
Tensor target_tensor(const Sample& s);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double lambda_sty = 0.1;
  StyleMode style_mode = StyleMode::kAlways;
  double mixup_prob = 0.5;
  bool cross_domain_mixup = true;
  std::size_t n_bases = 8;
  std::size_t channels = 16;
  std::uint64_t seed = 1;
  /// Freeze encoder base weights (adapter fine-tuning phase).
  bool freeze_encoder = false;
  /// Cap on validation samples per epoch; 0 means all.
  std::size_t validation_limit = 0;
};

void validate_train_config(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_seg = 0.0;
  double l_sty = 0.0;
  double total = 0.0;
  double iou = 0.0;
  double dice = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Mini-batch AdamW training on the pooled source samples. With `initial`
/// given, training continues from those parameters (adapters included).
TrainResult train(const std::vector<const DomainDataset*>& sources, const TrainConfig& cfg,
                  const std::vector<const DomainDataset*>& validation = {},
                  const ModelParams* initial = nullptr);

/// Foundation-model analogue: supervised pre-training on the sources, then
/// encoder frozen and low-rank adapters fine-tuned together with the decoder
/// and bank. Without `fm` this is plain training from scratch.
struct PipelineConfig {
  TrainConfig train;
  bool fm = false;
  std::size_t pretrain_epochs = 20;
  std::size_t lora_rank = 4;
  double lora_alpha = 8.0;
};

TrainResult train_pipeline(const std::vector<const DomainDataset*>& sources,
                           const PipelineConfig& cfg,
                           const std::vector<const DomainDataset*>& validation = {});

struct Inference {
  std::vector<std::uint8_t> mask;
  StyleVector pre;
  StyleVector post;
  ProjectionWeights weights;  // undefined when the model does not project
};

/// Single stateless forward pass with the model's style mode; no parameter
/// is touched.
Inference infer_test_time(const Sample& sample, const ModelParams& params);

/// "T3S1", u32 entry count, then per entry: u32 name length, name, u32 dtype
/// length, "f64", u32 rank, u64 extents; then every array as little-endian
/// doubles in manifest order.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Columns: epoch,l_seg,l_sty,total,iou,dice,seconds. Without `timing` the
/// seconds column is written as 0 so reruns are byte-identical.
void write_report_csv(const TrainReport& report, const std::filesystem::path& path, bool timing);

}  // namespace t3s
