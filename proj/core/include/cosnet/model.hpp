#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cosnet/blocks.hpp"
#include "cosnet/params.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Full architectural description. Spatial contract: stage i produces
// input/4, /8, /16, /32, so input extents must be divisible by 32.
struct ModelConfig {
  std::array<int, 4> stage_channels{8, 16, 32, 64};
  std::array<int, 4> stage_depths{1, 1, 2, 1};
  std::pair<int, int> mcfs_dilations{1, 3};
  int mcfs_groups = 2;
  int sm_kernel = 3;
  int mlp_ratio = 4;
  int bem_pool = 2;
  int bem_stride = 2;
  int num_classes = 5;
  bool use_mcfs = true;
  bool use_sm = true;
  bool use_bem = true;
  bool use_residual = true;
  int decoder_width = 32;
  int input_channels = 3;

  // Throws ValueError on contradictions (e.g. SM enabled without MCFS).
  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  // The four ablation variants: (mcfs, sm, bem) =
  //   1:(off,off,off)  2:(on,off,off)  3:(on,on,off)  4:(on,on,on)
  ModelConfig ablation_variant(int row) const;
};

// JSON config file: every ModelConfig field plus "seed".
struct RunConfig {
  ModelConfig model;
  uint64_t seed = 0;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& json_text);

// ---- typed parameter tree ----

struct StemParams {
  ConvParams conv1, conv2;
  NormParams norm1, norm2;
};

struct StageParams {
  std::optional<ConvParams> transition;  // stride-2 conv, stages 2..4
  std::optional<NormParams> transition_norm;
  std::vector<FsbParams> blocks;
};

struct DecoderParams {
  std::array<ConvParams, 4> ppm_proj;  // 1x1 onto each pooled scale
  ConvParams ppm_fuse;                 // 3x3 after the pyramid concat
  NormParams ppm_norm;
  ConvParams lat5, lat2, lat1;         // lateral 1x1 projections
  ConvParams smooth5, smooth2, smooth1;
  NormParams smooth5_norm, smooth2_norm, smooth1_norm;
  ConvParams classifier;               // 1x1 onto num_classes
};

struct CosnetParams {
  StemParams stem;
  std::array<StageParams, 4> stages;
  std::optional<BemParams> bem;
  DecoderParams decoder;
};

struct Model {
  ModelConfig config;
  CosnetParams params;
  ParamStore store;  // flat named view aliasing the tensors above
};

// Deterministic seeded construction. Convolutions get fan-in-scaled uniform
// weights, residual-branch output layers start at zero (FSBs are identity
// maps at initialization), norm affine starts at gamma=1, beta=0.
Model build_model(const ModelConfig& config, uint64_t seed);

// ---- forward passes ----

struct FeaturePyramid {
  Tensor f1, f2, f3, f4;  // stage outputs at 1/4 .. 1/32 resolution
  Tensor f5;              // boundary-enhanced third-stage map (or f3 itself)
};

Tensor stem_forward(const Tensor& image, const StemParams& p);
// Stride-2 transition into a stage (identity for stage 1).
Tensor transition_forward(const Tensor& x, const StageParams& p);

// Stem + four FSB stages; fills f1..f4.
FeaturePyramid backbone_forward(const Model& model, const Tensor& image);
// Sets f5 = bem(f3) when enabled, otherwise f5 = f3.
void intermediate_forward(const Model& model, FeaturePyramid& pyramid);
// Pyramid-pooling context + top-down fusion + classifier; logits at the
// input resolution.
Tensor decoder_forward(const Model& model, const FeaturePyramid& pyramid);

Tensor model_forward(const Model& model, const Tensor& image);

struct ForwardTrace {
  FeaturePyramid pyramid;
  Tensor logits;
};
ForwardTrace model_forward_trace(const Model& model, const Tensor& image);

// Argmax over classes, ties broken toward the lowest class index.
LabelMap predict_mask(const Model& model, const Tensor& image);
LabelMap logits_to_labels(const Tensor& logits);

}  // namespace cosnet
