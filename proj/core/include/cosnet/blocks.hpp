#pragma once

#include <optional>

#include "cosnet/ops.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Plain convolution parameters: weight plus bias vector.
struct ConvParams {
  Tensor w;
  Tensor b;
};

// Group-norm affine parameters, vectors of length C.
struct NormParams {
  Tensor gamma;
  Tensor beta;
};

// Largest channel-group count <= 8 that divides C; the normalization used
// throughout the network (batch-size-1 friendly, deterministic).
int norm_groups(int channels);

Tensor norm(const Tensor& x, const NormParams& p);

// ---- Sharpening Module (SM) ----
// Learned unsharp-masking on feature maps:
//   Z = depthwise(x)                local structure per channel
//   Y = x - channel_mean(Z)         residual against the averaged response
//   s = softmax_c(spatial_mean(Z))  per-channel sharpening factors, sum to 1
//   out = Z + s * Y
struct SmParams {
  ConvParams dw;  // depthwise [C,1,kd,kd]
};

struct SmTrace {
  Tensor z, y, s, out;
};

Tensor sharpening_module(const Tensor& x, const SmParams& p);
SmTrace sharpening_module_trace(const Tensor& x, const SmParams& p);

// ---- Multi-Contextual Feature Sharpening (MCFS) ----
// 1x1 projection, then in parallel: two grouped dilated 3x3 convolutions
// with distinct dilations and (optionally) the SM branch. Branches are
// concatenated on channels and fused by a 1x1 convolution. Spatial extents
// are preserved by same-padding.
struct McfsParams {
  ConvParams proj;               // 1x1 Cin -> C~
  ConvParams branch1, branch2;   // grouped dilated 3x3, C~ -> C~
  std::optional<SmParams> sm;    // absent when the SM branch is ablated
  ConvParams fuse;               // 1x1 (3*C~ or 2*C~) -> Cout
  int dilation1 = 1, dilation2 = 3;
  int groups = 4;
};

Tensor mcfs(const Tensor& x, const McfsParams& p);

// ---- Convolutional MLP ----
// 1x1 expand -> depthwise 3x3 -> activation -> 1x1 project.
struct ConvMlpParams {
  ConvParams expand;  // 1x1 C -> e*C
  ConvParams dw;      // depthwise 3x3
  ConvParams proj;    // 1x1 e*C -> C
};

Tensor conv_mlp(const Tensor& x, const ConvMlpParams& p);

// ---- Feature Sharpening Block (FSB) ----
// Three pre-normalized residual sub-blocks: depthwise convolution, MCFS (or
// a plain 3x3 convolution in the ablated variant), convolutional MLP.
// With the residual-branch output layers zero-initialized the block is the
// identity map.
struct FsbParams {
  NormParams norm1, norm2, norm3;
  ConvParams dw;                      // depthwise 3x3, residual branch 1
  std::optional<McfsParams> mcfs;     // residual branch 2 (default)
  std::optional<ConvParams> mid_plain;  // residual branch 2 when MCFS is ablated
  ConvMlpParams mlp;                  // residual branch 3
  bool residual = true;
};

Tensor fsb(const Tensor& x, const FsbParams& p);

// ---- Boundary Enhancement Module (BEM) ----
// Explicit high-boost filtering on feature maps: subtract the upsampled
// max-pooled map from the input, concatenate the residual with the input and
// fuse with a same-padded 3x3 convolution. Output width equals input width.
struct BemParams {
  int pool_kernel = 2, pool_stride = 2;
  ConvParams fuse;  // 3x3, 2C -> C
};

struct BemTrace {
  Tensor residual;  // f - upsample(maxpool(f))
  Tensor out;
};

Tensor bem(const Tensor& f, const BemParams& p);
BemTrace bem_trace(const Tensor& f, const BemParams& p);

}  // namespace cosnet
