#pragma once

#include <span>
#include <vector>

#include "cosnet/autodiff.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Geometry of a 2-D convolution. Convolution here is cross-correlation (no
// kernel flip) with zero padding, the usual deep-learning convention.
struct ConvSpec {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dilation_h = 1, dilation_w = 1;
  int groups = 1;

  static ConvSpec padded(int pad) { return ConvSpec{1, 1, pad, pad, 1, 1, 1}; }

  ConvSpec with_stride(int s) const {
    ConvSpec r = *this;
    r.stride_h = r.stride_w = s;
    return r;
  }
  ConvSpec with_dilation(int d) const {
    ConvSpec r = *this;
    r.dilation_h = r.dilation_w = d;
    return r;
  }
  ConvSpec with_groups(int g) const {
    ConvSpec r = *this;
    r.groups = g;
    return r;
  }
};

// input [N,Cin,H,W] x weight [Cout,Cin/groups,kh,kw] (+ bias vector of length
// Cout) -> [N,Cout,H',W'] where H' = (H + 2p - d(k-1) - 1)/s + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const ConvSpec& spec = {});
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec = {});

// Per-window maximum, no padding, floor geometry. Backward routes the
// gradient to the first maximum in row-major window order.
Tensor max_pool2d(const Tensor& input, int kernel_h, int kernel_w, int stride_h, int stride_w);
Tensor max_pool2d(const Tensor& input, int kernel, int stride);

// Align-corners-false bilinear resampling to (out_h, out_w). Exact identity
// when the extents already match; exact on constant fields.
Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w);

// Mean over bins of size ~H/out_h x W/out_w (PyTorch-style adaptive binning:
// bin i covers [floor(i*H/out), ceil((i+1)*H/out))).
Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w);

// Numerically stable softmax along one axis of the normalized N,C,H,W layout.
Tensor softmax(const Tensor& input, int axis);

// [N,C,H,W] -> [N,1,H,W], arithmetic mean over channels.
Tensor channel_mean(const Tensor& input);
// [N,C,H,W] -> [N,C,1,1], arithmetic mean over the spatial extent.
Tensor spatial_mean(const Tensor& input);

// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& input);

Tensor concat(std::span<const Tensor> inputs, int axis);

// Elementwise arithmetic. Beyond identical shapes exactly two broadcast
// patterns are accepted, in either operand position:
//   [N,1,H,W] against [N,C,H,W]   (per-pixel values applied to every channel)
//   [N,C,1,1] against [N,C,H,W]   (per-channel values applied to every pixel)
// Anything else is a ShapeError; general broadcasting is deliberately not
// supported so the gradient code stays auditable.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// x * k for a plain constant k.
Tensor scale(const Tensor& input, double k);

// Smooth gaussian-error-linear activation x * Phi(x), exact erf form.
Tensor gelu(const Tensor& input);

// Group normalization over channel groups with per-channel affine
// parameters; gamma/beta are vectors of length C.
Tensor group_norm(const Tensor& input, int num_groups, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Mean negative log-softmax over non-ignored pixels; 0 (with zero gradient)
// when every pixel is ignored. logits [N,K,H,W], labels [N,H,W] with values
// in [0,K) or equal to ignore_index.
Tensor cross_entropy(const Tensor& logits, const LabelMap& labels, int ignore_index = -1);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace cosnet
