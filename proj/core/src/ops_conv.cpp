// Direct 2-D convolution (cross-correlation) with stride, zero padding,
// dilation and channel groups, plus its backward kernels.
//
// The kernels iterate kernel taps in the outer loops and pixels in the inner
// ones, so the hot loop is a scalar-times-row accumulation over contiguous
// memory whenever stride_w == 1. Valid output ranges per tap are precomputed,
// which keeps zero padding branch-free.

#include "cosnet/ops.hpp"
#include "ops_common.hpp"

namespace cosnet {

namespace {

struct ConvGeom {
  int n, cin, h, w;
  int cout, cin_g, kh, kw;
  int hout, wout;
  int cout_g;
};

ConvGeom validate_conv(const Shape4& x, const Shape4& wt, const Tensor* bias,
                       const ConvSpec& spec) {
  if (spec.stride_h < 1 || spec.stride_w < 1 || spec.dilation_h < 1 || spec.dilation_w < 1 ||
      spec.pad_h < 0 || spec.pad_w < 0 || spec.groups < 1) {
    throw ValueError("invalid ConvSpec");
  }
  ConvGeom g;
  g.n = x.n;
  g.cin = x.c;
  g.h = x.h;
  g.w = x.w;
  g.cout = wt.n;
  g.cin_g = wt.c;
  g.kh = wt.h;
  g.kw = wt.w;
  if (g.cin % spec.groups != 0 || g.cout % spec.groups != 0) {
    throw ShapeError("channels not divisible by groups: Cin=" + std::to_string(g.cin) +
                     " Cout=" + std::to_string(g.cout) + " groups=" + std::to_string(spec.groups));
  }
  if (g.cin_g != g.cin / spec.groups) {
    throw ShapeError("weight shape " + wt.str() + " does not match input " + x.str() + " with " +
                     std::to_string(spec.groups) + " groups");
  }
  if (bias && bias->numel() != g.cout) {
    throw ShapeError("bias length " + std::to_string(bias->numel()) + " != Cout " +
                     std::to_string(g.cout));
  }
  g.cout_g = g.cout / spec.groups;
  g.hout = (g.h + 2 * spec.pad_h - spec.dilation_h * (g.kh - 1) - 1) / spec.stride_h + 1;
  g.wout = (g.w + 2 * spec.pad_w - spec.dilation_w * (g.kw - 1) - 1) / spec.stride_w + 1;
  if (g.h + 2 * spec.pad_h < spec.dilation_h * (g.kh - 1) + 1 ||
      g.w + 2 * spec.pad_w < spec.dilation_w * (g.kw - 1) + 1 || g.hout < 1 || g.wout < 1) {
    throw GeometryError("conv2d output extent would be non-positive for input " + x.str());
  }
  return g;
}

// Valid range [lo,hi) of output positions whose source index stays in
// [0,extent) for one kernel tap.
inline void tap_range(int extent, int out_extent, int pad, int stride, int tap_offset, int& lo,
                      int& hi) {
  lo = std::max(0, detail::div_ceil(pad - tap_offset, stride));
  hi = std::min(out_extent, detail::div_ceil(extent + pad - tap_offset, stride));
}

void conv_forward(const double* x, const double* wt, const double* bias, double* out,
                  const ConvGeom& g, const ConvSpec& s) {
  const int64_t in_plane = int64_t(g.h) * g.w;
  const int64_t out_plane = int64_t(g.hout) * g.wout;
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.cout; ++oc) {
      double* dst = out + (int64_t(n) * g.cout + oc) * out_plane;
      if (bias) {
        std::fill(dst, dst + out_plane, bias[oc]);
      }
      const int group = oc / g.cout_g;
      for (int icg = 0; icg < g.cin_g; ++icg) {
        const double* src_plane = x + (int64_t(n) * g.cin + group * g.cin_g + icg) * in_plane;
        const double* wrow = wt + ((int64_t(oc) * g.cin_g + icg) * g.kh) * g.kw;
        for (int ky = 0; ky < g.kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(g.h, g.hout, s.pad_h, s.stride_h, ky * s.dilation_h, oy_lo, oy_hi);
          for (int kx = 0; kx < g.kw; ++kx) {
            const double wv = wrow[ky * g.kw + kx];
            if (wv == 0.0) continue;
            int ox_lo, ox_hi;
            tap_range(g.w, g.wout, s.pad_w, s.stride_w, kx * s.dilation_w, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * s.stride_h - s.pad_h + ky * s.dilation_h;
              const double* src = src_plane + int64_t(iy) * g.w - s.pad_w + kx * s.dilation_w;
              double* drow = dst + int64_t(oy) * g.wout;
              if (s.stride_w == 1) {
                for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += wv * src[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += wv * src[ox * s.stride_w];
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward_input(const double* gout, const double* wt, double* gin, const ConvGeom& g,
                         const ConvSpec& s) {
  const int64_t in_plane = int64_t(g.h) * g.w;
  const int64_t out_plane = int64_t(g.hout) * g.wout;
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.cout; ++oc) {
      const double* grow_base = gout + (int64_t(n) * g.cout + oc) * out_plane;
      const int group = oc / g.cout_g;
      for (int icg = 0; icg < g.cin_g; ++icg) {
        double* gin_plane = gin + (int64_t(n) * g.cin + group * g.cin_g + icg) * in_plane;
        const double* wrow = wt + ((int64_t(oc) * g.cin_g + icg) * g.kh) * g.kw;
        for (int ky = 0; ky < g.kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(g.h, g.hout, s.pad_h, s.stride_h, ky * s.dilation_h, oy_lo, oy_hi);
          for (int kx = 0; kx < g.kw; ++kx) {
            const double wv = wrow[ky * g.kw + kx];
            if (wv == 0.0) continue;
            int ox_lo, ox_hi;
            tap_range(g.w, g.wout, s.pad_w, s.stride_w, kx * s.dilation_w, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * s.stride_h - s.pad_h + ky * s.dilation_h;
              double* gin_row = gin_plane + int64_t(iy) * g.w - s.pad_w + kx * s.dilation_w;
              const double* grow = grow_base + int64_t(oy) * g.wout;
              if (s.stride_w == 1) {
                for (int ox = ox_lo; ox < ox_hi; ++ox) gin_row[ox] += wv * grow[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) gin_row[ox * s.stride_w] += wv * grow[ox];
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward_weight(const double* gout, const double* x, double* gw, const ConvGeom& g,
                          const ConvSpec& s) {
  const int64_t in_plane = int64_t(g.h) * g.w;
  const int64_t out_plane = int64_t(g.hout) * g.wout;
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.cout; ++oc) {
      const double* grow_base = gout + (int64_t(n) * g.cout + oc) * out_plane;
      const int group = oc / g.cout_g;
      for (int icg = 0; icg < g.cin_g; ++icg) {
        const double* src_plane = x + (int64_t(n) * g.cin + group * g.cin_g + icg) * in_plane;
        double* gwrow = gw + ((int64_t(oc) * g.cin_g + icg) * g.kh) * g.kw;
        for (int ky = 0; ky < g.kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(g.h, g.hout, s.pad_h, s.stride_h, ky * s.dilation_h, oy_lo, oy_hi);
          for (int kx = 0; kx < g.kw; ++kx) {
            int ox_lo, ox_hi;
            tap_range(g.w, g.wout, s.pad_w, s.stride_w, kx * s.dilation_w, ox_lo, ox_hi);
            double acc = 0.0;
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * s.stride_h - s.pad_h + ky * s.dilation_h;
              const double* src = src_plane + int64_t(iy) * g.w - s.pad_w + kx * s.dilation_w;
              const double* grow = grow_base + int64_t(oy) * g.wout;
              if (s.stride_w == 1) {
                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * src[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * src[ox * s.stride_w];
              }
            }
            gwrow[ky * g.kw + kx] += acc;
          }
        }
      }
    }
  }
}

Tensor conv2d_impl(const Tensor& input, const Tensor& weight, const Tensor* bias,
                   const ConvSpec& spec) {
  const ConvGeom g = validate_conv(input.shape(), weight.shape(), bias, spec);
  std::vector<double> out(size_t(int64_t(g.n) * g.cout * g.hout * g.wout), 0.0);
  conv_forward(input.values().data(), weight.values().data(),
               bias ? bias->values().data() : nullptr, out.data(), g, spec);
  Tensor result =
      detail::make_result(Shape4(g.n, g.cout, g.hout, g.wout), std::move(out), "conv2d");

  if (Tape* tape = Tape::common_tape({&input, &weight, bias})) {
    auto xi = input.impl();
    auto wi = weight.impl();
    const bool has_bias = bias != nullptr;
    tape->record("conv2d", {&input, &weight, bias}, result,
                 [xi, wi, has_bias, g, spec](const double* gout, GradSink& sink) {
                   conv_backward_input(gout, wi->values.data(), sink.input_grad(0).data(), g,
                                       spec);
                   conv_backward_weight(gout, xi->values.data(), sink.input_grad(1).data(), g,
                                        spec);
                   if (has_bias) {
                     double* gb = sink.input_grad(2).data();
                     const int64_t out_plane = int64_t(g.hout) * g.wout;
                     for (int n = 0; n < g.n; ++n) {
                       for (int oc = 0; oc < g.cout; ++oc) {
                         const double* grow = gout + (int64_t(n) * g.cout + oc) * out_plane;
                         double acc = 0.0;
                         for (int64_t i = 0; i < out_plane; ++i) acc += grow[i];
                         gb[oc] += acc;
                       }
                     }
                   }
                 });
  }
  return result;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const ConvSpec& spec) {
  return conv2d_impl(input, weight, nullptr, spec);
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec) {
  return conv2d_impl(input, weight, &bias, spec);
}

}  // namespace cosnet
