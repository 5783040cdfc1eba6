// Pooling and resampling primitives: max pooling, bilinear resampling
// (align-corners-false) and adaptive average pooling.

#include <cmath>

#include "cosnet/ops.hpp"
#include "ops_common.hpp"

namespace cosnet {

Tensor max_pool2d(const Tensor& input, int kernel_h, int kernel_w, int stride_h, int stride_w) {
  const Shape4& s = input.shape();
  if (kernel_h < 1 || kernel_w < 1 || stride_h < 1 || stride_w < 1) {
    throw ValueError("max_pool2d kernel and stride must be positive");
  }
  if (kernel_h > s.h || kernel_w > s.w) {
    throw GeometryError("max_pool2d kernel " + std::to_string(kernel_h) + "x" +
                        std::to_string(kernel_w) + " larger than input " + s.str());
  }
  const int hout = (s.h - kernel_h) / stride_h + 1;
  const int wout = (s.w - kernel_w) / stride_w + 1;
  const int64_t planes = int64_t(s.n) * s.c;
  const int64_t in_plane = int64_t(s.h) * s.w;
  const int64_t out_plane = int64_t(hout) * wout;

  std::vector<double> out(size_t(planes * out_plane));
  // Flat in-plane index of each window's max, saved for the backward route.
  auto argmax = std::make_shared<std::vector<int32_t>>(out.size());
  const double* x = input.values().data();
  for (int64_t p = 0; p < planes; ++p) {
    const double* src = x + p * in_plane;
    for (int oy = 0; oy < hout; ++oy) {
      for (int ox = 0; ox < wout; ++ox) {
        const int y0 = oy * stride_h, x0 = ox * stride_w;
        double best = src[int64_t(y0) * s.w + x0];
        int32_t best_at = int32_t(y0 * s.w + x0);
        for (int ky = 0; ky < kernel_h; ++ky) {
          for (int kx = 0; kx < kernel_w; ++kx) {
            const int32_t at = int32_t((y0 + ky) * s.w + x0 + kx);
            if (src[at] > best) {  // strict: ties keep the first index
              best = src[at];
              best_at = at;
            }
          }
        }
        out[size_t(p * out_plane + int64_t(oy) * wout + ox)] = best;
        (*argmax)[size_t(p * out_plane + int64_t(oy) * wout + ox)] = best_at;
      }
    }
  }
  Tensor result = detail::make_result(Shape4(s.n, s.c, hout, wout), std::move(out), "max_pool2d");

  if (Tape* tape = Tape::common_tape({&input})) {
    tape->record("max_pool2d", {&input}, result,
                 [argmax, planes, in_plane, out_plane](const double* gout, GradSink& sink) {
                   double* gin = sink.input_grad(0).data();
                   for (int64_t p = 0; p < planes; ++p) {
                     for (int64_t i = 0; i < out_plane; ++i) {
                       gin[p * in_plane + (*argmax)[size_t(p * out_plane + i)]] +=
                           gout[p * out_plane + i];
                     }
                   }
                 });
  }
  return result;
}

Tensor max_pool2d(const Tensor& input, int kernel, int stride) {
  return max_pool2d(input, kernel, kernel, stride, stride);
}

namespace {

// Source interpolation taps for one output axis under align-corners-false.
struct LerpTap {
  int lo, hi;
  double frac;
};

std::vector<LerpTap> lerp_taps(int in_extent, int out_extent) {
  std::vector<LerpTap> taps;
  taps.resize(size_t(out_extent));
  const double scale = double(in_extent) / double(out_extent);
  for (int i = 0; i < out_extent; ++i) {
    const double src = (i + 0.5) * scale - 0.5;
    const double f = std::floor(src);
    int lo = int(f);
    double frac = src - f;
    int hi = lo + 1;
    if (lo < 0) lo = 0;
    if (hi > in_extent - 1) hi = in_extent - 1;
    if (lo > in_extent - 1) lo = in_extent - 1;
    taps[size_t(i)] = {lo, hi, frac};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w) {
  const Shape4& s = input.shape();
  if (out_h < 1 || out_w < 1) throw ValueError("bilinear_upsample output extents must be >= 1");

  const auto ty = lerp_taps(s.h, out_h);
  const auto tx = lerp_taps(s.w, out_w);
  const int64_t planes = int64_t(s.n) * s.c;
  const int64_t in_plane = int64_t(s.h) * s.w;
  const int64_t out_plane = int64_t(out_h) * out_w;

  std::vector<double> out(size_t(planes * out_plane));
  const double* x = input.values().data();
  for (int64_t p = 0; p < planes; ++p) {
    const double* src = x + p * in_plane;
    double* dst = out.data() + p * out_plane;
    for (int oy = 0; oy < out_h; ++oy) {
      const LerpTap& y = ty[size_t(oy)];
      const double* r0 = src + int64_t(y.lo) * s.w;
      const double* r1 = src + int64_t(y.hi) * s.w;
      for (int ox = 0; ox < out_w; ++ox) {
        const LerpTap& xv = tx[size_t(ox)];
        // Lerp form keeps identity resamples and constant fields exact.
        const double top = r0[xv.lo] + xv.frac * (r0[xv.hi] - r0[xv.lo]);
        const double bot = r1[xv.lo] + xv.frac * (r1[xv.hi] - r1[xv.lo]);
        dst[int64_t(oy) * out_w + ox] = top + y.frac * (bot - top);
      }
    }
  }
  Tensor result =
      detail::make_result(Shape4(s.n, s.c, out_h, out_w), std::move(out), "bilinear_upsample");

  if (Tape* tape = Tape::common_tape({&input})) {
    auto tyc = std::make_shared<std::vector<LerpTap>>(ty);
    auto txc = std::make_shared<std::vector<LerpTap>>(tx);
    const int w_in = s.w, w_out = out_w, h_out = out_h;
    tape->record("bilinear_upsample", {&input}, result,
                 [tyc, txc, planes, in_plane, out_plane, w_in, w_out,
                  h_out](const double* gout, GradSink& sink) {
                   double* gin = sink.input_grad(0).data();
                   for (int64_t p = 0; p < planes; ++p) {
                     double* gsrc = gin + p * in_plane;
                     const double* g = gout + p * out_plane;
                     for (int oy = 0; oy < h_out; ++oy) {
                       const LerpTap& y = (*tyc)[size_t(oy)];
                       for (int ox = 0; ox < w_out; ++ox) {
                         const LerpTap& xv = (*txc)[size_t(ox)];
                         const double gv = g[int64_t(oy) * w_out + ox];
                         gsrc[int64_t(y.lo) * w_in + xv.lo] += (1 - y.frac) * (1 - xv.frac) * gv;
                         gsrc[int64_t(y.lo) * w_in + xv.hi] += (1 - y.frac) * xv.frac * gv;
                         gsrc[int64_t(y.hi) * w_in + xv.lo] += y.frac * (1 - xv.frac) * gv;
                         gsrc[int64_t(y.hi) * w_in + xv.hi] += y.frac * xv.frac * gv;
                       }
                     }
                   }
                 });
  }
  return result;
}

Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w) {
  const Shape4& s = input.shape();
  if (out_h < 1 || out_w < 1) throw ValueError("adaptive_avg_pool2d output extents must be >= 1");

  const int64_t planes = int64_t(s.n) * s.c;
  const int64_t in_plane = int64_t(s.h) * s.w;
  const int64_t out_plane = int64_t(out_h) * out_w;

  auto bin_lo = [](int i, int in, int out) { return (i * in) / out; };
  auto bin_hi = [](int i, int in, int out) { return ((i + 1) * in + out - 1) / out; };

  std::vector<double> out(size_t(planes * out_plane));
  const double* x = input.values().data();
  for (int64_t p = 0; p < planes; ++p) {
    const double* src = x + p * in_plane;
    double* dst = out.data() + p * out_plane;
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = bin_lo(oy, s.h, out_h), y1 = bin_hi(oy, s.h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = bin_lo(ox, s.w, out_w), x1 = bin_hi(ox, s.w, out_w);
        double acc = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int xx = x0; xx < x1; ++xx) acc += src[int64_t(y) * s.w + xx];
        }
        dst[int64_t(oy) * out_w + ox] = acc / (double(y1 - y0) * (x1 - x0));
      }
    }
  }
  Tensor result =
      detail::make_result(Shape4(s.n, s.c, out_h, out_w), std::move(out), "adaptive_avg_pool2d");

  if (Tape* tape = Tape::common_tape({&input})) {
    const int h_in = s.h, w_in = s.w;
    tape->record(
        "adaptive_avg_pool2d", {&input}, result,
        [planes, in_plane, out_plane, h_in, w_in, out_h, out_w, bin_lo,
         bin_hi](const double* gout, GradSink& sink) {
          double* gin = sink.input_grad(0).data();
          for (int64_t p = 0; p < planes; ++p) {
            double* gsrc = gin + p * in_plane;
            const double* g = gout + p * out_plane;
            for (int oy = 0; oy < out_h; ++oy) {
              const int y0 = bin_lo(oy, h_in, out_h), y1 = bin_hi(oy, h_in, out_h);
              for (int ox = 0; ox < out_w; ++ox) {
                const int x0 = bin_lo(ox, w_in, out_w), x1 = bin_hi(ox, w_in, out_w);
                const double gv = g[int64_t(oy) * out_w + ox] / (double(y1 - y0) * (x1 - x0));
                for (int y = y0; y < y1; ++y) {
                  for (int xx = x0; xx < x1; ++xx) gsrc[int64_t(y) * w_in + xx] += gv;
                }
              }
            }
          }
        });
  }
  return result;
}

}  // namespace cosnet
