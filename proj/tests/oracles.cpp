#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

using cosnet::Shape4;

Tensor conv2d_ref(const Tensor& x, const Tensor& w, const std::vector<double>& bias, int stride_h,
                  int stride_w, int pad_h, int pad_w, int dil_h, int dil_w, int groups) {
  const Shape4 xs = x.shape(), ws = w.shape();
  const int cin_g = ws.c, cout = ws.n, kh = ws.h, kw = ws.w;
  const int cout_g = cout / groups;
  const int hout = (xs.h + 2 * pad_h - dil_h * (kh - 1) - 1) / stride_h + 1;
  const int wout = (xs.w + 2 * pad_w - dil_w * (kw - 1) - 1) / stride_w + 1;

  Tensor out = Tensor::zeros(Shape4{xs.n, cout, hout, wout});
  std::span<double> o = out.values_mut();
  auto oidx = [&](int n, int c, int y, int xx) {
    return size_t(((int64_t(n) * cout + c) * hout + y) * wout + xx);
  };
  for (int n = 0; n < xs.n; ++n) {
    for (int oc = 0; oc < cout; ++oc) {
      const int g = oc / cout_g;
      for (int oy = 0; oy < hout; ++oy) {
        for (int ox = 0; ox < wout; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[size_t(oc)];
          for (int ic = 0; ic < cin_g; ++ic) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride_h - pad_h + ky * dil_h;
                const int ix = ox * stride_w - pad_w + kx * dil_w;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += x.at(n, g * cin_g + ic, iy, ix) * w.at(oc, ic, ky, kx);
              }
            }
          }
          o[oidx(n, oc, oy, ox)] = acc;
        }
      }
    }
  }
  return out;
}

Tensor max_pool2d_ref(const Tensor& x, int kh, int kw, int sh, int sw) {
  const Shape4 s = x.shape();
  const int hout = (s.h - kh) / sh + 1;
  const int wout = (s.w - kw) / sw + 1;
  Tensor out = Tensor::zeros(Shape4{s.n, s.c, hout, wout});
  std::span<double> o = out.values_mut();
  size_t i = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < hout; ++oy) {
        for (int ox = 0; ox < wout; ++ox) {
          double best = -std::numeric_limits<double>::infinity();
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              best = std::max(best, x.at(n, c, oy * sh + ky, ox * sw + kx));
            }
          }
          o[i++] = best;
        }
      }
    }
  }
  return out;
}

Tensor bilinear_ref(const Tensor& x, int out_h, int out_w) {
  const Shape4 s = x.shape();
  Tensor out = Tensor::zeros(Shape4{s.n, s.c, out_h, out_w});
  std::span<double> o = out.values_mut();
  auto src_of = [](int i, int in, int out) { return (i + 0.5) * double(in) / double(out) - 0.5; };
  size_t idx = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          const double sy = src_of(oy, s.h, out_h), sx = src_of(ox, s.w, out_w);
          const int y0f = int(std::floor(sy)), x0f = int(std::floor(sx));
          const double fy = sy - y0f, fx = sx - x0f;
          const int y0 = std::clamp(y0f, 0, s.h - 1), y1 = std::clamp(y0f + 1, 0, s.h - 1);
          const int x0 = std::clamp(x0f, 0, s.w - 1), x1 = std::clamp(x0f + 1, 0, s.w - 1);
          o[idx++] = (1 - fy) * (1 - fx) * x.at(n, c, y0, x0) +
                     (1 - fy) * fx * x.at(n, c, y0, x1) + fy * (1 - fx) * x.at(n, c, y1, x0) +
                     fy * fx * x.at(n, c, y1, x1);
        }
      }
    }
  }
  return out;
}

Tensor adaptive_avg_pool_ref(const Tensor& x, int out_h, int out_w) {
  const Shape4 s = x.shape();
  Tensor out = Tensor::zeros(Shape4{s.n, s.c, out_h, out_w});
  std::span<double> o = out.values_mut();
  size_t idx = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          const int y0 = (oy * s.h) / out_h;
          const int y1 = int(std::ceil(double(oy + 1) * s.h / out_h));
          const int x0 = (ox * s.w) / out_w;
          const int x1 = int(std::ceil(double(ox + 1) * s.w / out_w));
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            for (int xx = x0; xx < x1; ++xx) acc += x.at(n, c, y, xx);
          }
          o[idx++] = acc / (double(y1 - y0) * (x1 - x0));
        }
      }
    }
  }
  return out;
}

Tensor channel_mean_ref(const Tensor& x) {
  const Shape4 s = x.shape();
  Tensor out = Tensor::zeros(Shape4{s.n, 1, s.h, s.w});
  std::span<double> o = out.values_mut();
  size_t idx = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      for (int xx = 0; xx < s.w; ++xx) {
        double acc = 0.0;
        for (int c = 0; c < s.c; ++c) acc += x.at(n, c, y, xx);
        o[idx++] = acc / s.c;
      }
    }
  }
  return out;
}

Tensor spatial_mean_ref(const Tensor& x) {
  const Shape4 s = x.shape();
  Tensor out = Tensor::zeros(Shape4{s.n, s.c, 1, 1});
  std::span<double> o = out.values_mut();
  size_t idx = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (int y = 0; y < s.h; ++y) {
        for (int xx = 0; xx < s.w; ++xx) acc += x.at(n, c, y, xx);
      }
      o[idx++] = acc / (double(s.h) * s.w);
    }
  }
  return out;
}

Tensor softmax_channels_ref(const Tensor& x) {
  const Shape4 s = x.shape();
  Tensor out = Tensor::zeros(s);
  std::span<double> o = out.values_mut();
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      for (int xx = 0; xx < s.w; ++xx) {
        double mx = x.at(n, 0, y, xx);
        for (int c = 1; c < s.c; ++c) mx = std::max(mx, x.at(n, c, y, xx));
        double denom = 0.0;
        for (int c = 0; c < s.c; ++c) denom += std::exp(x.at(n, c, y, xx) - mx);
        for (int c = 0; c < s.c; ++c) {
          o[size_t(((int64_t(n) * s.c + c) * s.h + y) * s.w + xx)] =
              std::exp(x.at(n, c, y, xx) - mx) / denom;
        }
      }
    }
  }
  return out;
}

double cross_entropy_ref(const Tensor& logits, const LabelMap& labels, int ignore_index) {
  const Shape4 s = logits.shape();
  double loss = 0.0;
  int64_t count = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      for (int xx = 0; xx < s.w; ++xx) {
        const int32_t label = labels.at(n, y, xx);
        if (label == ignore_index) continue;
        double denom = 0.0;
        for (int c = 0; c < s.c; ++c) denom += std::exp(logits.at(n, c, y, xx));
        loss += -std::log(std::exp(logits.at(n, label, y, xx)) / denom);
        ++count;
      }
    }
  }
  return count ? loss / double(count) : 0.0;
}

Tensor sharpening_module_ref(const Tensor& x, const cosnet::SmParams& p) {
  const Shape4 s = x.shape();
  const int kd = p.dw.w.shape().h;
  const int pad = (kd - 1) / 2;
  std::vector<double> bias(p.dw.b.values().begin(), p.dw.b.values().end());

  // Step 1: depthwise encoding (each channel convolved with its own kernel).
  const Tensor z = conv2d_ref(x, p.dw.w, bias, 1, 1, pad, pad, 1, 1, s.c);
  // Step 2: averaged response across channels.
  const Tensor zbar = channel_mean_ref(z);
  // Step 3: residual of the input against the averaged response.
  Tensor y = Tensor::zeros(s);
  {
    std::span<double> yv = y.values_mut();
    size_t i = 0;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (int yy = 0; yy < s.h; ++yy) {
          for (int xx = 0; xx < s.w; ++xx) {
            yv[i++] = x.at(n, c, yy, xx) - zbar.at(n, 0, yy, xx);
          }
        }
      }
    }
  }
  // Step 4: softmax over per-channel spatial means.
  const Tensor sfac = softmax_channels_ref(spatial_mean_ref(z));
  // Step 5: weighted residual added back onto the encoding.
  Tensor out = Tensor::zeros(s);
  std::span<double> ov = out.values_mut();
  size_t i = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int yy = 0; yy < s.h; ++yy) {
        for (int xx = 0; xx < s.w; ++xx) {
          ov[i++] = z.at(n, c, yy, xx) + sfac.at(n, c, 0, 0) * y.at(n, c, yy, xx);
        }
      }
    }
  }
  return out;
}

Tensor bem_ref(const Tensor& f, const cosnet::BemParams& p) {
  const Shape4 s = f.shape();
  const Tensor pooled = max_pool2d_ref(f, p.pool_kernel, p.pool_kernel, p.pool_stride,
                                       p.pool_stride);
  const Tensor up = bilinear_ref(pooled, s.h, s.w);
  Tensor merged = Tensor::zeros(Shape4{s.n, 2 * s.c, s.h, s.w});
  {
    std::span<double> m = merged.values_mut();
    size_t i = 0;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < 2 * s.c; ++c) {
        for (int y = 0; y < s.h; ++y) {
          for (int xx = 0; xx < s.w; ++xx) {
            m[i++] = c < s.c ? f.at(n, c, y, xx)
                             : f.at(n, c - s.c, y, xx) - up.at(n, c - s.c, y, xx);
          }
        }
      }
    }
  }
  std::vector<double> bias(p.fuse.b.values().begin(), p.fuse.b.values().end());
  return conv2d_ref(merged, p.fuse.w, bias, 1, 1, 1, 1, 1, 1, 1);
}

}  // namespace oracle
