#include "cosnet/blocks.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "cosnet/error.hpp"

namespace cosnet {

namespace {

// Same-padding for an odd kernel under dilation.
inline int same_pad(int kernel, int dilation) { return dilation * (kernel - 1) / 2; }

}  // namespace

int norm_groups(int channels) {
  for (int g = std::min(8, channels); g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

Tensor norm(const Tensor& x, const NormParams& p) {
  return group_norm(x, norm_groups(x.shape().c), p.gamma, p.beta);
}

Tensor sharpening_module(const Tensor& x, const SmParams& p) {
  return sharpening_module_trace(x, p).out;
}

SmTrace sharpening_module_trace(const Tensor& x, const SmParams& p) {
  const int c = x.shape().c;
  if (p.dw.w.shape().n != c || p.dw.w.shape().c != 1) {
    throw ShapeError("sharpening_module: depthwise weight " + p.dw.w.shape().str() +
                     " does not match width C=" + std::to_string(c));
  }
  const int kd = p.dw.w.shape().h;
  ConvSpec spec = ConvSpec::padded(same_pad(kd, 1)).with_groups(c);

  SmTrace t;
  t.z = conv2d(x, p.dw.w, p.dw.b, spec);
  t.y = x - channel_mean(t.z);
  t.s = softmax(spatial_mean(t.z), /*axis=*/1);
  t.out = t.z + t.s * t.y;
  return t;
}

Tensor mcfs(const Tensor& x, const McfsParams& p) {
  if (p.dilation1 == p.dilation2) {
    throw ValueError("mcfs: the two contextual branches must use distinct dilations");
  }
  if (p.proj.w.shape().c != x.shape().c) {
    throw ShapeError("mcfs: projection expects Cin=" + std::to_string(p.proj.w.shape().c) +
                     ", got " + std::to_string(x.shape().c));
  }
  const Tensor projected = conv2d(x, p.proj.w, p.proj.b, ConvSpec{});

  const int k = p.branch1.w.shape().h;
  const Tensor ctx1 =
      conv2d(projected, p.branch1.w, p.branch1.b,
             ConvSpec::padded(same_pad(k, p.dilation1)).with_dilation(p.dilation1).with_groups(
                 p.groups));
  const Tensor ctx2 =
      conv2d(projected, p.branch2.w, p.branch2.b,
             ConvSpec::padded(same_pad(k, p.dilation2)).with_dilation(p.dilation2).with_groups(
                 p.groups));

  std::vector<Tensor> branches{ctx1, ctx2};
  if (p.sm) branches.push_back(sharpening_module(projected, *p.sm));

  const Tensor merged = concat(branches, /*axis=*/1);
  return conv2d(merged, p.fuse.w, p.fuse.b, ConvSpec{});
}

Tensor conv_mlp(const Tensor& x, const ConvMlpParams& p) {
  if (p.expand.w.shape().c != x.shape().c) {
    throw ShapeError("conv_mlp: expand expects Cin=" + std::to_string(p.expand.w.shape().c) +
                     ", got " + std::to_string(x.shape().c));
  }
  const int hidden = p.expand.w.shape().n;
  Tensor h = conv2d(x, p.expand.w, p.expand.b, ConvSpec{});
  h = conv2d(h, p.dw.w, p.dw.b, ConvSpec::padded(1).with_groups(hidden));
  h = gelu(h);
  return conv2d(h, p.proj.w, p.proj.b, ConvSpec{});
}

Tensor fsb(const Tensor& x, const FsbParams& p) {
  if (bool(p.mcfs) == bool(p.mid_plain)) {
    throw ValueError("fsb: exactly one of mcfs / mid_plain must be present");
  }
  const int c = x.shape().c;
  if (p.dw.w.shape().n != c) {
    throw ShapeError("fsb: block width C=" + std::to_string(p.dw.w.shape().n) +
                     " does not match input " + x.shape().str());
  }

  auto branch = [&](const Tensor& in, const NormParams& np, auto&& fn) {
    Tensor out = fn(norm(in, np));
    return p.residual ? in + out : out;
  };

  Tensor x1 = branch(x, p.norm1, [&](const Tensor& v) {
    return conv2d(v, p.dw.w, p.dw.b, ConvSpec::padded(1).with_groups(c));
  });
  Tensor x2 = branch(x1, p.norm2, [&](const Tensor& v) {
    if (p.mcfs) return mcfs(v, *p.mcfs);
    return conv2d(v, p.mid_plain->w, p.mid_plain->b, ConvSpec::padded(1));
  });
  return branch(x2, p.norm3, [&](const Tensor& v) { return conv_mlp(v, p.mlp); });
}

Tensor bem(const Tensor& f, const BemParams& p) { return bem_trace(f, p).out; }

BemTrace bem_trace(const Tensor& f, const BemParams& p) {
  const Shape4& s = f.shape();
  if (p.fuse.w.shape().n != s.c || p.fuse.w.shape().c != 2 * s.c) {
    throw ShapeError("bem: fusion weight " + p.fuse.w.shape().str() + " must map 2C -> C for C=" +
                     std::to_string(s.c));
  }
  BemTrace t;
  const Tensor pooled = max_pool2d(f, p.pool_kernel, p.pool_stride);
  const Tensor restored = bilinear_upsample(pooled, s.h, s.w);
  t.residual = f - restored;
  const std::array<Tensor, 2> parts{f, t.residual};
  const Tensor merged = concat(parts, /*axis=*/1);
  t.out = conv2d(merged, p.fuse.w, p.fuse.b, ConvSpec::padded(1));
  return t;
}

}  // namespace cosnet
