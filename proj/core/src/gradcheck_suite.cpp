// The named gradient-check suite: one finite-difference check per primitive
// and per network block, at widths small enough to sweep every element.

#include <algorithm>
#include <random>

#include "cosnet/blocks.hpp"
#include "cosnet/gradcheck.hpp"
#include "cosnet/model.hpp"
#include "cosnet/ops.hpp"

namespace cosnet {

namespace {

constexpr double kTol = 1e-5;
constexpr double kFullModelTol = 1e-4;

Tensor random_tensor(const Shape4& shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(size_t(shape.numel()));
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(shape, std::move(v));
}

// Random input whose pooling windows (non-overlapping kernel==stride) have
// pairwise value gaps > 1e-3, so finite differencing never crosses an argmax
// switch.
Tensor pool_safe_tensor(const Shape4& shape, int kernel, std::mt19937_64& rng) {
  Tensor t = random_tensor(shape, rng);
  std::span<double> v = t.values_mut();
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int64_t plane = int64_t(shape.h) * shape.w;
  for (int64_t p = 0; p < int64_t(shape.n) * shape.c; ++p) {
    for (int y0 = 0; y0 + kernel <= shape.h; y0 += kernel) {
      for (int x0 = 0; x0 + kernel <= shape.w; x0 += kernel) {
        bool ok = false;
        while (!ok) {
          ok = true;
          for (int a = 0; a < kernel * kernel && ok; ++a) {
            for (int b = a + 1; b < kernel * kernel && ok; ++b) {
              const int64_t ia = p * plane + (y0 + a / kernel) * shape.w + x0 + a % kernel;
              const int64_t ib = p * plane + (y0 + b / kernel) * shape.w + x0 + b % kernel;
              if (std::abs(v[size_t(ia)] - v[size_t(ib)]) < 1e-3) {
                v[size_t(ia)] = dist(rng);
                ok = false;
              }
            }
          }
        }
      }
    }
  }
  return t;
}

// Reduce a tensor output to a scalar through a fixed random projection, so
// the check exercises non-uniform output gradients.
ScalarFn project(std::function<Tensor(std::span<Tensor>)> fn, const Tensor& direction) {
  return [fn = std::move(fn), direction](std::span<Tensor> inputs) {
    return sum(mul(fn(inputs), direction));
  };
}

// Zero-initialized residual output layers block gradient flow into the
// branches behind them (both analytically and numerically), which would make
// those checks vacuous. Give such layers small random values first.
void randomize_zero_params(Model& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (auto& [name, t] : model.store) {
    bool all_zero = true;
    for (double v : t.values()) {
      if (v != 0.0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) {
      for (double& v : t.values_mut()) v = dist(rng);
    }
  }
}

}  // namespace

std::vector<SuiteEntry> run_gradient_suite(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SuiteEntry> entries;

  auto check = [&](const std::string& name, const ScalarFn& fn, std::vector<Tensor> inputs,
                   double tol = kTol) {
    entries.push_back({name, tol, grad_check(fn, std::move(inputs))});
  };

  // ---- primitives ----
  {
    Tensor x = random_tensor(Shape4(2, 3, 7, 6), rng);
    Tensor w = random_tensor(Shape4(4, 3, 3, 3), rng);
    Tensor b = random_tensor(Shape4::of({4}), rng);
    Tensor dir = random_tensor(Shape4(2, 4, 4, 3), rng);
    check("conv2d_dense_stride2",
          project([](std::span<Tensor> in) {
            return conv2d(in[0], in[1], in[2], ConvSpec::padded(1).with_stride(2));
          },
                  dir),
          {x, w, b});
  }
  {
    Tensor x = random_tensor(Shape4(1, 4, 7, 7), rng);
    Tensor w = random_tensor(Shape4(4, 2, 3, 3), rng);
    Tensor b = random_tensor(Shape4::of({4}), rng);
    Tensor dir = random_tensor(Shape4(1, 4, 7, 7), rng);
    check("conv2d_grouped_dilated",
          project([](std::span<Tensor> in) {
            return conv2d(in[0], in[1], in[2],
                          ConvSpec::padded(2).with_dilation(2).with_groups(2));
          },
                  dir),
          {x, w, b});
  }
  {
    Tensor x = random_tensor(Shape4(1, 3, 5, 5), rng);
    Tensor w = random_tensor(Shape4(3, 1, 3, 3), rng);
    Tensor dir = random_tensor(Shape4(1, 3, 5, 5), rng);
    check("conv2d_depthwise",
          project([](std::span<Tensor> in) {
            return conv2d(in[0], in[1], ConvSpec::padded(1).with_groups(3));
          },
                  dir),
          {x, w});
  }
  {
    Tensor x = pool_safe_tensor(Shape4(1, 3, 6, 6), 2, rng);
    Tensor dir = random_tensor(Shape4(1, 3, 3, 3), rng);
    check("max_pool2d",
          project([](std::span<Tensor> in) { return max_pool2d(in[0], 2, 2); }, dir), {x});
  }
  {
    Tensor x = random_tensor(Shape4(1, 2, 5, 7), rng);
    Tensor dir = random_tensor(Shape4(1, 2, 9, 11), rng);
    check("bilinear_upsample",
          project([](std::span<Tensor> in) { return bilinear_upsample(in[0], 9, 11); }, dir),
          {x});
  }
  {
    Tensor x = random_tensor(Shape4(1, 2, 7, 7), rng);
    Tensor dir = random_tensor(Shape4(1, 2, 3, 5), rng);
    check("bilinear_downsample",
          project([](std::span<Tensor> in) { return bilinear_upsample(in[0], 3, 5); }, dir), {x});
  }
  {
    Tensor x = random_tensor(Shape4(1, 3, 5, 5), rng);
    Tensor dir = random_tensor(Shape4(1, 3, 3, 3), rng);
    check("adaptive_avg_pool2d",
          project([](std::span<Tensor> in) { return adaptive_avg_pool2d(in[0], 3, 3); }, dir),
          {x});
  }
  {
    Tensor x = random_tensor(Shape4(2, 5, 2, 2), rng);
    Tensor dir = random_tensor(Shape4(2, 5, 2, 2), rng);
    check("softmax_channels",
          project([](std::span<Tensor> in) { return softmax(in[0], 1); }, dir), {x});
  }
  {
    Tensor x = random_tensor(Shape4(1, 4, 4, 4), rng);
    Tensor dir = random_tensor(Shape4(1, 1, 4, 4), rng);
    check("channel_mean", project([](std::span<Tensor> in) { return channel_mean(in[0]); }, dir),
          {x});
  }
  {
    Tensor x = random_tensor(Shape4(1, 4, 4, 4), rng);
    Tensor dir = random_tensor(Shape4(1, 4, 1, 1), rng);
    check("spatial_mean", project([](std::span<Tensor> in) { return spatial_mean(in[0]); }, dir),
          {x});
  }
  {
    Tensor a = random_tensor(Shape4(1, 2, 3, 3), rng);
    Tensor b = random_tensor(Shape4(1, 3, 3, 3), rng);
    Tensor dir = random_tensor(Shape4(1, 5, 3, 3), rng);
    check("concat_channels",
          project([](std::span<Tensor> in) {
            std::vector<Tensor> parts{in[0], in[1]};
            return concat(parts, 1);
          },
                  dir),
          {a, b});
  }
  {
    Tensor a = random_tensor(Shape4(1, 3, 4, 4), rng);
    Tensor b = random_tensor(Shape4(1, 1, 4, 4), rng);
    Tensor c = random_tensor(Shape4(1, 3, 1, 1), rng);
    Tensor dir = random_tensor(Shape4(1, 3, 4, 4), rng);
    // Covers both broadcast patterns with the reduced operand on either side
    // of add, sub and mul.
    check("broadcast_arithmetic",
          project([](std::span<Tensor> in) {
            return mul(sub(in[0], in[1]), in[2]) + mul(in[2], sub(in[1], in[0])) +
                   add(in[1], in[0]);
          },
                  dir),
          {a, b, c});
  }
  {
    Tensor x = random_tensor(Shape4(1, 2, 4, 4), rng, -2.0, 2.0);
    check("gelu", [](std::span<Tensor> in) { return sum(gelu(in[0])); }, {x});
  }
  {
    Tensor x = random_tensor(Shape4(2, 4, 3, 3), rng);
    Tensor gamma = random_tensor(Shape4::of({4}), rng, 0.5, 1.5);
    Tensor beta = random_tensor(Shape4::of({4}), rng);
    Tensor dir = random_tensor(Shape4(2, 4, 3, 3), rng);
    check("group_norm",
          project([](std::span<Tensor> in) { return group_norm(in[0], 2, in[1], in[2]); }, dir),
          {x, gamma, beta});
  }
  {
    Tensor logits = random_tensor(Shape4(2, 4, 3, 3), rng);
    LabelMap labels(2, 3, 3);
    std::uniform_int_distribution<int> cls(0, 3);
    for (auto& l : labels.v) l = int32_t(cls(rng));
    labels.v[0] = -1;  // one ignored pixel
    check("cross_entropy",
          [labels](std::span<Tensor> in) { return cross_entropy(in[0], labels, -1); }, {logits});
  }

  // ---- blocks ----
  {
    Tensor x = random_tensor(Shape4(1, 4, 6, 6), rng);
    SmParams p{{random_tensor(Shape4(4, 1, 3, 3), rng), random_tensor(Shape4::of({4}), rng)}};
    Tensor dir = random_tensor(Shape4(1, 4, 6, 6), rng);
    check("sharpening_module",
          project([](std::span<Tensor> in) {
            SmParams q{{in[1], in[2]}};
            return sharpening_module(in[0], q);
          },
                  dir),
          {x, p.dw.w, p.dw.b});
  }
  {
    const int c = 4;
    Tensor x = random_tensor(Shape4(1, c, 5, 5), rng);
    std::vector<Tensor> in{x,
                           random_tensor(Shape4(c, c, 1, 1), rng),
                           random_tensor(Shape4::of({c}), rng),
                           random_tensor(Shape4(c, c / 2, 3, 3), rng),
                           random_tensor(Shape4::of({c}), rng),
                           random_tensor(Shape4(c, c / 2, 3, 3), rng),
                           random_tensor(Shape4::of({c}), rng),
                           random_tensor(Shape4(c, 1, 3, 3), rng),
                           random_tensor(Shape4::of({c}), rng),
                           random_tensor(Shape4(c, 3 * c, 1, 1), rng),
                           random_tensor(Shape4::of({c}), rng)};
    Tensor dir = random_tensor(Shape4(1, c, 5, 5), rng);
    check("mcfs",
          project([](std::span<Tensor> in) {
            McfsParams p;
            p.proj = {in[1], in[2]};
            p.branch1 = {in[3], in[4]};
            p.branch2 = {in[5], in[6]};
            p.sm = SmParams{{in[7], in[8]}};
            p.fuse = {in[9], in[10]};
            p.dilation1 = 1;
            p.dilation2 = 2;
            p.groups = 2;
            return mcfs(in[0], p);
          },
                  dir),
          in);
  }
  {
    const int c = 4, e = 2;
    Tensor x = random_tensor(Shape4(1, c, 5, 5), rng);
    std::vector<Tensor> in{x,
                           random_tensor(Shape4(e * c, c, 1, 1), rng),
                           random_tensor(Shape4::of({e * c}), rng),
                           random_tensor(Shape4(e * c, 1, 3, 3), rng),
                           random_tensor(Shape4::of({e * c}), rng),
                           random_tensor(Shape4(c, e * c, 1, 1), rng),
                           random_tensor(Shape4::of({c}), rng)};
    Tensor dir = random_tensor(Shape4(1, c, 5, 5), rng);
    check("conv_mlp",
          project([](std::span<Tensor> in) {
            ConvMlpParams p{{in[1], in[2]}, {in[3], in[4]}, {in[5], in[6]}};
            return conv_mlp(in[0], p);
          },
                  dir),
          in);
  }
  {
    // Full FSB at width 4 via a seeded model block; gradients w.r.t. the
    // input and every block parameter.
    ModelConfig cfg;
    cfg.stage_channels = {4, 4, 4, 4};
    cfg.stage_depths = {1, 1, 1, 1};
    cfg.mcfs_groups = 2;
    cfg.num_classes = 2;
    cfg.decoder_width = 4;
    Model model = build_model(cfg, seed ^ 0x5eed);
    randomize_zero_params(model, rng);
    const FsbParams& p = model.params.stages[0].blocks[0];
    std::vector<Tensor> in{random_tensor(Shape4(1, 4, 5, 5), rng)};
    for (const char* name :
         {"stage1.block0.norm1.gamma", "stage1.block0.norm1.beta", "stage1.block0.dw.weight",
          "stage1.block0.dw.bias", "stage1.block0.norm2.gamma", "stage1.block0.norm2.beta",
          "stage1.block0.mcfs.proj.weight", "stage1.block0.mcfs.fuse.weight",
          "stage1.block0.mlp.proj.weight", "stage1.block0.norm3.gamma"}) {
      in.push_back(model.store.get(name));
    }
    Tensor dir = random_tensor(Shape4(1, 4, 5, 5), rng);
    check("fsb", project([&p](std::span<Tensor> in) { return fsb(in[0], p); }, dir), in);
  }
  {
    Tensor f = pool_safe_tensor(Shape4(1, 3, 6, 6), 2, rng);
    BemParams p;
    p.fuse = {random_tensor(Shape4(3, 6, 3, 3), rng), random_tensor(Shape4::of({3}), rng)};
    Tensor dir = random_tensor(Shape4(1, 3, 6, 6), rng);
    check("bem",
          project([](std::span<Tensor> in) {
            BemParams q;
            q.fuse = {in[1], in[2]};
            return bem(in[0], q);
          },
                  dir),
          {f, p.fuse.w, p.fuse.b});
  }
  {
    ModelConfig cfg;
    cfg.stage_channels = {4, 4, 4, 4};
    cfg.num_classes = 2;
    cfg.mcfs_groups = 2;
    cfg.decoder_width = 4;
    Model model = build_model(cfg, seed ^ 0xcafe);
    const StemParams& p = model.params.stem;
    std::vector<Tensor> in{random_tensor(Shape4(1, 3, 32, 32), rng),
                           p.conv1.w,
                           p.conv1.b,
                           p.norm1.gamma,
                           p.norm1.beta,
                           p.conv2.w,
                           p.conv2.b,
                           p.norm2.gamma,
                           p.norm2.beta};
    Tensor dir = random_tensor(Shape4(1, 4, 8, 8), rng);
    check("stem", project([&p](std::span<Tensor> in) { return stem_forward(in[0], p); }, dir),
          in);
  }
  {
    // Decoder head: gradients w.r.t. the pyramid features and a sampled
    // subset of the decoder parameters.
    ModelConfig cfg;
    cfg.stage_channels = {4, 4, 8, 8};
    cfg.mcfs_groups = 2;
    cfg.num_classes = 3;
    cfg.decoder_width = 4;
    Model model = build_model(cfg, seed ^ 0xdec0de);
    FeaturePyramid base;
    base.f1 = random_tensor(Shape4(1, 4, 8, 8), rng);
    base.f2 = random_tensor(Shape4(1, 4, 4, 4), rng);
    base.f3 = random_tensor(Shape4(1, 8, 2, 2), rng);
    base.f4 = random_tensor(Shape4(1, 8, 1, 1), rng);
    base.f5 = random_tensor(Shape4(1, 8, 2, 2), rng);
    std::vector<Tensor> in{base.f1, base.f2, base.f3, base.f4, base.f5};
    for (const auto& [name, t] : model.store) {
      if (name.rfind("decoder.", 0) == 0) in.push_back(t);
    }
    Tensor dir = random_tensor(Shape4(1, 3, 32, 32), rng);
    ScalarFn fn = project(
        [&model](std::span<Tensor> in) {
          FeaturePyramid pyr;
          pyr.f1 = in[0];
          pyr.f2 = in[1];
          pyr.f3 = in[2];
          pyr.f4 = in[3];
          pyr.f5 = in[4];
          return decoder_forward(model, pyr);
        },
        dir);
    entries.push_back(
        {"decoder_head", kTol, grad_check_sampled(fn, std::move(in), 1e-6, 60, seed ^ 1)});
  }
  {
    // End-to-end: cross-entropy of the full network, sampled elements of
    // every parameter plus the input image.
    ModelConfig cfg;
    cfg.stage_channels = {4, 4, 8, 8};
    cfg.mcfs_groups = 2;
    cfg.num_classes = 3;
    cfg.decoder_width = 4;
    Model model = build_model(cfg, seed ^ 0xf00d);
    randomize_zero_params(model, rng);
    // 64 px keeps every stage map at least 2x2, so no group-norm statistic
    // collapses and every sampled parameter really participates.
    Tensor image = random_tensor(Shape4(1, 3, 64, 64), rng, 0.0, 1.0);
    LabelMap labels(1, 64, 64);
    std::uniform_int_distribution<int> cls(0, 2);
    for (auto& l : labels.v) l = int32_t(cls(rng));
    std::vector<Tensor> in{image};
    for (const auto& [name, t] : model.store) in.push_back(t);
    ScalarFn fn = [&model, labels](std::span<Tensor> in) {
      return cross_entropy(model_forward(model, in[0]), labels, -1);
    };
    entries.push_back({"full_model_sampled", kFullModelTol,
                       grad_check_sampled(fn, std::move(in), 1e-6, 6, seed ^ 2)});
  }

  return entries;
}

SuiteEntry run_model_gradcheck(const ModelConfig& config, uint64_t seed, int max_tensors) {
  std::mt19937_64 rng(seed);
  Model model = build_model(config, seed);
  randomize_zero_params(model, rng);

  Tensor image = random_tensor(Shape4(1, config.input_channels, 64, 64), rng, 0.0, 1.0);
  LabelMap labels(1, 64, 64);
  std::uniform_int_distribution<int> cls(0, config.num_classes - 1);
  for (auto& l : labels.v) l = int32_t(cls(rng));

  // The image plus a random subset of parameter tensors, one element each.
  std::vector<Tensor> all_params;
  for (const auto& [name, t] : model.store) all_params.push_back(t);
  std::shuffle(all_params.begin(), all_params.end(), rng);
  if (int(all_params.size()) > max_tensors) all_params.resize(size_t(max_tensors));
  std::vector<Tensor> inputs{image};
  inputs.insert(inputs.end(), all_params.begin(), all_params.end());

  ScalarFn fn = [&model, labels](std::span<Tensor> in) {
    return cross_entropy(model_forward(model, in[0]), labels, -1);
  };
  return {"config_model_sampled", kFullModelTol,
          grad_check_sampled(fn, std::move(inputs), 1e-6, 1, seed ^ 3)};
}

}  // namespace cosnet
