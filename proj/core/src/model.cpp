#include "cosnet/model.hpp"

#include <cmath>
#include <random>

#include "cosnet/error.hpp"
#include "cosnet/ops.hpp"

namespace cosnet {

void ModelConfig::validate() const {
  for (int c : stage_channels) {
    if (c < 1) throw ValueError("config: stage channels must be positive");
  }
  for (int d : stage_depths) {
    if (d < 1) throw ValueError("config: stage depths must be positive");
  }
  if (num_classes < 2) throw ValueError("config: need at least two classes");
  if (decoder_width < 1) throw ValueError("config: decoder width must be positive");
  if (input_channels < 1) throw ValueError("config: input channels must be positive");
  if (mlp_ratio < 1) throw ValueError("config: mlp ratio must be positive");
  if (sm_kernel < 1 || sm_kernel % 2 == 0) throw ValueError("config: sm kernel must be odd");
  if (bem_pool < 1 || bem_stride < 1) throw ValueError("config: invalid BEM pooling");
  if (use_sm && !use_mcfs) {
    throw ValueError("config: SM lives inside MCFS; enabling use_sm requires use_mcfs");
  }
  if (use_mcfs) {
    if (mcfs_dilations.first == mcfs_dilations.second) {
      throw ValueError("config: MCFS dilations must be distinct");
    }
    if (mcfs_dilations.first < 1 || mcfs_dilations.second < 1) {
      throw ValueError("config: MCFS dilations must be positive");
    }
    if (mcfs_groups < 1) throw ValueError("config: MCFS groups must be positive");
    for (int c : stage_channels) {
      if (c % mcfs_groups != 0) {
        throw ValueError("config: MCFS groups " + std::to_string(mcfs_groups) +
                         " must divide every stage width (got " + std::to_string(c) + ")");
      }
    }
  }
}

ModelConfig ModelConfig::ablation_variant(int row) const {
  ModelConfig v = *this;
  switch (row) {
    case 1: v.use_mcfs = false; v.use_sm = false; v.use_bem = false; break;
    case 2: v.use_mcfs = true;  v.use_sm = false; v.use_bem = false; break;
    case 3: v.use_mcfs = true;  v.use_sm = true;  v.use_bem = false; break;
    case 4: v.use_mcfs = true;  v.use_sm = true;  v.use_bem = true;  break;
    default: throw ValueError("ablation variant must be 1..4");
  }
  return v;
}

// ---- construction ----

namespace {

class Initializer {
 public:
  Initializer(ParamStore& store, uint64_t seed) : store_(store), rng_(seed) {}

  // Fan-in-scaled uniform weights, zero bias. zero=true gives an all-zero
  // layer (residual branch outputs).
  ConvParams conv(const std::string& path, int cout, int cin_g, int kh, int kw,
                  bool zero = false) {
    const int64_t n = int64_t(cout) * cin_g * kh * kw;
    std::vector<double> w(size_t(n), 0.0);
    if (!zero) {
      const double bound = 1.0 / std::sqrt(double(cin_g) * kh * kw);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : w) v = dist(rng_);
    }
    ConvParams p;
    p.w = store_.add(path + ".weight",
                     Tensor::from_values(Shape4(cout, cin_g, kh, kw), std::move(w)));
    p.b = store_.add(path + ".bias", Tensor::zeros(Shape4::of({cout})));
    return p;
  }

  NormParams norm(const std::string& path, int c) {
    NormParams p;
    p.gamma = store_.add(path + ".gamma", Tensor::full(Shape4::of({c}), 1.0));
    p.beta = store_.add(path + ".beta", Tensor::zeros(Shape4::of({c})));
    return p;
  }

 private:
  ParamStore& store_;
  std::mt19937_64 rng_;
};

FsbParams build_fsb(Initializer& init, const std::string& path, int c, const ModelConfig& cfg) {
  FsbParams p;
  p.residual = cfg.use_residual;
  p.norm1 = init.norm(path + ".norm1", c);
  p.dw = init.conv(path + ".dw", c, 1, 3, 3, /*zero=*/true);
  p.norm2 = init.norm(path + ".norm2", c);
  if (cfg.use_mcfs) {
    McfsParams m;
    m.dilation1 = cfg.mcfs_dilations.first;
    m.dilation2 = cfg.mcfs_dilations.second;
    m.groups = cfg.mcfs_groups;
    m.proj = init.conv(path + ".mcfs.proj", c, c, 1, 1);
    m.branch1 = init.conv(path + ".mcfs.branch1", c, c / m.groups, 3, 3);
    m.branch2 = init.conv(path + ".mcfs.branch2", c, c / m.groups, 3, 3);
    int merged = 2 * c;
    if (cfg.use_sm) {
      SmParams sm;
      sm.dw = init.conv(path + ".mcfs.sm.dw", c, 1, cfg.sm_kernel, cfg.sm_kernel);
      m.sm = sm;
      merged = 3 * c;
    }
    m.fuse = init.conv(path + ".mcfs.fuse", c, merged, 1, 1, /*zero=*/true);
    p.mcfs = std::move(m);
  } else {
    p.mid_plain = init.conv(path + ".mid", c, c, 3, 3, /*zero=*/true);
  }
  p.norm3 = init.norm(path + ".norm3", c);
  const int hidden = cfg.mlp_ratio * c;
  p.mlp.expand = init.conv(path + ".mlp.expand", hidden, c, 1, 1);
  p.mlp.dw = init.conv(path + ".mlp.dw", hidden, 1, 3, 3);
  p.mlp.proj = init.conv(path + ".mlp.proj", c, hidden, 1, 1, /*zero=*/true);
  return p;
}

}  // namespace

Model build_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  Model model;
  model.config = config;
  Initializer init(model.store, seed);

  const auto& ch = config.stage_channels;

  model.params.stem.conv1 = init.conv("stem.conv1", ch[0], config.input_channels, 3, 3);
  model.params.stem.norm1 = init.norm("stem.norm1", ch[0]);
  model.params.stem.conv2 = init.conv("stem.conv2", ch[0], ch[0], 3, 3);
  model.params.stem.norm2 = init.norm("stem.norm2", ch[0]);

  for (int s = 0; s < 4; ++s) {
    StageParams& stage = model.params.stages[size_t(s)];
    const std::string prefix = "stage" + std::to_string(s + 1);
    if (s > 0) {
      stage.transition = init.conv(prefix + ".transition", ch[size_t(s)], ch[size_t(s - 1)], 3, 3);
      stage.transition_norm = init.norm(prefix + ".transition_norm", ch[size_t(s)]);
    }
    for (int b = 0; b < config.stage_depths[size_t(s)]; ++b) {
      stage.blocks.push_back(
          build_fsb(init, prefix + ".block" + std::to_string(b), ch[size_t(s)], config));
    }
  }

  if (config.use_bem) {
    BemParams bem;
    bem.pool_kernel = config.bem_pool;
    bem.pool_stride = config.bem_stride;
    bem.fuse = init.conv("bem.fuse", ch[2], 2 * ch[2], 3, 3);
    model.params.bem = std::move(bem);
  }

  DecoderParams& dec = model.params.decoder;
  const int dw = config.decoder_width;
  for (int i = 0; i < 4; ++i) {
    dec.ppm_proj[size_t(i)] = init.conv("decoder.ppm" + std::to_string(i), dw, ch[3], 1, 1);
  }
  dec.ppm_fuse = init.conv("decoder.ppm_fuse", dw, ch[3] + 4 * dw, 3, 3);
  dec.ppm_norm = init.norm("decoder.ppm_norm", dw);
  dec.lat5 = init.conv("decoder.lat5", dw, ch[2], 1, 1);
  dec.lat2 = init.conv("decoder.lat2", dw, ch[1], 1, 1);
  dec.lat1 = init.conv("decoder.lat1", dw, ch[0], 1, 1);
  dec.smooth5 = init.conv("decoder.smooth5", dw, dw, 3, 3);
  dec.smooth5_norm = init.norm("decoder.smooth5_norm", dw);
  dec.smooth2 = init.conv("decoder.smooth2", dw, dw, 3, 3);
  dec.smooth2_norm = init.norm("decoder.smooth2_norm", dw);
  dec.smooth1 = init.conv("decoder.smooth1", dw, dw, 3, 3);
  dec.smooth1_norm = init.norm("decoder.smooth1_norm", dw);
  dec.classifier = init.conv("decoder.classifier", config.num_classes, 4 * dw + ch[2], 1, 1);

  return model;
}

// ---- forward passes ----

namespace {

Tensor conv_norm_act(const Tensor& x, const ConvParams& conv, const NormParams& np,
                     const ConvSpec& spec) {
  return gelu(norm(conv2d(x, conv.w, conv.b, spec), np));
}

// Decoder maps can shrink to 1x1, where per-channel group statistics would
// collapse to a single element and normalize everything to zero. Pool all
// channels into one group instead so the statistics stay meaningful.
Tensor conv_lnorm_act(const Tensor& x, const ConvParams& conv, const NormParams& np,
                      const ConvSpec& spec) {
  return gelu(group_norm(conv2d(x, conv.w, conv.b, spec), 1, np.gamma, np.beta));
}

}  // namespace

Tensor stem_forward(const Tensor& image, const StemParams& p) {
  const Shape4& s = image.shape();
  if (s.h % 32 != 0 || s.w % 32 != 0) {
    throw GeometryError("input extents must be divisible by 32, got " + s.str());
  }
  Tensor x = conv_norm_act(image, p.conv1, p.norm1, ConvSpec::padded(1).with_stride(2));
  return conv_norm_act(x, p.conv2, p.norm2, ConvSpec::padded(1).with_stride(2));
}

Tensor transition_forward(const Tensor& x, const StageParams& p) {
  if (!p.transition) return x;
  return conv_norm_act(x, *p.transition, *p.transition_norm, ConvSpec::padded(1).with_stride(2));
}

FeaturePyramid backbone_forward(const Model& model, const Tensor& image) {
  if (image.shape().c != model.config.input_channels) {
    throw ShapeError("backbone expects " + std::to_string(model.config.input_channels) +
                     " input channels, got " + image.shape().str());
  }
  FeaturePyramid pyr;
  Tensor x = stem_forward(image, model.params.stem);
  for (int s = 0; s < 4; ++s) {
    const StageParams& stage = model.params.stages[size_t(s)];
    x = transition_forward(x, stage);
    for (const FsbParams& block : stage.blocks) x = fsb(x, block);
    (s == 0 ? pyr.f1 : s == 1 ? pyr.f2 : s == 2 ? pyr.f3 : pyr.f4) = x;
  }
  return pyr;
}

void intermediate_forward(const Model& model, FeaturePyramid& pyramid) {
  if (!pyramid.f3.defined()) throw ValueError("intermediate_forward: missing stage-3 features");
  pyramid.f5 = model.params.bem ? bem(pyramid.f3, *model.params.bem) : pyramid.f3;
}

Tensor decoder_forward(const Model& model, const FeaturePyramid& pyr) {
  if (!pyr.f1.defined() || !pyr.f2.defined() || !pyr.f3.defined() || !pyr.f4.defined() ||
      !pyr.f5.defined()) {
    throw ValueError("decoder_forward: incomplete feature pyramid");
  }
  const DecoderParams& p = model.params.decoder;
  static constexpr int kPpmScales[4] = {1, 2, 3, 6};

  // Pyramid-pooling context on the deepest map.
  const Shape4& s4 = pyr.f4.shape();
  std::vector<Tensor> pool_branches{pyr.f4};
  for (int i = 0; i < 4; ++i) {
    Tensor pooled = adaptive_avg_pool2d(pyr.f4, kPpmScales[i], kPpmScales[i]);
    pooled = conv2d(pooled, p.ppm_proj[size_t(i)].w, p.ppm_proj[size_t(i)].b, ConvSpec{});
    pool_branches.push_back(bilinear_upsample(pooled, s4.h, s4.w));
  }
  Tensor p4 =
      conv_lnorm_act(concat(pool_branches, 1), p.ppm_fuse, p.ppm_norm, ConvSpec::padded(1));

  // Top-down fusion chain p4 -> f5 -> f2 -> f1, lateral 1x1 + upsample + add.
  auto lateral_add = [](const Tensor& feat, const ConvParams& lat, const Tensor& coarser) {
    Tensor l = conv2d(feat, lat.w, lat.b, ConvSpec{});
    return l + bilinear_upsample(coarser, feat.shape().h, feat.shape().w);
  };
  Tensor p5 = lateral_add(pyr.f5, p.lat5, p4);
  Tensor p2 = lateral_add(pyr.f2, p.lat2, p5);
  Tensor p1 = lateral_add(pyr.f1, p.lat1, p2);
  p5 = conv_lnorm_act(p5, p.smooth5, p.smooth5_norm, ConvSpec::padded(1));
  p2 = conv_lnorm_act(p2, p.smooth2, p.smooth2_norm, ConvSpec::padded(1));
  p1 = conv_lnorm_act(p1, p.smooth1, p.smooth1_norm, ConvSpec::padded(1));

  // Classify the concatenation of every resolution at stage-1 scale; the raw
  // stage-3 map rides along so both f3 and its enhanced form reach the head.
  const Shape4& s1 = pyr.f1.shape();
  std::vector<Tensor> merged{p1, bilinear_upsample(p2, s1.h, s1.w),
                             bilinear_upsample(p5, s1.h, s1.w),
                             bilinear_upsample(p4, s1.h, s1.w),
                             bilinear_upsample(pyr.f3, s1.h, s1.w)};
  Tensor logits = conv2d(concat(merged, 1), p.classifier.w, p.classifier.b, ConvSpec{});
  return bilinear_upsample(logits, s1.h * 4, s1.w * 4);
}

Tensor model_forward(const Model& model, const Tensor& image) {
  return model_forward_trace(model, image).logits;
}

ForwardTrace model_forward_trace(const Model& model, const Tensor& image) {
  ForwardTrace trace;
  trace.pyramid = backbone_forward(model, image);
  intermediate_forward(model, trace.pyramid);
  trace.logits = decoder_forward(model, trace.pyramid);
  return trace;
}

LabelMap logits_to_labels(const Tensor& logits) {
  const Shape4& s = logits.shape();
  LabelMap labels(s.n, s.h, s.w);
  const int64_t plane = int64_t(s.h) * s.w;
  std::span<const double> x = logits.values();
  for (int n = 0; n < s.n; ++n) {
    for (int64_t i = 0; i < plane; ++i) {
      const int64_t base = int64_t(n) * s.c * plane + i;
      int best = 0;
      double best_v = x[size_t(base)];
      for (int c = 1; c < s.c; ++c) {
        const double v = x[size_t(base + c * plane)];
        if (v > best_v) {  // strict: ties stay with the lowest class
          best_v = v;
          best = c;
        }
      }
      labels.v[size_t(int64_t(n) * plane + i)] = best;
    }
  }
  return labels;
}

LabelMap predict_mask(const Model& model, const Tensor& image) {
  return logits_to_labels(model_forward(model, image));
}

}  // namespace cosnet
