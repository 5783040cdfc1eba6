#include "cosnet/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cosnet/error.hpp"

namespace cosnet {

namespace {

// Strongly separated base colors for the shape classes; class 0 is the
// textured gray background.
std::array<double, 3> class_color(int cls) {
  static const std::array<std::array<double, 3>, 8> table = {{{0.85, 0.20, 0.20},
                                                              {0.20, 0.75, 0.25},
                                                              {0.20, 0.35, 0.85},
                                                              {0.90, 0.80, 0.20},
                                                              {0.70, 0.25, 0.80},
                                                              {0.20, 0.80, 0.80},
                                                              {0.95, 0.55, 0.15},
                                                              {0.55, 0.35, 0.15}}};
  if (cls - 1 < int(table.size())) return table[size_t(cls - 1)];
  // Beyond the table: spread hues with the golden angle.
  const double t = 0.61803398875 * (cls - 1);
  const double h = 6.0 * (t - std::floor(t));
  const double f = h - std::floor(h);
  switch (int(h) % 6) {
    case 0: return {0.9, 0.2 + 0.6 * f, 0.2};
    case 1: return {0.9 - 0.6 * f, 0.9, 0.2};
    case 2: return {0.2, 0.9, 0.2 + 0.6 * f};
    case 3: return {0.2, 0.9 - 0.6 * f, 0.9};
    case 4: return {0.2 + 0.6 * f, 0.2, 0.9};
    default: return {0.9, 0.2, 0.9 - 0.6 * f};
  }
}

int snap4(int v) { return (v / 4) * 4; }

}  // namespace

bool shape_covers(const ToyShape& s, int x, int y) {
  if (s.kind == 1) {
    const int dx = x - s.cx, dy = y - s.cy;
    return dx * dx + dy * dy <= s.radius * s.radius;
  }
  return x >= s.x0 && x < s.x1 && y >= s.y0 && y < s.y1;
}

ToyDataset generate_toy_dataset(const ToySpec& spec) {
  if (spec.height % 32 != 0 || spec.width % 32 != 0 || spec.height < 32 || spec.width < 32) {
    throw ValueError("toy dataset: canvas extents must be positive multiples of 32");
  }
  if (spec.num_classes < 2) throw ValueError("toy dataset: need at least two classes");
  if (spec.num_images < 1) throw ValueError("toy dataset: need at least one image");

  std::mt19937_64 rng(spec.seed);
  auto uniform_int = [&](int lo, int hi) {  // inclusive
    return int(std::uniform_int_distribution<int>(lo, hi)(rng));
  };
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const int w = spec.width, h = spec.height;
  // Shapes stay off a 4-pixel border, so the background class always exists.
  const int margin = 4;

  auto make_shape = [&](int cls) {
    ToyShape s;
    s.cls = cls;
    s.kind = (cls - 1) % 4;
    const auto base = class_color(cls);
    for (int c = 0; c < 3; ++c) {
      s.color[size_t(c)] = std::clamp(base[size_t(c)] + uniform(-0.06, 0.06), 0.05, 0.95);
    }
    switch (s.kind) {
      case 0: {  // rectangle
        const int sw = snap4(uniform_int(16, std::min(32, w / 2)));
        const int sh = snap4(uniform_int(16, std::min(32, h / 2)));
        s.x0 = snap4(uniform_int(margin, w - margin - sw));
        s.y0 = snap4(uniform_int(margin, h - margin - sh));
        s.x1 = s.x0 + sw;
        s.y1 = s.y0 + sh;
        break;
      }
      case 1: {  // disk
        s.radius = uniform_int(12, 16);
        s.cx = snap4(uniform_int(margin + s.radius, w - margin - s.radius));
        s.cy = snap4(uniform_int(margin + s.radius, h - margin - s.radius));
        break;
      }
      case 2: {  // horizontal bar
        const int sw = snap4(uniform_int(24, std::min(48, w - 2 * margin)));
        const int sh = snap4(uniform_int(8, 12));
        s.x0 = snap4(uniform_int(margin, w - margin - sw));
        s.y0 = snap4(uniform_int(margin, h - margin - sh));
        s.x1 = s.x0 + sw;
        s.y1 = s.y0 + sh;
        break;
      }
      default: {  // vertical bar
        const int sw = snap4(uniform_int(8, 12));
        const int sh = snap4(uniform_int(24, std::min(48, h - 2 * margin)));
        s.x0 = snap4(uniform_int(margin, w - margin - sw));
        s.y0 = snap4(uniform_int(margin, h - margin - sh));
        s.x1 = s.x0 + sw;
        s.y1 = s.y0 + sh;
        break;
      }
    }
    return s;
  };

  ToyDataset data;
  data.spec = spec;
  for (int i = 0; i < spec.num_images; ++i) {
    ToySample sample;
    // Forced shapes guarantee every class appears somewhere in the set.
    for (int cls = 1; cls < spec.num_classes; ++cls) {
      if ((cls - 1) % spec.num_images == i) sample.shapes.push_back(make_shape(cls));
    }
    for (int extra = 0; extra < 2; ++extra) {
      sample.shapes.push_back(make_shape(uniform_int(1, spec.num_classes - 1)));
    }

    sample.labels = LabelMap(1, h, w, 0);
    std::vector<double> img(size_t(3) * h * w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double texture =
            0.48 + 0.05 * std::sin(2.0 * M_PI * x / 16.0) * std::cos(2.0 * M_PI * y / 16.0);
        for (int c = 0; c < 3; ++c) img[size_t((int64_t(c) * h + y) * w + x)] = texture;
      }
    }
    for (const ToyShape& s : sample.shapes) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!shape_covers(s, x, y)) continue;
          sample.labels.at(0, y, x) = int32_t(s.cls);
          for (int c = 0; c < 3; ++c) {
            img[size_t((int64_t(c) * h + y) * w + x)] = s.color[size_t(c)];
          }
        }
      }
    }
    // Mild pixel noise over everything, clamped to the valid range.
    for (double& v : img) v = std::clamp(v + uniform(-0.02, 0.02), 0.0, 1.0);

    sample.image = Tensor::from_values(Shape4::of({3, h, w}), std::move(img));
    data.samples.push_back(std::move(sample));
  }
  return data;
}

}  // namespace cosnet
