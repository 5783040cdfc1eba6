#include "cosnet/sharpen.hpp"

#include <algorithm>
#include <cmath>

#include "cosnet/error.hpp"

namespace cosnet {

namespace {

inline int clamp_index(int i, int hi) { return i < 0 ? 0 : (i >= hi ? hi - 1 : i); }

}  // namespace

RealImage box_blur(const RealImage& image, int radius) {
  if (radius < 0) throw ValueError("box_blur: radius must be >= 0");
  if (radius == 0) return image;

  const int w = image.width, h = image.height, ch = image.channels;
  const double inv = 1.0 / (2 * radius + 1);

  // Horizontal pass, clamped window.
  RealImage tmp(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += image.at(clamp_index(x + d, w), y, c);
        tmp.at(x, y, c) = acc * inv;
      }
    }
  }
  // Vertical pass.
  RealImage out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += tmp.at(x, clamp_index(y + d, h), c);
        out.at(x, y, c) = acc * inv;
      }
    }
  }
  return out;
}

UnsharpResult unsharp_mask(const RealImage& f, const RealImage& f_blur, double k) {
  if (!f.same_shape(f_blur)) throw ShapeError("unsharp_mask: image shapes differ");
  if (k < 0) throw ValueError("unsharp_mask: k must be >= 0");
  UnsharpResult r;
  r.mask = RealImage(f.width, f.height, f.channels);
  r.sharpened = RealImage(f.width, f.height, f.channels);
  for (size_t i = 0; i < f.v.size(); ++i) {
    r.mask.v[i] = f.v[i] - f_blur.v[i];
    r.sharpened.v[i] = f.v[i] + k * r.mask.v[i];
  }
  return r;
}

double edge_strength(const RealImage& image) {
  const int w = image.width, h = image.height, ch = image.channels;
  double acc = 0.0;
  int64_t count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      for (int c = 0; c < ch; ++c) acc += std::abs(image.at(x + 1, y, c) - image.at(x, y, c));
    }
  }
  count += int64_t(h) * std::max(0, w - 1) * ch;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) acc += std::abs(image.at(x, y + 1, c) - image.at(x, y, c));
    }
  }
  count += int64_t(std::max(0, h - 1)) * w * ch;
  return count > 0 ? acc / double(count) : 0.0;
}

EdgeStrengthReport edge_strength_report(const RealImage& f, const RealImage& g) {
  if (!f.same_shape(g)) throw ShapeError("edge_strength_report: image shapes differ");
  return EdgeStrengthReport{edge_strength(f), edge_strength(g)};
}

}  // namespace cosnet
