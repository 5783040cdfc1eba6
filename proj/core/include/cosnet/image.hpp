#pragma once

#include <cstdint>
#include <vector>

namespace cosnet {

// 8-bit raster, row-major, interleaved samples. channels is 1 (gray) or 3
// (RGB).
struct ImageBuffer {
  int width = 0, height = 0, channels = 1;
  std::vector<uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c);
  int64_t sample_count() const { return int64_t(width) * height * channels; }
  uint8_t& at(int x, int y, int c) { return pixels[size_t((int64_t(y) * width + x) * channels + c)]; }
  uint8_t at(int x, int y, int c) const {
    return pixels[size_t((int64_t(y) * width + x) * channels + c)];
  }
  bool operator==(const ImageBuffer&) const = default;
};

// Real-valued working form of an image. Samples are nominally in [0,1] but
// intermediate results (high-boost output, masks) may leave that range;
// clamping happens only on export back to 8-bit.
struct RealImage {
  int width = 0, height = 0, channels = 1;
  std::vector<double> v;

  RealImage() = default;
  RealImage(int w, int h, int c, double fill = 0.0);
  int64_t sample_count() const { return int64_t(width) * height * channels; }
  double& at(int x, int y, int c) { return v[size_t((int64_t(y) * width + x) * channels + c)]; }
  double at(int x, int y, int c) const {
    return v[size_t((int64_t(y) * width + x) * channels + c)];
  }
  bool same_shape(const RealImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// 8-bit -> [0,1] reals (divide by 255).
RealImage to_real(const ImageBuffer& image);
// Reals -> 8-bit: clamp to [0,1], then round half-up.
ImageBuffer to_bytes(const RealImage& image);

}  // namespace cosnet
