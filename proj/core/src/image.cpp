#include "cosnet/image.hpp"

#include <cmath>

#include "cosnet/error.hpp"

namespace cosnet {

ImageBuffer::ImageBuffer(int w, int h, int c) : width(w), height(h), channels(c) {
  if (w < 1 || h < 1 || (c != 1 && c != 3)) {
    throw ValueError("ImageBuffer: extents must be positive and channels 1 or 3");
  }
  pixels.assign(size_t(sample_count()), 0);
}

RealImage::RealImage(int w, int h, int c, double fill) : width(w), height(h), channels(c) {
  if (w < 1 || h < 1 || (c != 1 && c != 3)) {
    throw ValueError("RealImage: extents must be positive and channels 1 or 3");
  }
  v.assign(size_t(sample_count()), fill);
}

RealImage to_real(const ImageBuffer& image) {
  RealImage out(image.width, image.height, image.channels);
  for (size_t i = 0; i < image.pixels.size(); ++i) out.v[i] = image.pixels[i] / 255.0;
  return out;
}

ImageBuffer to_bytes(const RealImage& image) {
  ImageBuffer out(image.width, image.height, image.channels);
  for (size_t i = 0; i < image.v.size(); ++i) {
    double x = image.v[i];
    if (!std::isfinite(x)) throw NumericError("to_bytes: non-finite sample");
    x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
    out.pixels[i] = uint8_t(std::floor(x * 255.0 + 0.5));
  }
  return out;
}

}  // namespace cosnet
