#pragma once

#include "cosnet/image.hpp"

namespace cosnet {

// Classical unsharp masking / high-boost filtering in the real image domain.
// The algebra is kept exact: nothing is clamped until 8-bit export.

// Separable box mean over a (2r+1)^2 window with clamp-to-edge handling.
// Radius 0 is the identity.
RealImage box_blur(const RealImage& image, int radius);

struct UnsharpResult {
  RealImage mask;       // f - blur(f)
  RealImage sharpened;  // f + k * mask; high-boost when k > 1
};

// mask = f - f_blur; sharpened = f + k * mask. k must be >= 0.
UnsharpResult unsharp_mask(const RealImage& f, const RealImage& f_blur, double k);

// Mean absolute first difference (horizontal and vertical pooled), a scalar
// proxy for how much high-frequency content an image carries.
double edge_strength(const RealImage& image);

struct EdgeStrengthReport {
  double original = 0.0;
  double sharpened = 0.0;
};

EdgeStrengthReport edge_strength_report(const RealImage& f, const RealImage& g);

}  // namespace cosnet
