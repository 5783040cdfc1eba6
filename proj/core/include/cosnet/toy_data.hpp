#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cosnet/tensor.hpp"

namespace cosnet {

// Synthetic segmentation data: colored rectangles, disks and bars on a
// textured background, one shape kind per class, pixel-exact labels. Shapes
// may overlap (later shapes draw over earlier ones). Geometry is snapped to
// a 4-pixel grid so mask boundaries are representable at the decoder's
// working resolution.
struct ToySpec {
  uint64_t seed = 0;
  int num_images = 8;
  int height = 64, width = 64;  // must be divisible by 32
  int num_classes = 5;          // background plus num_classes-1 shape classes
};

struct ToyShape {
  int cls = 0;           // label this shape rasterizes to
  int kind = 0;          // 0 rect, 1 disk, 2 horizontal bar, 3 vertical bar
  int x0 = 0, y0 = 0;    // bounding box, half-open
  int x1 = 0, y1 = 0;
  int cx = 0, cy = 0, radius = 0;  // disk parameters (kind 1)
  std::array<double, 3> color{};
};

struct ToySample {
  Tensor image;   // [3,H,W], values in [0,1]
  LabelMap labels;
  std::vector<ToyShape> shapes;  // geometry kept for independent re-rasterization
};

struct ToyDataset {
  ToySpec spec;
  std::vector<ToySample> samples;
};

ToyDataset generate_toy_dataset(const ToySpec& spec);

// Label coverage test of a single shape, shared by the rasterizer and by
// independent re-rasterization in tests.
bool shape_covers(const ToyShape& shape, int x, int y);

}  // namespace cosnet
