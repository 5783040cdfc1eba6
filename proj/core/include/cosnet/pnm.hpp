#pragma once

#include <array>
#include <string>
#include <vector>

#include "cosnet/image.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Binary portable pixmap / graymap codec (P6, P5; maxval 255). This is the
// mandatory image format of the toolkit; richer codecs are out of scope.
// Decoding is byte-faithful: no color management, no scaling.
ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& image, const std::string& path);

// Label <-> color mapping for colorized mask files. Colors must be pairwise
// distinct so the mapping is bijective.
using Palette = std::vector<std::array<uint8_t, 3>>;

// Deterministic palette with visually separated colors for up to 256 classes.
Palette default_palette(int num_classes);

// Writes labels (single map, n == 1) as a P6 image through the palette.
void save_mask(const LabelMap& labels, const Palette& palette, const std::string& path);
// Inverse of save_mask: every pixel color must be present in the palette.
LabelMap load_mask(const std::string& path, const Palette& palette);

// [1,C,H,W] tensor with samples scaled to [0,1], planar channel layout.
Tensor image_to_tensor(const ImageBuffer& image);

}  // namespace cosnet
