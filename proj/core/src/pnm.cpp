#include "cosnet/pnm.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "cosnet/error.hpp"

namespace cosnet {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) {
        in.unget();
        break;
      }
      continue;
    }
    tok.push_back(char(c));
  }
  return tok;
}

int parse_positive(const std::string& tok, const char* what) {
  if (tok.empty()) throw DecodeError(std::string("malformed header: missing ") + what);
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw DecodeError(std::string("malformed header: bad ") + what + " '" + tok + "'");
    }
  }
  long v = std::strtol(tok.c_str(), nullptr, 10);
  if (v < 1 || v > 1 << 20) {
    throw DecodeError(std::string("malformed header: ") + what + " out of range");
  }
  return int(v);
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  const std::string magic = next_token(in);
  int channels;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw DecodeError("malformed header: expected P5 or P6, got '" + magic + "'");
  }
  const int width = parse_positive(next_token(in), "width");
  const int height = parse_positive(next_token(in), "height");
  const std::string maxval = next_token(in);
  if (maxval != "255") {
    throw DecodeError("unsupported maxval '" + maxval + "' (only 255 is supported)");
  }
  // Exactly one whitespace byte separates the header from the payload.
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw DecodeError("malformed header: missing separator after maxval");
  }

  ImageBuffer image(width, height, channels);
  in.read(reinterpret_cast<char*>(image.pixels.data()), std::streamsize(image.pixels.size()));
  const auto got = in.gcount();
  if (got != std::streamsize(image.pixels.size())) {
    throw DecodeError("truncated payload: missing " +
                      std::to_string(int64_t(image.pixels.size()) - got) + " bytes");
  }
  return image;
}

void save_image(const ImageBuffer& image, const std::string& path) {
  if (image.width < 1 || image.height < 1 || (image.channels != 1 && image.channels != 3) ||
      int64_t(image.pixels.size()) != image.sample_count()) {
    throw ValueError("save_image: inconsistent ImageBuffer");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (image.channels == 3 ? "P6" : "P5") << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            std::streamsize(image.pixels.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

Palette default_palette(int num_classes) {
  if (num_classes < 1 || num_classes > 256) {
    throw ValueError("default_palette: class count must be in [1,256]");
  }
  // First entries are hand-picked for legibility; the rest walk a coarse RGB
  // lattice, which keeps all colors distinct.
  static const Palette base = {
      {{0, 0, 0}},       {{220, 40, 40}},  {{40, 180, 60}},  {{50, 90, 220}},
      {{230, 210, 50}},  {{170, 60, 200}}, {{60, 200, 200}}, {{240, 130, 30}},
      {{130, 130, 130}}, {{250, 250, 250}}};
  Palette p;
  for (int i = 0; i < num_classes; ++i) {
    if (i < int(base.size())) {
      p.push_back(base[size_t(i)]);
    } else {
      const int j = i - int(base.size());
      p.push_back({uint8_t(17 + (j * 37) % 239), uint8_t(29 + (j * 97) % 227),
                   uint8_t(11 + (j * 53) % 241)});
    }
  }
  // The lattice step sizes above are coprime with the ranges, but verify
  // distinctness anyway; a palette with duplicates is unusable.
  for (size_t a = 0; a < p.size(); ++a) {
    for (size_t b = a + 1; b < p.size(); ++b) {
      if (p[a] == p[b]) throw ValueError("default_palette: duplicate color generated");
    }
  }
  return p;
}

void save_mask(const LabelMap& labels, const Palette& palette, const std::string& path) {
  if (labels.n != 1) throw ValueError("save_mask: expected a single map (n == 1)");
  for (size_t a = 0; a < palette.size(); ++a) {
    for (size_t b = a + 1; b < palette.size(); ++b) {
      if (palette[a] == palette[b]) {
        throw ValueError("save_mask: palette colors must be distinct");
      }
    }
  }
  ImageBuffer image(labels.w, labels.h, 3);
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      const int32_t label = labels.at(0, y, x);
      if (label < 0 || size_t(label) >= palette.size()) {
        throw ValueError("save_mask: label " + std::to_string(label) + " outside palette of " +
                         std::to_string(palette.size()) + " colors");
      }
      const auto& color = palette[size_t(label)];
      image.at(x, y, 0) = color[0];
      image.at(x, y, 1) = color[1];
      image.at(x, y, 2) = color[2];
    }
  }
  save_image(image, path);
}

Tensor image_to_tensor(const ImageBuffer& image) {
  std::vector<double> v(size_t(image.sample_count()));
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        v[size_t((int64_t(c) * image.height + y) * image.width + x)] = image.at(x, y, c) / 255.0;
      }
    }
  }
  return Tensor::from_values(Shape4{1, image.channels, image.height, image.width}, std::move(v));
}

LabelMap load_mask(const std::string& path, const Palette& palette) {
  const ImageBuffer image = load_image(path);
  if (image.channels != 3) throw DecodeError("mask file must be a P6 color image");
  std::map<std::array<uint8_t, 3>, int32_t> lookup;
  for (size_t i = 0; i < palette.size(); ++i) lookup[palette[i]] = int32_t(i);

  LabelMap labels(1, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::array<uint8_t, 3> color = {image.at(x, y, 0), image.at(x, y, 1),
                                            image.at(x, y, 2)};
      auto it = lookup.find(color);
      if (it == lookup.end()) {
        throw DecodeError("unknown color (" + std::to_string(color[0]) + "," +
                          std::to_string(color[1]) + "," + std::to_string(color[2]) +
                          ") at pixel (" + std::to_string(x) + "," + std::to_string(y) + ")");
      }
      labels.at(0, y, x) = it->second;
    }
  }
  return labels;
}

}  // namespace cosnet
