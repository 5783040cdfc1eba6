// File formats: PNM codec, mask palettes, checkpoints, feature dumps and
// the JSON run config.

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cosnet/checkpoint.hpp"
#include "cosnet/error.hpp"
#include "cosnet/model.hpp"
#include "cosnet/pnm.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace cosnet;
using testutil::bitwise_equal;
using testutil::max_abs_diff;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cosnet_io_" + name)).string();
}

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

void spill(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("P6 single pixel round-trips bitwise") {
  ImageBuffer img(1, 1, 3);
  img.pixels = {255, 0, 0};
  const std::string path = tmp_path("one.ppm");
  save_image(img, path);
  CHECK(load_image(path) == img);
}

TEST_CASE("P5 graymap round-trips") {
  ImageBuffer img(2, 2, 1);
  img.pixels = {0, 64, 128, 255};
  const std::string path = tmp_path("gray.pgm");
  save_image(img, path);
  ImageBuffer back = load_image(path);
  CHECK(back.channels == 1);
  CHECK(back == img);
}

TEST_CASE("PNM header parsing accepts comments and whitespace") {
  const std::string path = tmp_path("comment.pgm");
  std::ofstream out(path, std::ios::binary);
  out << "P5 # format\n# a comment line\n 2 \t2\n255\n";
  const char payload[4] = {1, 2, 3, 4};
  out.write(payload, 4);
  out.close();
  ImageBuffer img = load_image(path);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<uint8_t>{1, 2, 3, 4});
}

TEST_CASE("PNM decode failures are distinct and descriptive") {
  ImageBuffer img(4, 3, 3);
  for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = uint8_t(i * 7);
  const std::string good = tmp_path("good.ppm");
  save_image(img, good);

  SUBCASE("truncated payload reports the missing byte count") {
    auto bytes = slurp(good);
    bytes.resize(bytes.size() - 5);
    const std::string path = tmp_path("trunc.ppm");
    spill(path, bytes);
    try {
      load_image(path);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
      CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    auto bytes = slurp(good);
    bytes[1] = '9';
    const std::string path = tmp_path("magic.ppm");
    spill(path, bytes);
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("malformed header"), DecodeError);
  }
  SUBCASE("unsupported maxval") {
    const std::string path = tmp_path("maxval.pgm");
    std::ofstream out(path, std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out << char(0) << char(0);
    out.close();
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("unsupported maxval"), DecodeError);
  }
}

TEST_CASE("mask save/load round-trips through the default palette") {
  const int k = 5;
  Palette palette = default_palette(k);
  LabelMap labels(1, 8, 8);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, k - 1);
  for (auto& v : labels.v) v = int32_t(cls(rng));
  const std::string path = tmp_path("mask.ppm");
  save_mask(labels, palette, path);
  CHECK(load_mask(path, palette) == labels);
}

TEST_CASE("mask error paths") {
  Palette dup = {{{1, 2, 3}}, {{1, 2, 3}}};
  LabelMap labels(1, 2, 2, 0);
  CHECK_THROWS_AS(save_mask(labels, dup, tmp_path("dup.ppm")), ValueError);

  Palette small = default_palette(2);
  LabelMap big(1, 2, 2, 5);
  CHECK_THROWS_AS(save_mask(big, small, tmp_path("range.ppm")), ValueError);

  // A color missing from the palette is rejected on load.
  Palette a = default_palette(3);
  save_mask(LabelMap(1, 2, 2, 2), a, tmp_path("unknown.ppm"));
  CHECK_THROWS_AS(load_mask(tmp_path("unknown.ppm"), default_palette(2)), DecodeError);

  // An all-background mask is a single color image.
  save_mask(LabelMap(1, 4, 4, 0), a, tmp_path("bg.ppm"));
  ImageBuffer bg = load_image(tmp_path("bg.ppm"));
  for (int i = 0; i < 16; ++i) {
    CHECK(bg.pixels[size_t(3 * i)] == a[0][0]);
    CHECK(bg.pixels[size_t(3 * i + 1)] == a[0][1]);
    CHECK(bg.pixels[size_t(3 * i + 2)] == a[0][2]);
  }
}

TEST_CASE("run config JSON round-trip and validation") {
  RunConfig rc;
  rc.model.stage_channels = {4, 8, 16, 32};
  rc.model.use_bem = false;
  rc.model.use_sm = false;
  rc.seed = 1234;
  const std::string path = tmp_path("config.json");
  save_run_config(rc, path);
  RunConfig back = load_run_config(path);
  CHECK(back.model == rc.model);
  CHECK(back.seed == 1234);

  CHECK_THROWS_AS(run_config_from_json("{ nope"), DecodeError);
  CHECK_THROWS_AS(run_config_from_json("{\"unknown_field\": 1}"), DecodeError);
  // Contradictory toggles are caught at parse time.
  CHECK_THROWS_AS(run_config_from_json("{\"use_mcfs\": false}"), ValueError);

  // Omitted fields fall back to the documented defaults.
  RunConfig minimal = run_config_from_json("{}");
  CHECK(minimal.model == ModelConfig{});
  CHECK(minimal.seed == 0);
  RunConfig partial = run_config_from_json("{\"num_classes\": 7, \"seed\": 3}");
  CHECK(partial.model.num_classes == 7);
  CHECK(partial.model.stage_channels == ModelConfig{}.stage_channels);
  CHECK(partial.seed == 3);

  CHECK_THROWS_AS(load_run_config(tmp_path("does_not_exist.json")), IoError);
}

TEST_CASE("checkpoint round-trip restores parameter bytes exactly") {
  RunConfig rc;
  rc.model.stage_channels = {4, 4, 8, 8};
  rc.model.mcfs_groups = 2;
  rc.model.decoder_width = 8;
  rc.model.num_classes = 3;
  rc.seed = 55;
  Model model = build_model(rc.model, rc.seed);
  // Perturb away from the deterministic init so the test is not vacuous.
  std::mt19937_64 rng(9);
  for (auto& [name, t] : model.store) {
    for (double& v : t.values_mut()) v += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  }

  const std::string path = tmp_path("model.cosk");
  save_checkpoint(path, rc, model.store);

  Model fresh = build_model(rc.model, rc.seed + 1);
  load_checkpoint_into(path, fresh);
  auto ia = model.store.begin();
  auto ib = fresh.store.begin();
  for (; ia != model.store.end(); ++ia, ++ib) {
    CHECK(ia->first == ib->first);
    CHECK(bitwise_equal(ia->second, ib->second));
  }

  CheckpointData data = read_checkpoint(path);
  CHECK(data.config.model == rc.model);
  CHECK(data.config.seed == 55);
  CHECK(data.entries.size() == model.store.size());
}

TEST_CASE("checkpoint corruption and mismatch are distinct errors") {
  RunConfig rc;
  rc.model.stage_channels = {4, 4, 8, 8};
  rc.model.mcfs_groups = 2;
  rc.model.decoder_width = 8;
  rc.model.num_classes = 3;
  Model model = build_model(rc.model, 1);
  const std::string path = tmp_path("err.cosk");
  save_checkpoint(path, rc, model.store);

  SUBCASE("flipped payload byte -> CRC error") {
    auto bytes = slurp(path);
    bytes[bytes.size() / 2] ^= 0x40;
    spill(path, bytes);
    CHECK_THROWS_AS(read_checkpoint(path), CrcError);
  }
  SUBCASE("bad version -> version error (with CRC refreshed)") {
    auto bytes = slurp(path);
    bytes[4] = 99;  // version lives after the 4-byte magic
    // refresh the trailing CRC so the version check is what fires
    {
      std::vector<uint8_t> body(bytes.begin(), bytes.end() - 4);
      // recompute with the same polynomial via a second checkpoint write is
      // overkill; use zlib through the public API instead: rewrite by hand.
      // (The reader checks CRC before version, so craft bytes accordingly.)
      uint32_t crc = 0;
      {
        // tiny local crc32 (reflected, poly 0xEDB88320) for test fixture use
        crc = 0xFFFFFFFFu;
        for (uint8_t b : body) {
          crc ^= b;
          for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
        }
        crc ^= 0xFFFFFFFFu;
      }
      for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + size_t(i)] = uint8_t(crc >> (8 * i));
    }
    spill(path, bytes);
    CHECK_THROWS_AS(read_checkpoint(path), VersionError);
  }
  SUBCASE("config mismatch") {
    Model other = build_model(rc.model.ablation_variant(2), 1);
    CHECK_THROWS_AS(load_checkpoint_into(path, other), ConfigMismatchError);
  }
  SUBCASE("truncation") {
    auto bytes = slurp(path);
    bytes.resize(bytes.size() - 9);
    spill(path, bytes);
    CHECK_THROWS_AS(read_checkpoint(path), IoError);
  }
}

TEST_CASE("feature dumps round-trip and expose the BEM residual-zero path") {
  RunConfig rc;
  rc.model.stage_channels = {4, 4, 8, 8};
  rc.model.mcfs_groups = 2;
  rc.model.decoder_width = 8;
  rc.model.num_classes = 3;
  Model model = build_model(rc.model, 21);

  Tensor constant = Tensor::full(Shape4{1, 3, 32, 32}, 0.25);
  ForwardTrace trace = model_forward_trace(model, constant);
  const std::string path = tmp_path("features.cosf");
  dump_features(path, {{"f3", trace.pyramid.f3}, {"f5", trace.pyramid.f5}});

  auto loaded = load_features(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].first == "f3");
  CHECK(bitwise_equal(loaded[0].second, trace.pyramid.f3));
  CHECK(bitwise_equal(loaded[1].second, trace.pyramid.f5));

  // With a constant input image the stem output is constant per channel
  // away from padding effects only at the borders; the BEM residual-zero
  // property is exercised directly instead: f5 must equal the fusion of
  // (f3, 0) recomputed by the oracle.
  CHECK(max_abs_diff(loaded[1].second, oracle::bem_ref(loaded[0].second, *model.params.bem)) <
        1e-10);
}
