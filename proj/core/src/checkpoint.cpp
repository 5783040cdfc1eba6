#include "cosnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "cosnet/error.hpp"

namespace cosnet {

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'O', 'S', 'K'};
constexpr char kFeatureMagic[4] = {'C', 'O', 'S', 'F'};
constexpr uint16_t kVersion = 1;

// ---- little-endian primitives over a byte buffer ----

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v & 0xff));
  out.push_back(uint8_t(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(uint8_t((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const uint8_t* p;
  size_t size;
  size_t pos = 0;
  const char* what;

  void need(size_t n) const {
    if (pos + n > size) {
      throw DecodeError(std::string(what) + ": truncated (needed " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos) + ")");
    }
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + size_t(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(p[pos + size_t(i)]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(bits);
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p + pos), n);
    pos += n;
    return s;
  }
};

void put_tensor_entry(std::vector<uint8_t>& out, const std::string& name, const Tensor& t) {
  if (name.size() > 0xffff) throw ValueError("tensor name too long");
  put_u16(out, uint16_t(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  const Shape4& s = t.shape();
  put_u32(out, uint32_t(s.n));
  put_u32(out, uint32_t(s.c));
  put_u32(out, uint32_t(s.h));
  put_u32(out, uint32_t(s.w));
  for (double v : t.values()) put_f64(out, v);
}

std::pair<std::string, Tensor> read_tensor_entry(Reader& r) {
  const std::string name = r.str(r.u16());
  const uint32_t n = r.u32(), c = r.u32(), h = r.u32(), w = r.u32();
  if (n < 1 || c < 1 || h < 1 || w < 1 || int64_t(n) * c * h * w > (int64_t(1) << 32)) {
    throw DecodeError(std::string(r.what) + ": implausible tensor extents for '" + name + "'");
  }
  const Shape4 shape{int(n), int(c), int(h), int(w)};
  std::vector<double> values(size_t(shape.numel()));
  for (double& v : values) v = r.f64();
  return {name, Tensor::from_values(shape, std::move(values))};
}

std::vector<uint8_t> read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open '") + path + "' for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(std::string(what) + ": read failure on '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

uint32_t crc_of(const uint8_t* data, size_t n) {
  return uint32_t(::crc32(0L, data, uInt(n)));
}

}  // namespace

void save_checkpoint(const std::string& path, const RunConfig& config, const ParamStore& params) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
  put_u16(out, kVersion);
  const std::string cfg = run_config_to_json(config);
  put_u32(out, uint32_t(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  put_u32(out, uint32_t(params.size()));
  for (const auto& [name, t] : params) put_tensor_entry(out, name, t);
  put_u32(out, crc_of(out.data(), out.size()));
  write_file(path, out);
}

CheckpointData read_checkpoint(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path, "checkpoint");
  if (bytes.size() < 14) throw DecodeError("checkpoint: file too short");

  // The trailing CRC covers every preceding byte; verify before parsing so a
  // single flipped byte anywhere is reported as corruption.
  const uint32_t stored = uint32_t(bytes[bytes.size() - 4]) |
                          uint32_t(bytes[bytes.size() - 3]) << 8 |
                          uint32_t(bytes[bytes.size() - 2]) << 16 |
                          uint32_t(bytes[bytes.size() - 1]) << 24;
  const uint32_t actual = crc_of(bytes.data(), bytes.size() - 4);
  if (stored != actual) {
    throw CrcError("checkpoint: CRC mismatch (stored " + std::to_string(stored) + ", computed " +
                   std::to_string(actual) + ")");
  }

  Reader r{bytes.data(), bytes.size() - 4, 0, "checkpoint"};
  if (r.str(4) != std::string(kCheckpointMagic, 4)) {
    throw DecodeError("checkpoint: bad magic, not a checkpoint file");
  }
  const uint16_t version = r.u16();
  if (version != kVersion) {
    throw VersionError("checkpoint: unsupported format version " + std::to_string(version));
  }
  CheckpointData data;
  data.config = run_config_from_json(r.str(r.u32()));
  const uint32_t count = r.u32();
  data.entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) data.entries.push_back(read_tensor_entry(r));
  if (r.pos != r.size) throw DecodeError("checkpoint: trailing bytes after last entry");
  return data;
}

void load_checkpoint_into(const std::string& path, Model& model) {
  CheckpointData data = read_checkpoint(path);
  if (!(data.config.model == model.config)) {
    throw ConfigMismatchError("checkpoint was built for a different model configuration");
  }
  if (data.entries.size() != model.store.size()) {
    throw ConfigMismatchError("checkpoint has " + std::to_string(data.entries.size()) +
                              " parameters, model expects " + std::to_string(model.store.size()));
  }
  for (auto& [name, tensor] : data.entries) {
    if (!model.store.contains(name)) {
      throw ConfigMismatchError("checkpoint parameter '" + name + "' unknown to the model");
    }
    Tensor& dst = model.store.get(name);
    if (!(dst.shape() == tensor.shape())) {
      throw ConfigMismatchError("checkpoint parameter '" + name + "' has shape " +
                                tensor.shape().str() + ", model expects " + dst.shape().str());
    }
    std::span<double> out = dst.values_mut();
    std::span<const double> in = tensor.values();
    std::copy(in.begin(), in.end(), out.begin());
  }
}

void dump_features(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::vector<uint8_t> out;
  for (const auto& [name, t] : tensors) {
    out.insert(out.end(), kFeatureMagic, kFeatureMagic + 4);
    put_tensor_entry(out, name, t);
  }
  write_file(path, out);
}

std::vector<std::pair<std::string, Tensor>> load_features(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path, "feature dump");
  Reader r{bytes.data(), bytes.size(), 0, "feature dump"};
  std::vector<std::pair<std::string, Tensor>> tensors;
  while (r.pos < r.size) {
    if (r.str(4) != std::string(kFeatureMagic, 4)) {
      throw DecodeError("feature dump: bad record magic");
    }
    tensors.push_back(read_tensor_entry(r));
  }
  return tensors;
}

}  // namespace cosnet
