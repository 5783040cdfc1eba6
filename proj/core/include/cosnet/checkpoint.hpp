#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cosnet/model.hpp"
#include "cosnet/params.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Checkpoint file ("COSK"): format version, config snapshot (the JSON run
// config), ordered named f64 tensors, trailing CRC-32 over everything before
// it. All integers and reals are little-endian; round-trips are bit-exact.
void save_checkpoint(const std::string& path, const RunConfig& config, const ParamStore& params);

struct CheckpointData {
  RunConfig config;
  std::vector<std::pair<std::string, Tensor>> entries;
};

// Low-level reader: verifies CRC/magic/version and decodes everything.
CheckpointData read_checkpoint(const std::string& path);

// Restores parameters into an existing model in place. The stored config
// must equal the model's (ConfigMismatchError otherwise); entry names and
// shapes must match the model's store exactly.
void load_checkpoint_into(const std::string& path, Model& model);

// Feature dump file ("COSF" records): named tensors, concatenated. Used to
// inspect intermediate maps (stage features, logits) outside the process.
void dump_features(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_features(const std::string& path);

}  // namespace cosnet
