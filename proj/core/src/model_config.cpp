// JSON (de)serialization of run configurations. The same schema is embedded
// in checkpoints as the config snapshot.

#include <fstream>
#include <set>

#include <json.hpp>

#include "cosnet/error.hpp"
#include "cosnet/model.hpp"

namespace cosnet {

namespace {

using nlohmann::json;

json to_json(const RunConfig& rc) {
  const ModelConfig& m = rc.model;
  return json{{"stage_channels", m.stage_channels},
              {"stage_depths", m.stage_depths},
              {"mcfs_dilations", {m.mcfs_dilations.first, m.mcfs_dilations.second}},
              {"mcfs_groups", m.mcfs_groups},
              {"sm_kernel", m.sm_kernel},
              {"mlp_ratio", m.mlp_ratio},
              {"bem_pool", m.bem_pool},
              {"bem_stride", m.bem_stride},
              {"num_classes", m.num_classes},
              {"use_mcfs", m.use_mcfs},
              {"use_sm", m.use_sm},
              {"use_bem", m.use_bem},
              {"use_residual", m.use_residual},
              {"decoder_width", m.decoder_width},
              {"input_channels", m.input_channels},
              {"seed", rc.seed}};
}

RunConfig from_json(const json& j) {
  static const std::set<std::string> known = {
      "stage_channels", "stage_depths", "mcfs_dilations", "mcfs_groups",  "sm_kernel",
      "mlp_ratio",      "bem_pool",     "bem_stride",     "num_classes",  "use_mcfs",
      "use_sm",         "use_bem",      "use_residual",   "decoder_width", "input_channels",
      "seed"};
  if (!j.is_object()) throw DecodeError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw DecodeError("unknown config field '" + it.key() + "'");
  }

  RunConfig rc;  // defaults
  ModelConfig& m = rc.model;
  try {
    if (j.contains("stage_channels")) j.at("stage_channels").get_to(m.stage_channels);
    if (j.contains("stage_depths")) j.at("stage_depths").get_to(m.stage_depths);
    if (j.contains("mcfs_dilations")) {
      auto d = j.at("mcfs_dilations").get<std::array<int, 2>>();
      m.mcfs_dilations = {d[0], d[1]};
    }
    if (j.contains("mcfs_groups")) j.at("mcfs_groups").get_to(m.mcfs_groups);
    if (j.contains("sm_kernel")) j.at("sm_kernel").get_to(m.sm_kernel);
    if (j.contains("mlp_ratio")) j.at("mlp_ratio").get_to(m.mlp_ratio);
    if (j.contains("bem_pool")) j.at("bem_pool").get_to(m.bem_pool);
    if (j.contains("bem_stride")) j.at("bem_stride").get_to(m.bem_stride);
    if (j.contains("num_classes")) j.at("num_classes").get_to(m.num_classes);
    if (j.contains("use_mcfs")) j.at("use_mcfs").get_to(m.use_mcfs);
    if (j.contains("use_sm")) j.at("use_sm").get_to(m.use_sm);
    if (j.contains("use_bem")) j.at("use_bem").get_to(m.use_bem);
    if (j.contains("use_residual")) j.at("use_residual").get_to(m.use_residual);
    if (j.contains("decoder_width")) j.at("decoder_width").get_to(m.decoder_width);
    if (j.contains("input_channels")) j.at("input_channels").get_to(m.input_channels);
    if (j.contains("seed")) j.at("seed").get_to(rc.seed);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed config: ") + e.what());
  }
  m.validate();
  return rc;
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig run_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed config: ") + e.what());
  }
  return from_json(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << run_config_to_json(config);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace cosnet
