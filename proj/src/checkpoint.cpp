#include "dgnpp/checkpoint.hpp"

#include <fstream>

#include "dgnpp/run_config.hpp"

namespace dgnpp {

using nlohmann::json;

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  json j;
  j["format"] = "dgnpp-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = to_json(ckpt.config);
  const ModelDims d = ckpt.params.dims();
  j["dims"] = json{{"num_users", d.num_users},
                   {"num_items", d.num_items},
                   {"dim", d.dim},
                   {"attn_dim", d.attn_dim},
                   {"sal_blocks", d.sal_blocks}};
  j["epochs_completed"] = ckpt.epochs_completed;
  j["rng"] = json{{"seed", ckpt.rng_seed}, {"epoch", ckpt.rng_epoch}};
  json list = json::array();
  for (const auto& t : tensors(ckpt.params)) {
    const auto flat = t.flat();
    list.push_back(json{{"name", t.name},
                        {"rows", t.rows},
                        {"cols", t.cols},
                        {"data", std::vector<double>(flat.data(), flat.data() + flat.size())}});
  }
  j["tensors"] = std::move(list);
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("failed to write checkpoint");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  save_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "dgnpp-checkpoint") {
      throw CheckpointError("not a dgnpp checkpoint");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                            " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint c;
    try {
      merge_json(j.at("config"), c.config);
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint config: ") + e.what());
    }
    const json& dj = j.at("dims");
    ModelDims d;
    d.num_users = dj.at("num_users").get<std::size_t>();
    d.num_items = dj.at("num_items").get<std::size_t>();
    d.dim = dj.at("dim").get<std::size_t>();
    d.attn_dim = dj.at("attn_dim").get<std::size_t>();
    d.sal_blocks = dj.at("sal_blocks").get<std::size_t>();
    if (d.dim != c.config.dim || d.attn_dim != c.config.attn_dim ||
        d.sal_blocks != c.config.sal_blocks) {
      throw CheckpointError("checkpoint dims disagree with its config");
    }
    c.params = zeros_like(init_model_params(d, 0));
    c.epochs_completed = j.at("epochs_completed").get<std::size_t>();
    c.rng_seed = j.at("rng").at("seed").get<std::uint64_t>();
    c.rng_epoch = j.at("rng").at("epoch").get<std::uint64_t>();

    auto slots = tensors(c.params);
    const json& list = j.at("tensors");
    if (list.size() != slots.size()) {
      throw CheckpointError("checkpoint has " + std::to_string(list.size()) +
                            " tensors, expected " + std::to_string(slots.size()));
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const json& t = list[k];
      const auto name = t.at("name").get<std::string>();
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (name != slots[k].name || rows != slots[k].rows || cols != slots[k].cols) {
        throw CheckpointError("checkpoint tensor " + std::to_string(k) + " (" + name +
                              ") does not match the expected layout (" + slots[k].name +
                              ")");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != slots[k].size()) {
        throw CheckpointError("checkpoint tensor " + name + " has the wrong size");
      }
      std::copy(data.begin(), data.end(), slots[k].data);
    }
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace dgnpp
