#include "dgnpp/run_config.hpp"

#include <fstream>
#include <set>

namespace dgnpp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

const std::set<std::string> kTrainKeys = {
    "dim",          "attn_dim",      "sal_blocks", "layers",
    "snapshots",    "history_cap",   "learning_rate", "weight_decay",
    "dropout",      "epochs",        "batch_size", "negatives",
    "mc_samples",   "seed",          "ablate_nal", "ablate_sal",
    "threads"};

}  // namespace

HawkesParams SimulateConfig::params() const {
  const std::size_t k = users * items;
  if (k == 0) throw ConfigError("simulate: users and items must be positive");
  HawkesParams p;
  p.baseline.resize(static_cast<Eigen::Index>(k));
  if (baseline.size() == 1) {
    p.baseline.setConstant(baseline[0]);
  } else if (baseline.size() == k) {
    for (std::size_t i = 0; i < k; ++i) p.baseline(static_cast<Eigen::Index>(i)) = baseline[i];
  } else {
    throw ConfigError("simulate: baseline needs 1 or users*items entries");
  }
  p.excitation.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  if (excitation.size() == 1 && excitation[0].size() == 1) {
    p.excitation.setConstant(excitation[0][0]);
  } else if (excitation.size() == k) {
    for (std::size_t i = 0; i < k; ++i) {
      if (excitation[i].size() != k) throw ConfigError("simulate: excitation must be square");
      for (std::size_t j = 0; j < k; ++j) {
        p.excitation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            excitation[i][j];
      }
    }
  } else {
    throw ConfigError("simulate: excitation needs a single value or a K x K matrix");
  }
  p.decay = decay;
  return p;
}

json to_json(const TrainConfig& c) {
  return json{{"dim", c.dim},
              {"attn_dim", c.attn_dim},
              {"sal_blocks", c.sal_blocks},
              {"layers", c.layers},
              {"snapshots", c.num_snapshots},
              {"history_cap", c.history_cap},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"dropout", c.dropout},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"negatives", c.negatives},
              {"mc_samples", c.mc_samples_per_gap},
              {"seed", c.seed},
              {"ablate_nal", c.ablate_nal},
              {"ablate_sal", c.ablate_sal},
              {"threads", c.threads}};
}

void merge_json(const json& j, TrainConfig& c) {
  reject_unknown(j, kTrainKeys, "train config");
  read(j, "dim", c.dim);
  read(j, "attn_dim", c.attn_dim);
  read(j, "sal_blocks", c.sal_blocks);
  read(j, "layers", c.layers);
  read(j, "snapshots", c.num_snapshots);
  read(j, "history_cap", c.history_cap);
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "dropout", c.dropout);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "negatives", c.negatives);
  read(j, "mc_samples", c.mc_samples_per_gap);
  read(j, "seed", c.seed);
  read(j, "ablate_nal", c.ablate_nal);
  read(j, "ablate_sal", c.ablate_sal);
  read(j, "threads", c.threads);
}

json to_json(const RunConfig& c) {
  json j = to_json(c.train);
  j["simulate"] = json{{"users", c.simulate.users},
                       {"items", c.simulate.items},
                       {"baseline", c.simulate.baseline},
                       {"excitation", c.simulate.excitation},
                       {"decay", c.simulate.decay},
                       {"horizon", c.simulate.horizon}};
  j["input"] = c.input;
  j["events"] = c.events;
  j["test"] = c.test;
  j["history"] = c.history;
  j["checkpoint"] = c.checkpoint;
  j["output"] = c.output;
  j["output_dir"] = c.output_dir;
  j["loss_trace"] = c.loss_trace;
  j["k_list"] = c.k_list;
  j["candidate_cap"] = c.candidate_cap;
  j["predict_time"] = c.predict_time;
  j["gradcheck_coords"] = c.gradcheck_coords;
  j["gradcheck_step"] = c.gradcheck_step;
  return j;
}

void merge_json(const json& j, RunConfig& c) {
  std::set<std::string> known = kTrainKeys;
  known.insert({"simulate", "input", "events", "test", "history", "checkpoint",
                "output", "output_dir", "loss_trace", "k_list", "candidate_cap",
                "predict_time", "gradcheck_coords", "gradcheck_step"});
  reject_unknown(j, known, "run config");
  json train_part = json::object();
  for (const auto& key : kTrainKeys) {
    if (j.contains(key)) train_part[key] = j.at(key);
  }
  merge_json(train_part, c.train);
  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    reject_unknown(s, {"users", "items", "baseline", "excitation", "decay", "horizon"},
                   "simulate");
    read(s, "users", c.simulate.users);
    read(s, "items", c.simulate.items);
    read(s, "decay", c.simulate.decay);
    read(s, "horizon", c.simulate.horizon);
    try {
      if (s.contains("baseline")) {
        const json& b = s.at("baseline");
        c.simulate.baseline = b.is_number() ? std::vector<double>{b.get<double>()}
                                            : b.get<std::vector<double>>();
      }
      if (s.contains("excitation")) {
        const json& a = s.at("excitation");
        c.simulate.excitation = a.is_number()
                                    ? std::vector<std::vector<double>>{{a.get<double>()}}
                                    : a.get<std::vector<std::vector<double>>>();
      }
    } catch (const json::exception&) {
      throw ConfigError("simulate: baseline/excitation have the wrong type");
    }
  }
  read(j, "input", c.input);
  read(j, "events", c.events);
  read(j, "test", c.test);
  read(j, "history", c.history);
  read(j, "checkpoint", c.checkpoint);
  read(j, "output", c.output);
  read(j, "output_dir", c.output_dir);
  read(j, "loss_trace", c.loss_trace);
  if (j.contains("k_list")) {
    try {
      c.k_list = j.at("k_list").get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
      throw ConfigError("config key 'k_list' has the wrong type");
    }
  }
  read(j, "candidate_cap", c.candidate_cap);
  read(j, "predict_time", c.predict_time);
  read(j, "gradcheck_coords", c.gradcheck_coords);
  read(j, "gradcheck_step", c.gradcheck_step);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig c;
  merge_json(j, c);
  return c;
}

}  // namespace dgnpp
