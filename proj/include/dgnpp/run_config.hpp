#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgnpp/hawkes.hpp"
#include "dgnpp/train.hpp"

namespace dgnpp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateConfig {
  std::size_t users = 2;
  std::size_t items = 3;
  // Per type (row-major over users x items); a single value is broadcast.
  std::vector<double> baseline{0.5};
  // Full K x K matrix, or a single value broadcast to every entry.
  std::vector<std::vector<double>> excitation{{0.0}};
  double decay = 1.0;
  double horizon = 100.0;

  HawkesParams params() const;
};

struct RunConfig {
  TrainConfig train;
  SimulateConfig simulate;

  std::string input;       // ingest: JODIE-style CSV
  std::string events;      // canonical training events
  std::string test;        // canonical test events
  std::string history;     // eval: events preceding the test stream
  std::string checkpoint;
  std::string output;      // ingest / simulate output file
  std::string output_dir = "out";
  std::string loss_trace;  // train: defaults to <output_dir>/loss_trace.csv

  std::vector<std::size_t> k_list{10, 20};
  std::size_t candidate_cap = 0;  // 0: rank against every item
  bool predict_time = true;

  std::size_t gradcheck_coords = 8;
  double gradcheck_step = 1e-5;
};

nlohmann::json to_json(const TrainConfig& c);
// Strict: unknown keys and wrong types throw ConfigError. Missing keys
// keep the values already in `into`.
void merge_json(const nlohmann::json& j, TrainConfig& into);

nlohmann::json to_json(const RunConfig& c);
void merge_json(const nlohmann::json& j, RunConfig& into);

RunConfig load_run_config(const std::string& path);

}  // namespace dgnpp
