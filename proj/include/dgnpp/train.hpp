#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dgnpp/events.hpp"
#include "dgnpp/intensity.hpp"
#include "dgnpp/model_params.hpp"
#include "dgnpp/objective.hpp"

namespace dgnpp {

struct TrainConfig {
  std::size_t dim = 128;
  std::size_t attn_dim = 128;
  std::size_t sal_blocks = 4;
  std::size_t layers = 4;
  std::size_t num_snapshots = 32;
  std::size_t history_cap = 64;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double dropout = 0.7;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::size_t negatives = 100;
  std::size_t mc_samples_per_gap = 4;
  std::uint64_t seed = 0;
  bool ablate_nal = false;
  bool ablate_sal = false;
  std::size_t threads = 1;

  ModelOptions model_options() const;
  ModelDims dims(std::size_t num_users, std::size_t num_items) const;
  void validate() const;
};

// Decoupled-weight-decay Adam.
class AdamW {
 public:
  AdamW(const ModelParams& like, double learning_rate, double weight_decay,
        double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return steps_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
  ModelParams m_, v_;
};

struct EpochStats {
  std::size_t epoch = 0;
  // -log_likelihood summed over the epoch's batches.
  double loss = 0.0;
  double log_sum_term = 0.0;
  double integral_term = 0.0;
  std::size_t clamped_events = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> epochs;
  // Per-batch losses in order.
  std::vector<double> batch_losses;
  bool diverged = false;
  std::string message;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Chronological mini-batches of `batch_size` events, one AdamW step each.
// Training stops (with the last finite parameters) if the loss or the
// parameters stop being finite.
TrainResult train(const EventStream& stream, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Continue from existing parameters.
TrainResult train_from(const EventStream& stream, const TrainConfig& config,
                       ModelParams initial, const EpochCallback& on_epoch = {});

}  // namespace dgnpp
