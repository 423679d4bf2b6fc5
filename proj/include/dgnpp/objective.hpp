#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "dgnpp/events.hpp"
#include "dgnpp/intensity.hpp"
#include "dgnpp/likelihood.hpp"
#include "dgnpp/model_params.hpp"
#include "dgnpp/snapshot.hpp"

namespace dgnpp {

// Everything about the training stream that does not depend on parameters.
struct TrainingContext {
  TrainingContext(const EventStream& stream, ModelOptions options);

  const EventStream* stream;
  ModelOptions options;
  std::shared_ptr<const std::vector<SnapshotGraph>> snapshots;
  double snapshot_duration = 1.0;
  std::shared_ptr<InteractionHistory> history;

  std::size_t snapshot_of(double t) const;
  // Plain-forward model over the training history, for the given params.
  IntensityModel model(const ModelParams& params) const;
};

// The observed item first, then `negatives` distinct other items drawn
// without replacement. When that would cover the catalogue, the whole user
// row in id order.
Support sampled_support(std::size_t user, std::size_t true_item,
                        std::size_t num_items, std::size_t negatives,
                        std::uint64_t seed);

struct ObjectiveConfig {
  // 0 means the whole user row.
  std::size_t negatives = 100;
  std::size_t mc_samples_per_gap = 4;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  // Varies supports and dropout masks between epochs.
  std::uint64_t salt = 0;
  // All (user, item) pairs instead of one user row; small problems only.
  bool all_pairs = false;
  std::size_t threads = 1;
};

// Support used for event `index` (and the gap it closes).
Support event_support(const TrainingContext& ctx, const ObjectiveConfig& cfg,
                      std::size_t index);

struct ObjectiveResult {
  double log_sum_term = 0.0;
  double integral_term = 0.0;
  // log_sum_term - integral_term
  double log_likelihood = 0.0;
  std::size_t clamped_events = 0;
};

// Window log-likelihood of events [begin, end). When `grads` is non-null
// the gradient of -log_likelihood is added to it. The integral term is
// estimated by Monte Carlo through the plain model; normalized intensities
// sum to one over every support, so it carries no gradient.
ObjectiveResult window_objective(const TrainingContext& ctx,
                                 const ModelParams& params,
                                 const ObjectiveConfig& cfg, std::size_t begin,
                                 std::size_t end, ModelParams* grads);

// Same value without the tape, through IntensityModel (dropout ignored).
ObjectiveResult window_objective_plain(const TrainingContext& ctx,
                                       const ModelParams& params,
                                       const ObjectiveConfig& cfg,
                                       std::size_t begin, std::size_t end);

}  // namespace dgnpp
