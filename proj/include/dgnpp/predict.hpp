#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/events.hpp"
#include "dgnpp/intensity.hpp"

namespace dgnpp {

struct RankedItem {
  std::size_t item = 0;
  double score = 0.0;
};

// Descending score, ties by ascending item id.
std::vector<RankedItem> rank_by_scores(std::span<const std::size_t> items,
                                       const Eigen::VectorXd& scores);

// 1-based rank of `target` under the same ordering.
std::size_t rank_of(std::span<const std::size_t> items, const Eigen::VectorXd& scores,
                    std::size_t target);

// Candidates ranked by lambda' at t_plus (the softmax denominator is shared,
// so the order equals the normalized-intensity order).
std::vector<RankedItem> predict_event(const IntensityModel& model, std::size_t user,
                                      double t_plus,
                                      std::span<const std::size_t> candidates);

struct QuadratureConfig {
  std::size_t nodes_per_decade = 512;
  double survival_cutoff = 1e-6;
  double cap_multiple = 50.0;
  double rate_floor = 1e-6;
  // First grid offset as a fraction of the span to the cap.
  double first_step_fraction = 1e-8;
};

struct TimePrediction {
  double time = 0.0;
  bool truncated = false;
  double survival_at_end = 1.0;
  std::size_t nodes = 0;
};

// E[t] = integral over t > t_from of t lambda(t) exp(-int_{t_from}^t lambda),
// by trapezoids on a geometric grid in t - t_from. Survival left at the cap
// is assigned to the cap and flagged.
TimePrediction predict_time(const std::function<double(double)>& intensity,
                            double t_from, const QuadratureConfig& q = {});

// lambda_{(u,v)} normalized over the user's row of items, with the history
// at or before t_from frozen.
TimePrediction predict_time(const IntensityModel& model, std::size_t user,
                            std::size_t item, double t_from,
                            const QuadratureConfig& q = {});

struct EvalOptions {
  std::vector<std::size_t> k_list{10, 20};
  // 0 ranks against every item; otherwise the true item plus cap-1 sampled.
  std::size_t candidate_cap = 0;
  bool predict_time = true;
  std::uint64_t seed = 0;
  QuadratureConfig quadrature;
};

struct EventRecord {
  std::size_t index = 0;
  std::size_t user = 0;
  std::size_t true_item = 0;
  std::size_t rank = 0;
  std::size_t candidates = 0;
  double predicted_time = 0.0;
  double true_time = 0.0;
  bool truncated = false;
};

struct EvalReport {
  double mrr = 0.0;
  std::map<std::size_t, double> recall;
  // On timestamps min-max scaled to [0, 1]; NaN when not computed.
  double rmse = 0.0;
  std::size_t n_events = 0;
  std::size_t truncation_warnings = 0;
  std::vector<EventRecord> records;
};

using RankScorer =
    std::function<Eigen::VectorXd(std::size_t user, double t, std::span<const std::size_t> items)>;

// Ranking metrics for any scorer; the scorer sees events in order.
EvalReport evaluate_rankings(const EventStream& test, const RankScorer& scorer,
                             const EvalOptions& options,
                             const std::function<void(const InteractionEvent&)>& after = {});

// Ranks each test event's true item at its timestamp, predicts its time from
// the user's previous interaction, then appends the event to the history.
EvalReport evaluate(IntensityModel& model, const EventStream& test,
                    const EvalOptions& options);

// {mrr, recall@k..., rmse, n_events, truncation_warnings}
std::string metrics_json(const EvalReport& report);
// event_index,user,true_item,rank,predicted_time,true_time
void write_audit_csv(const EvalReport& report, std::ostream& out);

}  // namespace dgnpp
