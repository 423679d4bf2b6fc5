#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dgnpp/events.hpp"
#include "dgnpp/intensity.hpp"

namespace dgnpp {

// Anything that can score observed events and report the total intensity.
class PointProcess {
 public:
  virtual ~PointProcess() = default;
  // log lambda_{(u,v)}(t) of observed event `index`.
  virtual double log_event_intensity(std::size_t index,
                                     const InteractionEvent& e) const = 0;
  // lambda(t) inside gap `gap`, the interval closed by event `gap`
  // (gap == n is the tail up to the horizon).
  virtual double total_intensity(double t, std::size_t gap) const = 0;
};

struct LikelihoodEstimate {
  double log_sum_term = 0.0;   // A
  double integral_term = 0.0;  // B, Monte Carlo
  double total = 0.0;          // A - B
  std::size_t mc_samples = 0;
  double integral_std_error = 0.0;
};

// log(1e-12): lower clamp for per-event log intensities.
inline constexpr double kLogIntensityFloor = -27.631021115928547;

// Sum of event log-intensities minus the stratified Monte Carlo integral of
// lambda(t) over (0, horizon]: each gap between consecutive events (and the
// tail) draws mc_samples_per_gap uniform times. Deterministic under seed.
LikelihoodEstimate log_likelihood(const PointProcess& process,
                                  const EventStream& stream,
                                  std::size_t mc_samples_per_gap,
                                  std::uint64_t seed);

// The same estimate restricted to events [begin, end) and the gaps they
// close (plus the tail when end == n). Windows over a partition of the
// stream sum to the full estimate.
LikelihoodEstimate window_log_likelihood(const PointProcess& process,
                                         const EventStream& stream,
                                         std::size_t begin, std::size_t end,
                                         std::size_t mc_samples_per_gap,
                                         std::uint64_t seed);

// Integral term only, for the gaps closed by events [begin, end).
LikelihoodEstimate integral_term(const PointProcess& process,
                                 const EventStream& stream, std::size_t begin,
                                 std::size_t end, std::size_t mc_samples_per_gap,
                                 std::uint64_t seed);

// Deterministic seed derivation (splitmix64 over the inputs).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Fixed-order pairwise summation.
double pairwise_sum(std::span<const double> values);

// DGNPP intensity seen through a softmax support chosen per event; gap k
// uses the support of event k (the tail uses event n).
class ModelPointProcess final : public PointProcess {
 public:
  using SupportFn = std::function<Support(std::size_t index)>;

  ModelPointProcess(const IntensityModel& model, Support shared);
  ModelPointProcess(const IntensityModel& model, SupportFn per_event);

  double log_event_intensity(std::size_t index,
                             const InteractionEvent& e) const override;
  double total_intensity(double t, std::size_t gap) const override;

 private:
  const IntensityModel* model_;
  SupportFn support_;
};

}  // namespace dgnpp
