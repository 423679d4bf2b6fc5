#include "dgnpp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dgnpp {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

LikelihoodEstimate integral_term(const PointProcess& process,
                                 const EventStream& stream, std::size_t begin,
                                 std::size_t end, std::size_t mc_samples_per_gap,
                                 std::uint64_t seed) {
  if (mc_samples_per_gap == 0) {
    throw std::invalid_argument("log_likelihood: need at least one MC sample per gap");
  }
  const std::size_t n = stream.size();
  if (begin > end || end > n) throw std::invalid_argument("log_likelihood: bad window");

  std::vector<double> contributions;
  std::vector<double> variances;
  auto integrate_gap = [&](std::size_t gap, double lo, double hi) {
    const double width = hi - lo;
    if (!(width > 0.0)) return;
    std::mt19937_64 rng(mix_seed(seed, gap));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> ys(mc_samples_per_gap);
    for (auto& y : ys) {
      // Uniform on (lo, hi]; 1 - U avoids evaluating at the left end.
      y = process.total_intensity(lo + width * (1.0 - unit(rng)), gap);
    }
    const double mean = pairwise_sum(ys) / static_cast<double>(ys.size());
    double var = 0.0;
    if (ys.size() > 1) {
      for (const double y : ys) var += (y - mean) * (y - mean);
      var /= static_cast<double>(ys.size() - 1);
    }
    contributions.push_back(width * mean);
    variances.push_back(width * width * var / static_cast<double>(ys.size()));
  };

  for (std::size_t k = begin; k < end; ++k) {
    const double lo = k == 0 ? 0.0 : stream.events[k - 1].timestamp;
    integrate_gap(k, lo, stream.events[k].timestamp);
  }
  if (end == n) {
    const double lo = n == 0 ? 0.0 : stream.events[n - 1].timestamp;
    integrate_gap(n, lo, stream.horizon);
  }

  LikelihoodEstimate est;
  est.integral_term = pairwise_sum(contributions);
  est.integral_std_error = std::sqrt(pairwise_sum(variances));
  est.mc_samples = contributions.size() * mc_samples_per_gap;
  est.total = -est.integral_term;
  return est;
}

LikelihoodEstimate window_log_likelihood(const PointProcess& process,
                                         const EventStream& stream,
                                         std::size_t begin, std::size_t end,
                                         std::size_t mc_samples_per_gap,
                                         std::uint64_t seed) {
  LikelihoodEstimate est =
      integral_term(process, stream, begin, end, mc_samples_per_gap, seed);
  std::vector<double> logs;
  logs.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    const double l = process.log_event_intensity(k, stream.events[k]);
    logs.push_back(std::isnan(l) ? l : std::max(l, kLogIntensityFloor));
  }
  est.log_sum_term = pairwise_sum(logs);
  est.total = est.log_sum_term - est.integral_term;
  return est;
}

LikelihoodEstimate log_likelihood(const PointProcess& process,
                                  const EventStream& stream,
                                  std::size_t mc_samples_per_gap,
                                  std::uint64_t seed) {
  return window_log_likelihood(process, stream, 0, stream.size(),
                               mc_samples_per_gap, seed);
}

// ---------------------------------------------------------------------------

ModelPointProcess::ModelPointProcess(const IntensityModel& model, Support shared)
    : model_(&model),
      support_([shared = std::move(shared)](std::size_t) { return shared; }) {}

ModelPointProcess::ModelPointProcess(const IntensityModel& model,
                                     SupportFn per_event)
    : model_(&model), support_(std::move(per_event)) {}

double ModelPointProcess::log_event_intensity(std::size_t index,
                                              const InteractionEvent& e) const {
  return model_->log_normalized_intensity(e.user, e.item, e.timestamp,
                                          support_(index));
}

double ModelPointProcess::total_intensity(double t, std::size_t gap) const {
  return model_->total_intensity(t, support_(gap));
}

}  // namespace dgnpp
