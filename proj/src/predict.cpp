#include "dgnpp/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "dgnpp/likelihood.hpp"
#include "dgnpp/objective.hpp"

namespace dgnpp {

namespace {

bool ranks_before(double sa, std::size_t a, double sb, std::size_t b) {
  if (sa != sb) return sa > sb;
  return a < b;
}

}  // namespace

std::vector<RankedItem> rank_by_scores(std::span<const std::size_t> items,
                                       const Eigen::VectorXd& scores) {
  if (items.empty()) throw std::invalid_argument("rank_by_scores: no candidates");
  if (static_cast<std::size_t>(scores.size()) != items.size()) {
    throw std::invalid_argument("rank_by_scores: one score per candidate");
  }
  std::vector<RankedItem> out;
  out.reserve(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    out.push_back({items[k], scores(static_cast<Eigen::Index>(k))});
  }
  std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
    return ranks_before(a.score, a.item, b.score, b.item);
  });
  return out;
}

std::size_t rank_of(std::span<const std::size_t> items, const Eigen::VectorXd& scores,
                    std::size_t target) {
  const auto it = std::find(items.begin(), items.end(), target);
  if (it == items.end()) throw std::invalid_argument("rank_of: target not among candidates");
  const double st = scores(it - items.begin());
  std::size_t rank = 1;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k] == target) continue;
    if (ranks_before(scores(static_cast<Eigen::Index>(k)), items[k], st, target)) ++rank;
  }
  return rank;
}

std::vector<RankedItem> predict_event(const IntensityModel& model, std::size_t user,
                                      double t_plus,
                                      std::span<const std::size_t> candidates) {
  if (candidates.empty()) throw std::invalid_argument("predict_event: no candidates");
  auto state = model.state_before(user, t_plus);
  return rank_by_scores(candidates, model.raw_scores(state, candidates, t_plus));
}

TimePrediction predict_time(const std::function<double(double)>& intensity,
                            double t_from, const QuadratureConfig& q) {
  if (!std::isfinite(t_from)) throw std::invalid_argument("predict_time: bad t_from");
  if (q.nodes_per_decade == 0) throw std::invalid_argument("predict_time: empty grid");
  const double lambda0 = intensity(t_from);
  if (!(lambda0 >= 0.0)) throw std::invalid_argument("predict_time: negative intensity");
  const double span = q.cap_multiple / std::max(lambda0, q.rate_floor);
  const double ratio = std::pow(10.0, 1.0 / static_cast<double>(q.nodes_per_decade));

  TimePrediction out;
  double prev_off = 0.0;
  double prev_lambda = lambda0;
  double prev_weighted = 0.0;  // (t - t_from) f(t) at the previous node
  double cumulative = 0.0;     // integral of lambda from t_from
  double survival = 1.0;
  double mean_offset = 0.0;
  double off = span * q.first_step_fraction;
  out.nodes = 1;
  while (true) {
    off = std::min(off, span);
    const double lambda = intensity(t_from + off);
    if (!(lambda >= 0.0)) throw std::invalid_argument("predict_time: negative intensity");
    const double h = off - prev_off;
    cumulative += 0.5 * (prev_lambda + lambda) * h;
    survival = std::exp(-cumulative);
    const double weighted = off * lambda * survival;
    mean_offset += 0.5 * (prev_weighted + weighted) * h;
    ++out.nodes;
    if (survival < q.survival_cutoff) break;
    if (off >= span) {
      out.truncated = true;
      break;
    }
    prev_off = off;
    prev_lambda = lambda;
    prev_weighted = weighted;
    off *= ratio;
  }
  out.survival_at_end = survival;
  // Mass not yet absorbed sits at the last node.
  mean_offset += survival * off;
  out.time = t_from + mean_offset;
  return out;
}

TimePrediction predict_time(const IntensityModel& model, std::size_t user,
                            std::size_t item, double t_from, const QuadratureConfig& q) {
  if (item >= model.num_items()) throw std::invalid_argument("predict_time: unknown item");
  auto state = model.state_through(user, t_from);
  std::vector<std::size_t> items(model.num_items());
  std::iota(items.begin(), items.end(), std::size_t{0});
  const auto index = static_cast<Eigen::Index>(item);
  auto intensity = [&](double t) {
    const Eigen::VectorXd logits = model.raw_scores(state, items, t);
    const double peak = logits.maxCoeff();
    return std::exp(logits(index) - peak) / (logits.array() - peak).exp().sum();
  };
  return predict_time(intensity, t_from, q);
}

EvalReport evaluate_rankings(const EventStream& test, const RankScorer& scorer,
                             const EvalOptions& options,
                             const std::function<void(const InteractionEvent&)>& after) {
  EvalReport report;
  report.rmse = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> reciprocal;
  std::map<std::size_t, std::size_t> hits;
  for (const std::size_t k : options.k_list) hits[k] = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& e = test.events[i];
    Support s;
    if (options.candidate_cap == 0) {
      s = Support::user_row(e.user, test.num_items);
    } else {
      s = sampled_support(e.user, e.item, test.num_items, options.candidate_cap - 1,
                          mix_seed(options.seed, 0xe7a1, i));
    }
    const Eigen::VectorXd scores = scorer(e.user, e.timestamp, s.items);
    EventRecord r;
    r.index = i;
    r.user = e.user;
    r.true_item = e.item;
    r.true_time = e.timestamp;
    r.candidates = s.items.size();
    r.rank = rank_of(s.items, scores, e.item);
    r.predicted_time = std::numeric_limits<double>::quiet_NaN();
    reciprocal.push_back(1.0 / static_cast<double>(r.rank));
    for (auto& [k, count] : hits) {
      if (r.rank <= k) ++count;
    }
    report.records.push_back(r);
    if (after) after(e);
  }
  report.n_events = test.size();
  if (report.n_events > 0) {
    report.mrr = pairwise_sum(reciprocal) / static_cast<double>(report.n_events);
  }
  for (const auto& [k, count] : hits) {
    report.recall[k] = report.n_events == 0 ? 0.0
                                            : static_cast<double>(count) /
                                                  static_cast<double>(report.n_events);
  }
  return report;
}

EvalReport evaluate(IntensityModel& model, const EventStream& test,
                    const EvalOptions& options) {
  if (test.num_items > model.num_items() || test.num_users > model.num_users()) {
    throw std::invalid_argument("evaluate: test stream has ids unknown to the model");
  }
  EventStream sized = test;
  sized.num_users = model.num_users();
  sized.num_items = model.num_items();

  std::vector<std::size_t> all_items(model.num_items());
  std::iota(all_items.begin(), all_items.end(), std::size_t{0});
  std::vector<TimePrediction> times(test.size());
  std::vector<double> from(test.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t next = 0;
  auto scorer = [&](std::size_t user, double t, std::span<const std::size_t> items) {
    auto state = model.state_before(user, t);
    if (options.predict_time && !state.history().empty()) {
      const double t_from = state.history().entries.back().time;
      times[next] = predict_time(model, user, test.events[next].item, t_from,
                                 options.quadrature);
      from[next] = t_from;
    }
    return model.raw_scores(state, items, t);
  };
  auto after = [&](const InteractionEvent& e) {
    model.observe(e);
    ++next;
  };
  EvalReport report = evaluate_rankings(sized, scorer, options, after);

  // Timestamps are non-negative, so min-max scaling divides by the horizon.
  const double scale = test.horizon > 0.0 ? test.horizon : 1.0;
  std::vector<double> squared;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (std::isnan(from[i])) continue;
    auto& r = report.records[i];
    r.predicted_time = times[i].time;
    r.truncated = times[i].truncated;
    if (r.truncated) ++report.truncation_warnings;
    const double err = (r.predicted_time - r.true_time) / scale;
    squared.push_back(err * err);
  }
  if (!squared.empty()) {
    report.rmse = std::sqrt(pairwise_sum(squared) / static_cast<double>(squared.size()));
  }
  return report;
}

std::string metrics_json(const EvalReport& report) {
  nlohmann::json j;
  j["mrr"] = report.mrr;
  for (const auto& [k, v] : report.recall) j["recall@" + std::to_string(k)] = v;
  if (std::isnan(report.rmse)) {
    j["rmse"] = nullptr;
  } else {
    j["rmse"] = report.rmse;
  }
  j["n_events"] = report.n_events;
  j["truncation_warnings"] = report.truncation_warnings;
  return j.dump(2) + "\n";
}

void write_audit_csv(const EvalReport& report, std::ostream& out) {
  out << "event_index,user,true_item,rank,predicted_time,true_time\n";
  char buf[64];
  for (const auto& r : report.records) {
    out << r.index << ',' << r.user << ',' << r.true_item << ',' << r.rank << ',';
    if (!std::isnan(r.predicted_time)) {
      std::snprintf(buf, sizeof buf, "%.17g", r.predicted_time);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", r.true_time);
    out << ',' << buf << '\n';
  }
}

}  // namespace dgnpp
