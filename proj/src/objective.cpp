#include "dgnpp/objective.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

#include "dgnpp/autodiff.hpp"
#include "dgnpp/dynamics.hpp"

namespace dgnpp {

using Eigen::Index;

TrainingContext::TrainingContext(const EventStream& s, ModelOptions opts)
    : stream(&s),
      options(opts),
      snapshots(std::make_shared<const std::vector<SnapshotGraph>>(
          build_snapshots(s, opts.num_snapshots))),
      snapshot_duration(s.horizon / static_cast<double>(opts.num_snapshots)),
      history(std::make_shared<InteractionHistory>(s)) {
  if (!(snapshot_duration > 0.0)) snapshot_duration = 1.0;
}

std::size_t TrainingContext::snapshot_of(double t) const {
  return snapshot_for_time(t, snapshot_duration, snapshots->size());
}

IntensityModel TrainingContext::model(const ModelParams& params) const {
  return IntensityModel(params, snapshots, snapshot_duration, history, options);
}

Support sampled_support(std::size_t user, std::size_t true_item,
                        std::size_t num_items, std::size_t negatives,
                        std::uint64_t seed) {
  if (true_item >= num_items) throw std::invalid_argument("sampled_support: unknown item");
  if (negatives == 0 || negatives + 1 >= num_items) {
    return Support::user_row(user, num_items);
  }
  Support s;
  s.users.push_back(user);
  s.items.push_back(true_item);
  // Partial Fisher-Yates over the other num_items - 1 ids, kept sparse.
  std::mt19937_64 rng(seed);
  std::map<std::size_t, std::size_t> swapped;
  const std::size_t pool = num_items - 1;
  auto at = [&swapped](std::size_t i) {
    const auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::size_t k = 0; k < negatives; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool - 1);
    const std::size_t j = pick(rng);
    const std::size_t a = at(k);
    const std::size_t b = at(j);
    swapped[k] = b;
    swapped[j] = a;
    s.items.push_back(b < true_item ? b : b + 1);
  }
  return s;
}

Support event_support(const TrainingContext& ctx, const ObjectiveConfig& cfg,
                      std::size_t index) {
  const auto& events = ctx.stream->events;
  if (events.empty()) return Support::all_pairs(ctx.stream->num_users, ctx.stream->num_items);
  const auto& e = events[std::min(index, events.size() - 1)];
  if (cfg.all_pairs) return Support::all_pairs(ctx.stream->num_users, ctx.stream->num_items);
  return sampled_support(e.user, e.item, ctx.stream->num_items, cfg.negatives,
                         mix_seed(cfg.seed, cfg.salt, std::min(index, events.size() - 1)));
}

namespace {

constexpr std::uint64_t kDropoutStream = 0xd1b54a32d192ed03ULL;

struct StaticGrad {
  Eigen::MatrixXd user;
  Eigen::MatrixXd item;
};

class StaticTable {
 public:
  StaticTable(const TrainingContext& ctx, const ModelParams& params)
      : ctx_(ctx), params_(params), cache_(ctx.snapshots->size()) {}

  // Not thread-safe; filled before workers start.
  const StaticEmbeddings& get(std::size_t m) {
    auto& slot = cache_[m];
    if (!slot) {
      slot = aggregate((*ctx_.snapshots)[m], params_.nodes.users(),
                       params_.nodes.items(), ctx_.options.effective_layers());
    }
    return *slot;
  }
  const StaticEmbeddings& at(std::size_t m) const { return *cache_[m]; }

 private:
  const TrainingContext& ctx_;
  const ModelParams& params_;
  std::vector<std::optional<StaticEmbeddings>> cache_;
};

struct EventTerm {
  double log_intensity = 0.0;
  bool clamped = false;
};

// log of the normalized intensity of event i, with its gradient (scaled by
// -1) pushed into grads and the per-snapshot static gradients.
EventTerm event_term(const TrainingContext& ctx, const ModelParams& params,
                     const StaticTable& statics, const ObjectiveConfig& cfg,
                     std::size_t i, ModelParams* grads,
                     std::map<std::size_t, StaticGrad>* static_grads) {
  const auto& e = ctx.stream->events[i];
  const std::size_t m = ctx.snapshot_of(e.timestamp);
  const StaticEmbeddings& emb = statics.at(m);
  const Support support = event_support(ctx, cfg, i);
  const auto& opts = ctx.options;

  StaticGrad* sg = nullptr;
  if (grads) {
    auto [it, fresh] = static_grads->try_emplace(m);
    if (fresh) {
      it->second.user = Eigen::MatrixXd::Zero(emb.user_static.rows(), emb.user_static.cols());
      it->second.item = Eigen::MatrixXd::Zero(emb.item_static.rows(), emb.item_static.cols());
    }
    sg = &it->second;
  }
  auto user_sink = [&](std::size_t u) {
    return sg ? ad::GradSink::row(sg->user, static_cast<Index>(u)) : ad::GradSink{};
  };
  auto item_sink = [&](std::size_t v) {
    return sg ? ad::GradSink::row(sg->item, static_cast<Index>(v)) : ad::GradSink{};
  };

  ad::Tape tape;
  std::mt19937_64 drop_rng(mix_seed(cfg.seed ^ kDropoutStream, cfg.salt, i));
  AttentionDropout dropout{cfg.dropout, cfg.dropout > 0.0 ? &drop_rng : nullptr};

  std::vector<ad::Var> logits;
  logits.reserve(support.size());
  Index true_index = -1;
  std::map<std::size_t, ad::Var> item_leaves;
  auto item_leaf = [&](std::size_t v) {
    auto it = item_leaves.find(v);
    if (it != item_leaves.end()) return it->second;
    const ad::Var leaf = tape.leaf(emb.item_static.row(static_cast<Index>(v)).transpose(),
                                   item_sink(v));
    item_leaves.emplace(v, leaf);
    return leaf;
  };

  for (const std::size_t u : support.users) {
    const ad::Var su = tape.leaf(emb.user_static.row(static_cast<Index>(u)).transpose(),
                                 user_sink(u));
    const UserHistory hist = ctx.history->before(u, e.timestamp, opts.history_cap);
    const double anchor = hist.empty() ? e.timestamp : hist.entries.back().time;
    const double dt = e.timestamp - anchor;

    ad::Var w{}, us{};
    if (!opts.ablate_sal) {
      std::vector<ad::Var> hist_vars;
      hist_vars.reserve(hist.size());
      for (const auto& h : hist.entries) hist_vars.push_back(item_leaf(h.item));
      std::span<AttentionParams> grad_blocks;
      if (grads) grad_blocks = grads->attention;
      w = attend_stack(tape, su, hist, hist_vars, params.time.omega,
                       grads ? &grads->time.omega : nullptr, params.attention,
                       grad_blocks, anchor, dropout);
      const ad::Var u0 = gru_step(tape, params.gru.user, grads ? &grads->gru.user : nullptr,
                                  su, w);
      us = tape.shift(u0, params.shift.user, grads ? &grads->shift.user : nullptr,
                      static_cast<Index>(u), dt);
    }
    for (const std::size_t v : support.items) {
      if (u == e.user && v == e.item) true_index = static_cast<Index>(logits.size());
      const ad::Var sv = item_leaf(v);
      const ad::Var static_term = tape.dot(su, sv);
      if (opts.ablate_sal) {
        logits.push_back(tape.scale(static_term, 2.0));
        continue;
      }
      const ad::Var v0 = gru_step(tape, params.gru.item,
                                  grads ? &grads->gru.item : nullptr, sv, w);
      const ad::Var vs = tape.shift(v0, params.shift.item,
                                    grads ? &grads->shift.item : nullptr,
                                    static_cast<Index>(v), dt);
      logits.push_back(tape.add(static_term, tape.dot(us, vs)));
    }
  }
  if (true_index < 0) throw std::logic_error("event_support: observed pair missing");

  const ad::Var lp = tape.log_softmax_at(tape.stack(logits), true_index);
  EventTerm out;
  out.log_intensity = tape.scalar(lp);
  if (!(out.log_intensity >= kLogIntensityFloor)) {
    out.clamped = true;
    if (!std::isnan(out.log_intensity)) out.log_intensity = kLogIntensityFloor;
  } else if (grads) {
    tape.backward(lp, -1.0);
  }
  return out;
}

}  // namespace

ObjectiveResult window_objective(const TrainingContext& ctx,
                                 const ModelParams& params,
                                 const ObjectiveConfig& cfg, std::size_t begin,
                                 std::size_t end, ModelParams* grads) {
  const auto& events = ctx.stream->events;
  if (begin > end || end > events.size()) {
    throw std::invalid_argument("window_objective: bad window");
  }
  if (params.nodes.num_users != ctx.stream->num_users ||
      params.nodes.num_items != ctx.stream->num_items) {
    throw std::invalid_argument("window_objective: parameters do not match the stream");
  }

  StaticTable statics(ctx, params);
  for (std::size_t i = begin; i < end; ++i) statics.get(ctx.snapshot_of(events[i].timestamp));

  const std::size_t count = end - begin;
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, count));
  std::vector<EventTerm> terms(count);
  std::vector<ModelParams> worker_grads;
  if (grads) worker_grads.assign(workers, zeros_like(params));

  auto run = [&](std::size_t w) {
    const std::size_t lo = begin + count * w / workers;
    const std::size_t hi = begin + count * (w + 1) / workers;
    std::map<std::size_t, StaticGrad> static_grads;
    ModelParams* g = grads ? &worker_grads[w] : nullptr;
    for (std::size_t i = lo; i < hi; ++i) {
      terms[i - begin] = event_term(ctx, params, statics, cfg, i, g, &static_grads);
    }
    if (!g) return;
    for (const auto& [m, sg] : static_grads) {
      const StaticEmbeddings back = aggregate((*ctx.snapshots)[m], sg.user, sg.item,
                                              ctx.options.effective_layers());
      g->nodes.weights.topRows(static_cast<Index>(ctx.stream->num_users)) += back.user_static;
      g->nodes.weights.bottomRows(static_cast<Index>(ctx.stream->num_items)) +=
          back.item_static;
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  if (grads) {
    for (const auto& g : worker_grads) accumulate(*grads, g);
  }

  ObjectiveResult r;
  std::vector<double> logs;
  logs.reserve(count);
  for (const auto& t : terms) {
    logs.push_back(t.log_intensity);
    if (t.clamped) ++r.clamped_events;
  }
  r.log_sum_term = pairwise_sum(logs);

  const IntensityModel model = ctx.model(params);
  const ModelPointProcess process(
      model, [&ctx, &cfg](std::size_t k) { return event_support(ctx, cfg, k); });
  r.integral_term = integral_term(process, *ctx.stream, begin, end,
                                  cfg.mc_samples_per_gap,
                                  mix_seed(cfg.seed, cfg.salt, 0x1f))
                        .integral_term;
  r.log_likelihood = r.log_sum_term - r.integral_term;
  return r;
}

ObjectiveResult window_objective_plain(const TrainingContext& ctx,
                                       const ModelParams& params,
                                       const ObjectiveConfig& cfg,
                                       std::size_t begin, std::size_t end) {
  const IntensityModel model = ctx.model(params);
  const ModelPointProcess process(
      model, [&ctx, &cfg](std::size_t k) { return event_support(ctx, cfg, k); });
  const LikelihoodEstimate est =
      window_log_likelihood(process, *ctx.stream, begin, end, cfg.mc_samples_per_gap,
                            mix_seed(cfg.seed, cfg.salt, 0x1f));
  ObjectiveResult r;
  r.log_sum_term = est.log_sum_term;
  r.integral_term = est.integral_term;
  r.log_likelihood = est.total;
  return r;
}

}  // namespace dgnpp
