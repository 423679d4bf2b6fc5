#include "dgnpp/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dgnpp {

using Eigen::Index;

InteractionHistory::InteractionHistory(std::size_t num_users)
    : items_(num_users), times_(num_users) {}

InteractionHistory::InteractionHistory(const EventStream& stream)
    : InteractionHistory(stream.num_users) {
  for (const auto& e : stream.events) append(e);
}

void InteractionHistory::append(const InteractionEvent& e) {
  if (e.user >= items_.size()) {
    items_.resize(e.user + 1);
    times_.resize(e.user + 1);
  }
  auto& times = times_[e.user];
  if (!times.empty() && e.timestamp < times.back()) {
    throw std::invalid_argument("InteractionHistory: events must arrive in time order");
  }
  items_[e.user].push_back(e.item);
  times.push_back(e.timestamp);
}

UserHistory InteractionHistory::slice(std::size_t user, std::size_t count,
                                      std::size_t cap) const {
  UserHistory h;
  const std::size_t first = count > cap ? count - cap : 0;
  h.entries.reserve(count - first);
  for (std::size_t i = first; i < count; ++i) {
    h.entries.push_back({items_[user][i], times_[user][i], static_cast<double>(i + 1)});
  }
  return h;
}

UserHistory InteractionHistory::before(std::size_t user, double t,
                                       std::size_t cap) const {
  if (user >= times_.size()) return {};
  const auto& times = times_[user];
  const auto count = static_cast<std::size_t>(
      std::lower_bound(times.begin(), times.end(), t) - times.begin());
  return slice(user, count, cap);
}

UserHistory InteractionHistory::through(std::size_t user, double t,
                                        std::size_t cap) const {
  if (user >= times_.size()) return {};
  const auto& times = times_[user];
  const auto count = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.end(), t) - times.begin());
  return slice(user, count, cap);
}

std::optional<double> InteractionHistory::last_time_through(std::size_t user,
                                                            double t) const {
  if (user >= times_.size()) return std::nullopt;
  const auto& times = times_[user];
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return std::nullopt;
  return *std::prev(it);
}

Support Support::all_pairs(std::size_t num_users, std::size_t num_items) {
  Support s;
  for (std::size_t u = 0; u < num_users; ++u) s.users.push_back(u);
  for (std::size_t v = 0; v < num_items; ++v) s.items.push_back(v);
  return s;
}

Support Support::user_row(std::size_t user, std::size_t num_items) {
  Support s;
  s.users.push_back(user);
  for (std::size_t v = 0; v < num_items; ++v) s.items.push_back(v);
  return s;
}

// ---------------------------------------------------------------------------

IntensityModel::IntensityModel(const ModelParams& params,
                               const EventStream& history_stream,
                               ModelOptions options)
    : IntensityModel(
          params,
          std::make_shared<const std::vector<SnapshotGraph>>(
              build_snapshots(history_stream, options.num_snapshots)),
          history_stream.horizon / static_cast<double>(options.num_snapshots),
          std::make_shared<InteractionHistory>(history_stream), options) {}

IntensityModel::IntensityModel(
    const ModelParams& params,
    std::shared_ptr<const std::vector<SnapshotGraph>> snapshots,
    double snapshot_duration, std::shared_ptr<InteractionHistory> history,
    ModelOptions options)
    : params_(&params),
      snapshots_(std::move(snapshots)),
      snapshot_duration_(snapshot_duration),
      history_(std::move(history)),
      options_(options) {
  if (!snapshots_ || snapshots_->empty()) {
    throw std::invalid_argument("IntensityModel: need at least one snapshot");
  }
  if (!(snapshot_duration_ > 0.0)) {
    // An empty history stream has no time scale; any positive d maps every
    // query to the last (empty) snapshot.
    snapshot_duration_ = 1.0;
  }
  const auto& g = snapshots_->front();
  if (g.user_neighbors.size() != params.nodes.num_users ||
      g.item_neighbors.size() != params.nodes.num_items) {
    throw std::invalid_argument(
        "IntensityModel: snapshot vocabulary does not match the parameters");
  }
  static_cache_.resize(snapshots_->size());
}

void IntensityModel::observe(const InteractionEvent& e) {
  check_ids(e.user, e.item);
  history_->append(e);
}

const StaticEmbeddings& IntensityModel::static_embeddings(std::size_t snapshot) const {
  std::lock_guard lock(cache_mutex_);
  auto& slot = static_cache_.at(snapshot);
  if (!slot) {
    slot = std::make_shared<const StaticEmbeddings>(
        aggregate((*snapshots_)[snapshot], params_->nodes.users(),
                  params_->nodes.items(), options_.effective_layers()));
  }
  return *slot;
}

void IntensityModel::check_ids(std::size_t user, std::size_t item) const {
  if (user >= num_users() || item >= num_items()) {
    throw std::invalid_argument("IntensityModel: unknown user or item id");
  }
}

IntensityModel::UserState IntensityModel::state_before(std::size_t user,
                                                       double t) const {
  if (user >= num_users()) throw std::invalid_argument("IntensityModel: unknown user");
  UserState s;
  s.user_ = user;
  s.history_ = history_->before(user, t, options_.history_cap);
  s.anchor_ = s.history_.empty() ? t : s.history_.entries.back().time;
  s.per_snapshot_.resize(snapshots_->size());
  return s;
}

IntensityModel::UserState IntensityModel::state_through(std::size_t user,
                                                        double t_from) const {
  if (user >= num_users()) throw std::invalid_argument("IntensityModel: unknown user");
  UserState s;
  s.user_ = user;
  s.history_ = history_->through(user, t_from, options_.history_cap);
  s.anchor_ = s.history_.empty() ? t_from : s.history_.entries.back().time;
  s.per_snapshot_.resize(snapshots_->size());
  return s;
}

IntensityModel::UserState::PerSnapshot& IntensityModel::prepare(UserState& state,
                                                                std::size_t m) const {
  auto& slot = state.per_snapshot_[m];
  if (slot) return *slot;
  const auto& emb = static_embeddings(m);
  UserState::PerSnapshot ps;
  ps.static_user = emb.user_static.row(static_cast<Index>(state.user_)).transpose();
  ps.item_dynamic.resize(num_items());
  if (!options_.ablate_sal) {
    const auto& p = *params_;
    ps.w = attend_stack(ps.static_user, state.history_, emb.item_static, p.time,
                        p.attention, state.anchor_);
    ps.user_dynamic = gru_step(p.gru.user, ps.static_user, ps.w);
  }
  slot = std::move(ps);
  return *slot;
}

Eigen::VectorXd IntensityModel::raw_scores(UserState& state,
                                           std::span<const std::size_t> items,
                                           double t) const {
  if (t < state.anchor_) {
    throw std::invalid_argument("raw_scores: query precedes the state's anchor");
  }
  const std::size_t m =
      snapshot_for_time(t, snapshot_duration_, snapshots_->size());
  auto& ps = prepare(state, m);
  const auto& emb = static_embeddings(m);
  const auto& p = *params_;
  const double dt = t - state.anchor_;

  Eigen::VectorXd user_shifted;
  if (!options_.ablate_sal) {
    user_shifted = (1.0 + dt * p.shift.user.row(static_cast<Index>(state.user_))
                                   .transpose()
                                   .array()) *
                   ps.user_dynamic.array();
  }
  Eigen::VectorXd out(static_cast<Index>(items.size()));
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::size_t v = items[k];
    if (v >= num_items()) throw std::invalid_argument("raw_scores: unknown item");
    const auto vi = static_cast<Index>(v);
    const double static_term = ps.static_user.dot(emb.item_static.row(vi).transpose());
    if (options_.ablate_sal) {
      out(static_cast<Index>(k)) = 2.0 * static_term;
      continue;
    }
    auto& dyn = ps.item_dynamic[v];
    if (!dyn) dyn = gru_step(p.gru.item, emb.item_static.row(vi).transpose(), ps.w);
    const Eigen::VectorXd item_shifted =
        (1.0 + dt * p.shift.item.row(vi).transpose().array()) * dyn->array();
    out(static_cast<Index>(k)) = static_term + user_shifted.dot(item_shifted);
  }
  return out;
}

double IntensityModel::raw_intensity(std::size_t user, std::size_t item,
                                     double t) const {
  check_ids(user, item);
  if (t < 0.0) throw std::invalid_argument("raw_intensity: negative time");
  UserState s = state_before(user, t);
  const std::size_t items[] = {item};
  return raw_scores(s, items, t)(0);
}

Eigen::VectorXd IntensityModel::support_logits(const Support& support,
                                               double t) const {
  if (support.size() == 0) throw std::invalid_argument("empty support");
  Eigen::VectorXd logits(static_cast<Index>(support.size()));
  Index k = 0;
  for (const std::size_t u : support.users) {
    UserState s = state_before(u, t);
    logits.segment(k, static_cast<Index>(support.items.size())) =
        raw_scores(s, support.items, t);
    k += static_cast<Index>(support.items.size());
  }
  return logits;
}

double IntensityModel::log_normalized_intensity(std::size_t user, std::size_t item,
                                                double t, const Support& support) const {
  check_ids(user, item);
  const auto ui = std::find(support.users.begin(), support.users.end(), user);
  const auto vi = std::find(support.items.begin(), support.items.end(), item);
  if (ui == support.users.end() || vi == support.items.end()) {
    throw std::invalid_argument("normalized_intensity: pair outside the support");
  }
  const Eigen::VectorXd logits = support_logits(support, t);
  const Index index = (ui - support.users.begin()) *
                          static_cast<Index>(support.items.size()) +
                      (vi - support.items.begin());
  const double peak = logits.maxCoeff();
  return logits(index) - peak - std::log((logits.array() - peak).exp().sum());
}

double IntensityModel::normalized_intensity(std::size_t user, std::size_t item,
                                            double t, const Support& support) const {
  return std::exp(log_normalized_intensity(user, item, t, support));
}

double IntensityModel::total_intensity(double t, const Support& support) const {
  const Eigen::VectorXd logits = support_logits(support, t);
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).sum();
}

}  // namespace dgnpp
