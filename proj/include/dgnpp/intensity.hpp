#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/dynamics.hpp"
#include "dgnpp/events.hpp"
#include "dgnpp/model_params.hpp"
#include "dgnpp/snapshot.hpp"

namespace dgnpp {

struct ModelOptions {
  std::size_t num_snapshots = 32;
  std::size_t layers = 4;
  std::size_t history_cap = 64;
  // Static embeddings become the raw layer-0 table.
  bool ablate_nal = false;
  // Dynamic embeddings become the static ones.
  bool ablate_sal = false;

  std::size_t effective_layers() const { return ablate_nal ? 0 : layers; }
};

// Per-user interaction lists, appendable in time order.
class InteractionHistory {
 public:
  explicit InteractionHistory(std::size_t num_users = 0);
  explicit InteractionHistory(const EventStream& stream);

  void append(const InteractionEvent& e);
  // Interactions strictly before t (at most the last `cap`).
  UserHistory before(std::size_t user, double t, std::size_t cap) const;
  // Interactions at or before t (at most the last `cap`).
  UserHistory through(std::size_t user, double t, std::size_t cap) const;
  std::optional<double> last_time_through(std::size_t user, double t) const;
  std::size_t num_users() const { return items_.size(); }

 private:
  UserHistory slice(std::size_t user, std::size_t count, std::size_t cap) const;

  std::vector<std::vector<std::size_t>> items_;
  std::vector<std::vector<double>> times_;
};

// Softmax support: every (user, item) pair of users x items.
struct Support {
  std::vector<std::size_t> users;
  std::vector<std::size_t> items;

  std::size_t size() const { return users.size() * items.size(); }
  static Support all_pairs(std::size_t num_users, std::size_t num_items);
  static Support user_row(std::size_t user, std::size_t num_items);
};

// Evaluates lambda'_{(u,v)}(t) = <u^m, v^m> + <u(t), v(t)> with m the
// snapshot index of t, and its softmax normalisation over a support.
class IntensityModel {
 public:
  // Snapshots come from `history_stream` (d = horizon / N); its events also
  // seed the per-user histories.
  IntensityModel(const ModelParams& params, const EventStream& history_stream,
                 ModelOptions options);
  IntensityModel(const ModelParams& params,
                 std::shared_ptr<const std::vector<SnapshotGraph>> snapshots,
                 double snapshot_duration,
                 std::shared_ptr<InteractionHistory> history,
                 ModelOptions options);
  // The model keeps a pointer to the parameters.
  IntensityModel(ModelParams&&, const EventStream&, ModelOptions) = delete;
  IntensityModel(ModelParams&&, std::shared_ptr<const std::vector<SnapshotGraph>>, double,
                 std::shared_ptr<InteractionHistory>, ModelOptions) = delete;

  // Appends an event to the histories (evaluation advances through a test
  // stream this way). Snapshots are unaffected.
  void observe(const InteractionEvent& e);

  const ModelParams& params() const { return *params_; }
  const ModelOptions& options() const { return options_; }
  double snapshot_duration() const { return snapshot_duration_; }
  std::size_t num_users() const { return params_->nodes.num_users; }
  std::size_t num_items() const { return params_->nodes.num_items; }
  const InteractionHistory& history() const { return *history_; }
  const StaticEmbeddings& static_embeddings(std::size_t snapshot) const;

  // A user's dynamic state for queries at times >= anchor, with the
  // history frozen. Caches per-snapshot attention and GRU results.
  class UserState {
   public:
    std::size_t user() const { return user_; }
    double anchor() const { return anchor_; }
    const UserHistory& history() const { return history_; }

   private:
    friend class IntensityModel;
    struct PerSnapshot {
      Eigen::VectorXd static_user;
      Eigen::VectorXd w;
      Eigen::VectorXd user_dynamic;  // before the temporal shift
      std::vector<std::optional<Eigen::VectorXd>> item_dynamic;
    };
    std::size_t user_ = 0;
    double anchor_ = 0.0;
    UserHistory history_;
    std::vector<std::optional<PerSnapshot>> per_snapshot_;
  };

  // History strictly before t; anchor is the latest history time (t when
  // the history is empty).
  UserState state_before(std::size_t user, double t) const;
  // History at or before t_from; used to extrapolate past t_from.
  UserState state_through(std::size_t user, double t_from) const;

  // lambda' for each item, for queries at t >= state.anchor().
  Eigen::VectorXd raw_scores(UserState& state, std::span<const std::size_t> items,
                             double t) const;

  double raw_intensity(std::size_t user, std::size_t item, double t) const;
  double normalized_intensity(std::size_t user, std::size_t item, double t,
                              const Support& support) const;
  double log_normalized_intensity(std::size_t user, std::size_t item, double t,
                                  const Support& support) const;
  // Sum of normalized intensities over the support.
  double total_intensity(double t, const Support& support) const;

 private:
  void check_ids(std::size_t user, std::size_t item) const;
  UserState::PerSnapshot& prepare(UserState& state, std::size_t m) const;
  Eigen::VectorXd support_logits(const Support& support, double t) const;

  const ModelParams* params_;
  std::shared_ptr<const std::vector<SnapshotGraph>> snapshots_;
  double snapshot_duration_ = 1.0;
  std::shared_ptr<InteractionHistory> history_;
  ModelOptions options_;

  mutable std::mutex cache_mutex_;
  mutable std::vector<std::shared_ptr<const StaticEmbeddings>> static_cache_;
};

}  // namespace dgnpp
