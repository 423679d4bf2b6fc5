#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/autodiff.hpp"
#include "dgnpp/embedding.hpp"

namespace dgnpp {

// One self-attentive block. query/key map [user | item + time] (2D wide)
// to the attention space; value maps item vectors (D) to D.
struct AttentionParams {
  Eigen::MatrixXd query;
  Eigen::MatrixXd key;
  Eigen::MatrixXd value;
};

// Single-step gated recurrent cell:
//   z = sigmoid(W_z x + U_z h + b_z)          (update gate)
//   r = sigmoid(W_r x + U_r h + b_r)          (reset gate)
//   n = tanh(W_n x + r * (U_n h) + b_n)       (candidate)
//   h' = (1 - z) * h + z * n
struct GruCell {
  Eigen::MatrixXd w_update, u_update;
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_update, b_reset, b_cand;
};

struct GruParams {
  GruCell user;
  GruCell item;
};

struct ShiftParams {
  Eigen::MatrixXd user;  // |U| x D
  Eigen::MatrixXd item;  // |V| x D
};

struct HistoryEntry {
  std::size_t item = 0;
  double time = 0.0;
  // 1-based position of the interaction in the user's full history.
  double position = 1.0;
};

// A user's interactions before a query, oldest first.
struct UserHistory {
  std::vector<HistoryEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

struct AttentionTrace {
  Eigen::VectorXd scores;
  Eigen::VectorXd weights;
};

// Attentive interaction of one block against the latest history entry,
// evaluated at time t (t must not precede any history time). Returns
// ReLU(sum_m alpha_m V x_m); the zero vector for an empty history.
Eigen::VectorXd attentive_interaction(const Eigen::VectorXd& user,
                                      const UserHistory& history,
                                      const Eigen::MatrixXd& item_vectors,
                                      const TimeEmbeddingParams& time_params,
                                      const AttentionParams& attn, double t,
                                      AttentionTrace* trace = nullptr);

// Stack of blocks. Lower blocks attend causally at every history position;
// their per-position outputs replace the item vectors of the next block.
// The last block only evaluates the latest position. One block is exactly
// attentive_interaction().
Eigen::VectorXd attend_stack(const Eigen::VectorXd& user,
                             const UserHistory& history,
                             const Eigen::MatrixXd& item_vectors,
                             const TimeEmbeddingParams& time_params,
                             std::span<const AttentionParams> blocks, double t);

Eigen::VectorXd gru_step(const GruCell& cell, const Eigen::VectorXd& state,
                         const Eigen::VectorXd& input);

// (u(t), v(t)) = (g_u(static_user, w_t), g_v(static_item, w_t)).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gru_fuse(
    const GruParams& params, const Eigen::VectorXd& static_user,
    const Eigen::VectorXd& static_item, const Eigen::VectorXd& w_t);

// (1 + (t_plus - t) w) * embedding for the user and item rows.
std::pair<Eigen::VectorXd, Eigen::VectorXd> temporal_shift(
    const ShiftParams& params, const Eigen::VectorXd& user_emb_t,
    const Eigen::VectorXd& item_emb_t, std::size_t user_id,
    std::size_t item_id, double t, double t_plus);

// Shape-consistent zero-initialised parameter sets.
AttentionParams zero_attention(Eigen::Index dim, Eigen::Index attn_dim);
GruCell zero_gru_cell(Eigen::Index dim);

// ---------------------------------------------------------------------------
// Tape-recorded forms used for training. Gradient pointers may be null.

struct AttentionDropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;

  bool active() const { return rng != nullptr && rate > 0.0; }
};

ad::Var attend_stack(ad::Tape& tape, ad::Var user, const UserHistory& history,
                     std::span<const ad::Var> item_vars,
                     const Eigen::VectorXd& omega, Eigen::VectorXd* grad_omega,
                     std::span<const AttentionParams> blocks,
                     std::span<AttentionParams> grad_blocks, double t,
                     AttentionDropout dropout = {});

ad::Var gru_step(ad::Tape& tape, const GruCell& cell, GruCell* grad,
                 ad::Var state, ad::Var input);

}  // namespace dgnpp
