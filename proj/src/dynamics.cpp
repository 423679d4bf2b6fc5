#include "dgnpp/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dgnpp {
namespace {

using Eigen::Index;
using Eigen::VectorXd;

void check_history(const UserHistory& history, double t) {
  double previous = -std::numeric_limits<double>::infinity();
  for (const auto& e : history.entries) {
    if (e.time < previous) {
      throw std::invalid_argument("history must be in ascending time order");
    }
    if (e.time > t) {
      throw std::invalid_argument("history entry lies after the query time");
    }
    previous = e.time;
  }
}

VectorXd concat(const VectorXd& a, const VectorXd& b) {
  VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

VectorXd sigmoid(const VectorXd& x) { return 1.0 / (1.0 + (-x.array()).exp()); }

VectorXd softmax(const VectorXd& z) {
  VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

// One block over positions [first_out, L). Returns the outputs per position.
std::vector<VectorXd> run_block(const VectorXd& user,
                                const std::vector<VectorXd>& items,
                                const std::vector<VectorXd>& times,
                                const AttentionParams& attn,
                                std::size_t first_out,
                                AttentionTrace* trace) {
  const std::size_t n = items.size();
  std::vector<VectorXd> keys(n), values(n), inputs(n);
  for (std::size_t m = 0; m < n; ++m) {
    inputs[m] = concat(user, items[m] + times[m]);
    keys[m] = attn.key * inputs[m];
    values[m] = attn.value * items[m];
  }
  std::vector<VectorXd> out;
  for (std::size_t j = first_out; j < n; ++j) {
    const VectorXd q = attn.query * inputs[j];
    VectorXd scores(static_cast<Index>(j + 1));
    for (std::size_t m = 0; m <= j; ++m) scores(static_cast<Index>(m)) = q.dot(keys[m]);
    const VectorXd alpha = softmax(scores);
    VectorXd mixed = VectorXd::Zero(attn.value.rows());
    for (std::size_t m = 0; m <= j; ++m) mixed += alpha(static_cast<Index>(m)) * values[m];
    out.push_back(mixed.cwiseMax(0.0));
    if (trace && j + 1 == n) {
      trace->scores = scores;
      trace->weights = alpha;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd attentive_interaction(const Eigen::VectorXd& user,
                                      const UserHistory& history,
                                      const Eigen::MatrixXd& item_vectors,
                                      const TimeEmbeddingParams& time_params,
                                      const AttentionParams& attn, double t,
                                      AttentionTrace* trace) {
  check_history(history, t);
  if (history.empty()) return VectorXd::Zero(attn.value.rows());
  std::vector<VectorXd> items, times;
  for (const auto& e : history.entries) {
    items.push_back(item_vectors.row(static_cast<Index>(e.item)).transpose());
    times.push_back(time_embedding(time_params, t, e.time, e.position));
  }
  return run_block(user, items, times, attn, items.size() - 1, trace).back();
}

Eigen::VectorXd attend_stack(const Eigen::VectorXd& user,
                             const UserHistory& history,
                             const Eigen::MatrixXd& item_vectors,
                             const TimeEmbeddingParams& time_params,
                             std::span<const AttentionParams> blocks, double t) {
  check_history(history, t);
  if (blocks.empty()) throw std::invalid_argument("attend_stack: no blocks");
  if (history.empty()) return VectorXd::Zero(blocks.back().value.rows());
  std::vector<VectorXd> items, times;
  for (const auto& e : history.entries) {
    items.push_back(item_vectors.row(static_cast<Index>(e.item)).transpose());
    times.push_back(time_embedding(time_params, t, e.time, e.position));
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const bool last = k + 1 == blocks.size();
    items = run_block(user, items, times, blocks[k], last ? items.size() - 1 : 0,
                      nullptr);
  }
  return items.back();
}

Eigen::VectorXd gru_step(const GruCell& c, const Eigen::VectorXd& h,
                         const Eigen::VectorXd& x) {
  if (h.size() != c.u_update.cols() || x.size() != c.w_update.cols()) {
    throw std::invalid_argument("gru_step: width mismatch");
  }
  const VectorXd z = sigmoid(c.w_update * x + c.u_update * h + c.b_update);
  const VectorXd r = sigmoid(c.w_reset * x + c.u_reset * h + c.b_reset);
  const VectorXd n =
      (c.w_cand * x + r.cwiseProduct(c.u_cand * h) + c.b_cand).array().tanh();
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(n);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gru_fuse(
    const GruParams& params, const Eigen::VectorXd& static_user,
    const Eigen::VectorXd& static_item, const Eigen::VectorXd& w_t) {
  return {gru_step(params.user, static_user, w_t),
          gru_step(params.item, static_item, w_t)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> temporal_shift(
    const ShiftParams& params, const Eigen::VectorXd& user_emb_t,
    const Eigen::VectorXd& item_emb_t, std::size_t user_id,
    std::size_t item_id, double t, double t_plus) {
  if (t_plus < t) {
    throw std::invalid_argument("temporal_shift: t_plus must not precede t");
  }
  if (user_id >= static_cast<std::size_t>(params.user.rows()) ||
      item_id >= static_cast<std::size_t>(params.item.rows())) {
    throw std::invalid_argument("temporal_shift: unknown id");
  }
  const double dt = t_plus - t;
  const auto ui = static_cast<Index>(user_id);
  const auto vi = static_cast<Index>(item_id);
  VectorXd u = (1.0 + dt * params.user.row(ui).transpose().array()) * user_emb_t.array();
  VectorXd v = (1.0 + dt * params.item.row(vi).transpose().array()) * item_emb_t.array();
  return {std::move(u), std::move(v)};
}

AttentionParams zero_attention(Eigen::Index dim, Eigen::Index attn_dim) {
  return {Eigen::MatrixXd::Zero(attn_dim, 2 * dim),
          Eigen::MatrixXd::Zero(attn_dim, 2 * dim),
          Eigen::MatrixXd::Zero(dim, dim)};
}

GruCell zero_gru_cell(Eigen::Index dim) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  const VectorXd b = VectorXd::Zero(dim);
  return {m, m, m, m, m, m, b, b, b};
}

// ---------------------------------------------------------------------------

ad::Var attend_stack(ad::Tape& tape, ad::Var user, const UserHistory& history,
                     std::span<const ad::Var> item_vars,
                     const Eigen::VectorXd& omega, Eigen::VectorXd* grad_omega,
                     std::span<const AttentionParams> blocks,
                     std::span<AttentionParams> grad_blocks, double t,
                     AttentionDropout dropout) {
  check_history(history, t);
  if (blocks.empty()) throw std::invalid_argument("attend_stack: no blocks");
  if (item_vars.size() != history.size()) {
    throw std::invalid_argument("attend_stack: one item var per history entry");
  }
  const bool with_grad = !grad_blocks.empty();
  if (history.empty()) {
    return tape.constant(VectorXd::Zero(blocks.back().value.rows()));
  }

  const std::size_t n = history.size();
  std::vector<ad::Var> times(n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto& e = history.entries[m];
    times[m] = tape.time_embedding(omega, grad_omega, t - e.time, e.position);
  }
  std::vector<ad::Var> items(item_vars.begin(), item_vars.end());
  std::bernoulli_distribution keep(1.0 - dropout.rate);

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& attn = blocks[k];
    AttentionParams* grad = with_grad ? &grad_blocks[k] : nullptr;
    const bool last = k + 1 == blocks.size();
    std::vector<ad::Var> inputs(n), keys(n), values(n);
    for (std::size_t m = 0; m < n; ++m) {
      inputs[m] = tape.concat(user, tape.add(items[m], times[m]));
      keys[m] = tape.matvec(attn.key, grad ? &grad->key : nullptr, inputs[m]);
      values[m] = tape.matvec(attn.value, grad ? &grad->value : nullptr, items[m]);
    }
    std::vector<ad::Var> out;
    for (std::size_t j = last ? n - 1 : 0; j < n; ++j) {
      const ad::Var q = tape.matvec(attn.query, grad ? &grad->query : nullptr, inputs[j]);
      std::vector<ad::Var> scores(j + 1);
      for (std::size_t m = 0; m <= j; ++m) scores[m] = tape.dot(q, keys[m]);
      ad::Var alpha = tape.softmax(tape.stack(scores));
      if (dropout.active()) {
        VectorXd mask(static_cast<Index>(j + 1));
        for (Index m = 0; m < mask.size(); ++m) {
          mask(m) = keep(*dropout.rng) ? 1.0 / (1.0 - dropout.rate) : 0.0;
        }
        alpha = tape.mask(alpha, std::move(mask));
      }
      out.push_back(tape.relu(tape.weighted_sum(
          alpha, std::span<const ad::Var>(values.data(), j + 1))));
    }
    items = std::move(out);
  }
  return items.back();
}

ad::Var gru_step(ad::Tape& tape, const GruCell& c, GruCell* g, ad::Var h,
                 ad::Var x) {
  auto gate = [&](const Eigen::MatrixXd& w, Eigen::MatrixXd* gw,
                  const Eigen::MatrixXd& u, Eigen::MatrixXd* gu,
                  const VectorXd& b, VectorXd* gb) {
    return tape.add_bias(tape.add(tape.matvec(w, gw, x), tape.matvec(u, gu, h)), b, gb);
  };
  const ad::Var z = tape.sigmoid(gate(c.w_update, g ? &g->w_update : nullptr,
                                      c.u_update, g ? &g->u_update : nullptr,
                                      c.b_update, g ? &g->b_update : nullptr));
  const ad::Var r = tape.sigmoid(gate(c.w_reset, g ? &g->w_reset : nullptr,
                                      c.u_reset, g ? &g->u_reset : nullptr,
                                      c.b_reset, g ? &g->b_reset : nullptr));
  const ad::Var cand_pre = tape.add_bias(
      tape.add(tape.matvec(c.w_cand, g ? &g->w_cand : nullptr, x),
               tape.mul(r, tape.matvec(c.u_cand, g ? &g->u_cand : nullptr, h))),
      c.b_cand, g ? &g->b_cand : nullptr);
  const ad::Var n = tape.tanh(cand_pre);
  return tape.add(tape.mul(tape.one_minus(z), h), tape.mul(z, n));
}

}  // namespace dgnpp
