#include "dgnpp/model_params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dgnpp {
namespace {

void fill_normal(Eigen::MatrixXd& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
  }
}

template <class P, class F>
void visit(P& p, F&& f) {
  f("node_embeddings", p.nodes.weights, true);
  f("omega", p.time.omega, false);
  for (std::size_t k = 0; k < p.attention.size(); ++k) {
    const std::string prefix = "attention." + std::to_string(k) + ".";
    f(prefix + "query", p.attention[k].query, true);
    f(prefix + "key", p.attention[k].key, true);
    f(prefix + "value", p.attention[k].value, true);
  }
  auto cell = [&f](const std::string& prefix, auto& c) {
    f(prefix + "w_update", c.w_update, true);
    f(prefix + "u_update", c.u_update, true);
    f(prefix + "w_reset", c.w_reset, true);
    f(prefix + "u_reset", c.u_reset, true);
    f(prefix + "w_cand", c.w_cand, true);
    f(prefix + "u_cand", c.u_cand, true);
    f(prefix + "b_update", c.b_update, false);
    f(prefix + "b_reset", c.b_reset, false);
    f(prefix + "b_cand", c.b_cand, false);
  };
  cell("gru.user.", p.gru.user);
  cell("gru.item.", p.gru.item);
  f("shift.user", p.shift.user, true);
  f("shift.item", p.shift.item, true);
}

}  // namespace

ModelDims ModelParams::dims() const {
  ModelDims d;
  d.num_users = nodes.num_users;
  d.num_items = nodes.num_items;
  d.dim = static_cast<std::size_t>(nodes.weights.cols());
  d.attn_dim = attention.empty() ? d.dim
                                 : static_cast<std::size_t>(attention.front().query.rows());
  d.sal_blocks = attention.size();
  return d;
}

ModelParams init_model_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.sal_blocks == 0) {
    throw std::invalid_argument("init_model_params: need at least one attention block");
  }
  if (dims.attn_dim == 0) {
    throw std::invalid_argument("init_model_params: attention width must be positive");
  }
  ModelParams p;
  p.nodes = init_node_embeddings(dims.num_users, dims.num_items, dims.dim, seed);
  p.time = default_time_params(dims.dim);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dims.dim));
  for (std::size_t k = 0; k < dims.sal_blocks; ++k) {
    AttentionParams a = zero_attention(d, da);
    fill_normal(a.query, inv_sqrt_d / std::sqrt(2.0), rng);
    fill_normal(a.key, inv_sqrt_d / std::sqrt(2.0), rng);
    fill_normal(a.value, inv_sqrt_d, rng);
    p.attention.push_back(std::move(a));
  }
  for (GruCell* cell : {&p.gru.user, &p.gru.item}) {
    *cell = zero_gru_cell(d);
    for (Eigen::MatrixXd* m : {&cell->w_update, &cell->u_update, &cell->w_reset,
                               &cell->u_reset, &cell->w_cand, &cell->u_cand}) {
      fill_normal(*m, inv_sqrt_d, rng);
    }
  }
  p.shift.user = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.num_users), d);
  p.shift.item = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.num_items), d);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  set_zero(z);
  return z;
}

std::vector<TensorRef> tensors(ModelParams& params) {
  std::vector<TensorRef> out;
  visit(params, [&out](const std::string& name, auto& m, bool decayed) {
    out.push_back({name, m.data(), m.rows(), m.cols(), decayed});
  });
  return out;
}

std::vector<TensorRef> tensors(const ModelParams& params) {
  return tensors(const_cast<ModelParams&>(params));
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& t : tensors(params)) n += static_cast<std::size_t>(t.size());
  return n;
}

bool all_finite(const ModelParams& params) {
  for (const auto& t : tensors(params)) {
    if (!t.flat().allFinite()) return false;
  }
  return true;
}

void set_zero(ModelParams& params) {
  for (auto& t : tensors(params)) t.flat().setZero();
}

void accumulate(ModelParams& a, const ModelParams& b) {
  auto ta = tensors(a);
  const auto tb = tensors(b);
  if (ta.size() != tb.size()) throw std::invalid_argument("accumulate: shape mismatch");
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].size() != tb[i].size()) {
      throw std::invalid_argument("accumulate: shape mismatch in " + ta[i].name);
    }
    ta[i].flat() += tb[i].flat();
  }
}

}  // namespace dgnpp
