#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "dgnpp/events.hpp"
#include "dgnpp/hawkes.hpp"
#include "dgnpp/intensity.hpp"
#include "dgnpp/model_params.hpp"

namespace toy {

inline dgnpp::EventStream hawkes_stream(std::size_t users, std::size_t items,
                                        double horizon, std::uint64_t seed,
                                        double mu = 0.3, double alpha = 0.1) {
  const std::size_t k = users * items;
  dgnpp::HawkesParams p;
  p.baseline = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), mu);
  p.excitation = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(k),
                                           static_cast<Eigen::Index>(k), alpha / static_cast<double>(k));
  p.decay = 1.0;
  return dgnpp::simulate_hawkes(p, horizon, seed, dgnpp::TypeGrid{users, items}).stream;
}

inline dgnpp::ModelDims dims(std::size_t users, std::size_t items, std::size_t d = 8,
                             std::size_t blocks = 2) {
  dgnpp::ModelDims m;
  m.num_users = users;
  m.num_items = items;
  m.dim = d;
  m.attn_dim = d;
  m.sal_blocks = blocks;
  return m;
}

inline dgnpp::ModelOptions options(std::size_t snapshots = 4, std::size_t layers = 2) {
  dgnpp::ModelOptions o;
  o.num_snapshots = snapshots;
  o.layers = layers;
  return o;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, double scale,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

// Nonzero shift tables so the temporal path is exercised.
inline dgnpp::ModelParams params(const dgnpp::ModelDims& d, std::uint64_t seed) {
  dgnpp::ModelParams p = dgnpp::init_model_params(d, seed);
  p.shift.user = random_matrix(p.shift.user.rows(), p.shift.user.cols(), 0.3, seed + 1);
  p.shift.item = random_matrix(p.shift.item.rows(), p.shift.item.cols(), 0.3, seed + 2);
  for (auto* c : {&p.gru.user, &p.gru.item}) {
    c->b_update.setConstant(0.1);
    c->b_reset.setConstant(-0.2);
    c->b_cand.setConstant(0.05);
  }
  return p;
}

}  // namespace toy
