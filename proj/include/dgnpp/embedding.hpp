#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace dgnpp {

// Learnable node table: rows [0, num_users) are users, the remaining
// num_items rows are items.
struct NodeEmbeddingTable {
  Eigen::MatrixXd weights;
  std::size_t num_users = 0;
  std::size_t num_items = 0;

  Eigen::Index width() const { return weights.cols(); }
  auto users() const { return weights.topRows(static_cast<Eigen::Index>(num_users)); }
  auto items() const { return weights.bottomRows(static_cast<Eigen::Index>(num_items)); }
};

// Entries i.i.d. N(0, 1/D). D must be even and >= 2.
NodeEmbeddingTable init_node_embeddings(std::size_t num_users,
                                        std::size_t num_items, std::size_t dim,
                                        std::uint64_t seed);

// Frequencies of the continuous time embedding.
struct TimeEmbeddingParams {
  Eigen::VectorXd omega;
  static constexpr double kPhaseBase = 10000.0;

  Eigen::Index width() const { return omega.size(); }
};

// omega_i = 1 / 10000^((i-1)/D), i = 1..D.
TimeEmbeddingParams default_time_params(std::size_t dim);

// Phase offset of (1-based) dimension i for sequence position h:
// h / 10000^((i-1)/D) for odd i, h / 10000^(i/D) for even i.
double time_phase(std::size_t i, std::size_t dim, double position);

// Component i (1-based) is cos(omega_i (t - t_x) + phase) for odd i and
// sin(omega_i (t - t_x) + phase) for even i. Requires t >= t_x.
Eigen::VectorXd time_embedding(const TimeEmbeddingParams& params, double t,
                               double t_x, double position);

}  // namespace dgnpp
