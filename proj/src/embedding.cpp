#include "dgnpp/embedding.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dgnpp {

NodeEmbeddingTable init_node_embeddings(std::size_t num_users,
                                        std::size_t num_items, std::size_t dim,
                                        std::uint64_t seed) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("init_node_embeddings: D must be even and >= 2");
  }
  NodeEmbeddingTable table;
  table.num_users = num_users;
  table.num_items = num_items;
  table.weights.resize(static_cast<Eigen::Index>(num_users + num_items),
                       static_cast<Eigen::Index>(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  // Row-major fill so a row's values do not depend on the table height.
  for (Eigen::Index r = 0; r < table.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.weights.cols(); ++c) {
      table.weights(r, c) = normal(rng);
    }
  }
  return table;
}

TimeEmbeddingParams default_time_params(std::size_t dim) {
  TimeEmbeddingParams params;
  params.omega.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 1; i <= dim; ++i) {
    params.omega(static_cast<Eigen::Index>(i - 1)) =
        1.0 / std::pow(TimeEmbeddingParams::kPhaseBase,
                       static_cast<double>(i - 1) / static_cast<double>(dim));
  }
  return params;
}

double time_phase(std::size_t i, std::size_t dim, double position) {
  const double exponent = (i % 2 == 1 ? static_cast<double>(i - 1)
                                      : static_cast<double>(i)) /
                          static_cast<double>(dim);
  return position / std::pow(TimeEmbeddingParams::kPhaseBase, exponent);
}

Eigen::VectorXd time_embedding(const TimeEmbeddingParams& params, double t,
                               double t_x, double position) {
  if (t < t_x) {
    throw std::invalid_argument("time_embedding: t must not precede t_x");
  }
  const auto dim = static_cast<std::size_t>(params.width());
  const double dt = t - t_x;
  Eigen::VectorXd out(params.width());
  for (std::size_t i = 1; i <= dim; ++i) {
    const auto j = static_cast<Eigen::Index>(i - 1);
    const double arg = params.omega(j) * dt + time_phase(i, dim, position);
    out(j) = (i % 2 == 1) ? std::cos(arg) : std::sin(arg);
  }
  return out;
}

}  // namespace dgnpp
