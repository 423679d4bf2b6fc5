#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "dgnpp/snapshot.hpp"

namespace oracle {

// Layer average of A^k E over the (|U|+|V|) square normalized adjacency.
inline Eigen::MatrixXd dense_aggregate(const dgnpp::SnapshotGraph& g,
                                       const Eigen::MatrixXd& users,
                                       const Eigen::MatrixXd& items, std::size_t layers) {
  const auto nu = users.rows();
  const auto nv = items.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nu + nv, nu + nv);
  for (Eigen::Index u = 0; u < nu; ++u) {
    for (const std::size_t v : g.user_neighbors[static_cast<std::size_t>(u)]) {
      const double w = 1.0 / std::sqrt(static_cast<double>(g.user_degree(u)) *
                                       static_cast<double>(g.item_degree(v)));
      a(u, nu + static_cast<Eigen::Index>(v)) = w;
      a(nu + static_cast<Eigen::Index>(v), u) = w;
    }
  }
  Eigen::MatrixXd e(nu + nv, users.cols());
  e << users, items;
  Eigen::MatrixXd layer = e;
  Eigen::MatrixXd sum = e;
  for (std::size_t k = 0; k < layers; ++k) {
    layer = a * layer;
    sum += layer;
  }
  return sum / static_cast<double>(layers + 1);
}

}  // namespace oracle
