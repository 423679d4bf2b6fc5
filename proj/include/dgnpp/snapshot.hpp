#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/events.hpp"

namespace dgnpp {

// Bipartite graph of the distinct (user, item) edges observed up to the
// snapshot boundary m * d. Neighbor lists are sorted and duplicate-free.
struct SnapshotGraph {
  std::size_t snapshot_index = 0;
  double boundary_time = 0.0;
  std::vector<std::vector<std::size_t>> user_neighbors;
  std::vector<std::vector<std::size_t>> item_neighbors;

  std::size_t user_degree(std::size_t u) const { return user_neighbors[u].size(); }
  std::size_t item_degree(std::size_t v) const { return item_neighbors[v].size(); }
  std::size_t num_edges() const;
};

struct StaticEmbeddings {
  Eigen::MatrixXd user_static;  // |U| x D
  Eigen::MatrixXd item_static;  // |V| x D
  std::size_t snapshot_index = 0;
};

// N snapshots at times 0, d, ..., (N-1)d with d = horizon / N.
std::vector<SnapshotGraph> build_snapshots(const EventStream& stream,
                                           std::size_t num_snapshots);

// floor(t / d), clamped to [0, N-1].
std::size_t snapshot_for_time(double t, double snapshot_duration,
                              std::size_t num_snapshots);

// Parameter-free propagation: R rounds of symmetric-degree-normalized
// neighbor sums, then the mean over layers 0..R. Degree-0 nodes receive a
// zero vector at every propagated layer. The map is linear and
// self-adjoint, so it also back-propagates gradients.
StaticEmbeddings aggregate(const SnapshotGraph& graph,
                           const Eigen::MatrixXd& user_emb0,
                           const Eigen::MatrixXd& item_emb0,
                           std::size_t layers);

}  // namespace dgnpp
