#include "dgnpp/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace dgnpp {

std::size_t SnapshotGraph::num_edges() const {
  std::size_t n = 0;
  for (const auto& row : user_neighbors) n += row.size();
  return n;
}

std::vector<SnapshotGraph> build_snapshots(const EventStream& stream,
                                           std::size_t num_snapshots) {
  if (num_snapshots == 0) {
    throw std::invalid_argument("build_snapshots: need at least one snapshot");
  }
  const double d = stream.horizon / static_cast<double>(num_snapshots);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::vector<SnapshotGraph> snapshots;
  snapshots.reserve(num_snapshots);

  std::size_t next = 0;
  for (std::size_t m = 0; m < num_snapshots; ++m) {
    const double boundary = static_cast<double>(m) * d;
    while (next < stream.size() &&
           stream.events[next].timestamp <= boundary) {
      const auto& e = stream.events[next++];
      edges.emplace(e.user, e.item);
    }
    SnapshotGraph g;
    g.snapshot_index = m;
    g.boundary_time = boundary;
    g.user_neighbors.resize(stream.num_users);
    g.item_neighbors.resize(stream.num_items);
    for (const auto& [u, v] : edges) {
      g.user_neighbors[u].push_back(v);
      g.item_neighbors[v].push_back(u);
    }
    for (auto& row : g.item_neighbors) std::sort(row.begin(), row.end());
    snapshots.push_back(std::move(g));
  }
  return snapshots;
}

std::size_t snapshot_for_time(double t, double snapshot_duration,
                              std::size_t num_snapshots) {
  if (num_snapshots == 0) return 0;
  if (!(snapshot_duration > 0.0) || !(t > 0.0)) return 0;
  const double m = std::floor(t / snapshot_duration);
  if (m >= static_cast<double>(num_snapshots - 1)) return num_snapshots - 1;
  return static_cast<std::size_t>(m);
}

StaticEmbeddings aggregate(const SnapshotGraph& graph,
                           const Eigen::MatrixXd& user_emb0,
                           const Eigen::MatrixXd& item_emb0,
                           std::size_t layers) {
  if (user_emb0.cols() != item_emb0.cols()) {
    throw std::invalid_argument("aggregate: user and item widths differ");
  }
  if (static_cast<std::size_t>(user_emb0.rows()) != graph.user_neighbors.size() ||
      static_cast<std::size_t>(item_emb0.rows()) != graph.item_neighbors.size()) {
    throw std::invalid_argument("aggregate: table rows do not match the graph");
  }

  Eigen::MatrixXd users = user_emb0;
  Eigen::MatrixXd items = item_emb0;
  StaticEmbeddings out{user_emb0, item_emb0, graph.snapshot_index};

  for (std::size_t k = 0; k < layers; ++k) {
    Eigen::MatrixXd next_users = Eigen::MatrixXd::Zero(users.rows(), users.cols());
    Eigen::MatrixXd next_items = Eigen::MatrixXd::Zero(items.rows(), items.cols());
    for (std::size_t u = 0; u < graph.user_neighbors.size(); ++u) {
      const auto du = static_cast<double>(graph.user_degree(u));
      for (const std::size_t v : graph.user_neighbors[u]) {
        const double w =
            1.0 / (std::sqrt(du) * std::sqrt(static_cast<double>(graph.item_degree(v))));
        const auto ui = static_cast<Eigen::Index>(u);
        const auto vi = static_cast<Eigen::Index>(v);
        next_users.row(ui) += w * items.row(vi);
        next_items.row(vi) += w * users.row(ui);
      }
    }
    users = std::move(next_users);
    items = std::move(next_items);
    out.user_static += users;
    out.item_static += items;
  }
  const double scale = 1.0 / static_cast<double>(layers + 1);
  out.user_static *= scale;
  out.item_static *= scale;
  return out;
}

}  // namespace dgnpp
