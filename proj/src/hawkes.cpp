#include "dgnpp/hawkes.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace dgnpp {

void HawkesParams::validate() const {
  const auto k = baseline.size();
  if (excitation.rows() != k || excitation.cols() != k) {
    throw std::invalid_argument("HawkesParams: excitation must be " +
                                std::to_string(k) + "x" + std::to_string(k));
  }
  if ((baseline.array() < 0.0).any() || !baseline.allFinite()) {
    throw std::invalid_argument("HawkesParams: baseline must be finite, >= 0");
  }
  if ((excitation.array() < 0.0).any() || !excitation.allFinite()) {
    throw std::invalid_argument("HawkesParams: excitation must be finite, >= 0");
  }
  if (!(decay > 0.0) || !std::isfinite(decay)) {
    throw std::invalid_argument("HawkesParams: decay must be positive");
  }
}

double HawkesParams::branching_ratio() const {
  if (excitation.size() == 0) return 0.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(excitation / decay, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double hawkes_intensity(const HawkesParams& params,
                        const std::vector<TypedEvent>& history,
                        std::size_t type, double t) {
  if (type >= params.num_types()) {
    throw std::invalid_argument("hawkes_intensity: unknown event type");
  }
  double rate = params.baseline(static_cast<Eigen::Index>(type));
  for (const auto& e : history) {
    if (!(e.time < t)) {
      throw std::invalid_argument(
          "hawkes_intensity: history must lie strictly before t");
    }
    rate += params.excitation(static_cast<Eigen::Index>(type),
                              static_cast<Eigen::Index>(e.type)) *
            std::exp(-params.decay * (t - e.time));
  }
  return rate;
}

SimulationResult simulate_hawkes(const HawkesParams& params, double horizon,
                                 std::uint64_t seed, TypeGrid grid,
                                 std::size_t event_cap) {
  params.validate();
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("simulate_hawkes: horizon must be positive");
  }
  const std::size_t k = params.num_types();
  if (grid.users * grid.items != k) {
    throw std::invalid_argument(
        "simulate_hawkes: type grid does not match the number of types");
  }

  SimulationResult result;
  result.unstable = params.branching_ratio() >= 1.0;
  result.stream.num_users = grid.users;
  result.stream.num_items = grid.items;
  result.stream.horizon = horizon;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double base_total = params.baseline.sum();
  // Excitation currently carried by each type, decays as exp(-decay * dt).
  Eigen::VectorXd excited = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  double t = 0.0;
  while (true) {
    const double bound = base_total + excited.sum();
    if (!(bound > 0.0)) break;
    const double wait = -std::log1p(-unit(rng)) / bound;
    t += wait;
    if (t > horizon) break;
    excited *= std::exp(-params.decay * wait);
    const Eigen::VectorXd rates = params.baseline + excited;
    const double total = rates.sum();
    if (unit(rng) * bound > total) continue;

    double pick = unit(rng) * total;
    std::size_t type = 0;
    for (; type + 1 < k; ++type) {
      pick -= rates(static_cast<Eigen::Index>(type));
      if (pick < 0.0) break;
    }
    if (result.typed.size() >= event_cap) {
      throw SimulationCapError(event_cap, t);
    }
    result.typed.push_back({type, t});
    result.stream.events.push_back(
        {grid.user_of(type), grid.item_of(type), t});
    excited += params.excitation.col(static_cast<Eigen::Index>(type));
  }
  return result;
}

std::vector<double> time_rescaled_gaps(const HawkesParams& params,
                                       const std::vector<TypedEvent>& path) {
  params.validate();
  const double base_total = params.baseline.sum();
  const Eigen::RowVectorXd column_mass = params.excitation.colwise().sum();
  std::vector<double> gaps;
  gaps.reserve(path.size());
  double carried = 0.0;  // sum_i excitation_i just after the previous event
  double previous = 0.0;
  for (const auto& e : path) {
    const double dt = e.time - previous;
    gaps.push_back(base_total * dt +
                   carried * (-std::expm1(-params.decay * dt)) / params.decay);
    carried = carried * std::exp(-params.decay * dt) +
              column_mass(static_cast<Eigen::Index>(e.type));
    previous = e.time;
  }
  return gaps;
}

std::vector<TypedEvent> to_typed(const EventStream& stream, TypeGrid grid) {
  std::vector<TypedEvent> out;
  out.reserve(stream.size());
  for (const auto& e : stream.events) {
    out.push_back({grid.type_of(e.user, e.item), e.timestamp});
  }
  return out;
}

}  // namespace dgnpp
