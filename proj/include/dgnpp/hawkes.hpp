#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/events.hpp"

namespace dgnpp {

// Multivariate Hawkes process with a shared exponential kernel
// g(s) = exp(-decay * s). excitation(i, j) is the jump type j adds to the
// intensity of type i.
struct HawkesParams {
  Eigen::VectorXd baseline;
  Eigen::MatrixXd excitation;
  double decay = 1.0;

  std::size_t num_types() const {
    return static_cast<std::size_t>(baseline.size());
  }
  // Throws std::invalid_argument on negative rates or shape mismatch.
  void validate() const;
  // Spectral radius of excitation / decay; < 1 means stationary.
  double branching_ratio() const;
};

struct TypedEvent {
  std::size_t type = 0;
  double time = 0.0;
};

// Event type <-> (user, item), row-major over a users x items grid.
struct TypeGrid {
  std::size_t users = 1;
  std::size_t items = 1;

  std::size_t type_of(std::size_t user, std::size_t item) const {
    return user * items + item;
  }
  std::size_t user_of(std::size_t type) const { return type / items; }
  std::size_t item_of(std::size_t type) const { return type % items; }
};

// lambda_i(t) by direct summation over the history. All history times must
// be strictly before t.
double hawkes_intensity(const HawkesParams& params,
                        const std::vector<TypedEvent>& history,
                        std::size_t type, double t);

inline constexpr std::size_t kMaxSimulatedEvents = 1'000'000;

class SimulationCapError : public std::runtime_error {
 public:
  SimulationCapError(std::size_t cap, double reached_time)
      : std::runtime_error("simulation exceeded the " + std::to_string(cap) +
                           "-event cap at t = " + std::to_string(reached_time)),
        reached_time_(reached_time) {}

  double reached_time() const { return reached_time_; }

 private:
  double reached_time_;
};

struct SimulationResult {
  EventStream stream;
  std::vector<TypedEvent> typed;
  // Set when the excitation matrix is not subcritical.
  bool unstable = false;
};

// Ogata thinning on (0, horizon]. Deterministic under seed.
SimulationResult simulate_hawkes(const HawkesParams& params, double horizon,
                                 std::uint64_t seed, TypeGrid grid,
                                 std::size_t event_cap = kMaxSimulatedEvents);

// Compensator increments Lambda(t_k) - Lambda(t_{k-1}) of the total process
// along a path (with t_0 = 0). Exp(1) i.i.d. under the true model.
std::vector<double> time_rescaled_gaps(const HawkesParams& params,
                                       const std::vector<TypedEvent>& path);

std::vector<TypedEvent> to_typed(const EventStream& stream, TypeGrid grid);

}  // namespace dgnpp
