#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dgnpp/events.hpp"
#include "dgnpp/model_params.hpp"
#include "dgnpp/objective.hpp"

namespace dgnpp {

struct GradCheckOptions {
  std::size_t coords_per_tensor = 8;
  double step = 1e-5;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;  // dropout is forced to zero
  // Test hook: scales analytic gradients by (1 + this) before comparing.
  double inject_gradient_error = 0.0;
};

struct CoordCheck {
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct TensorCheck {
  std::string name;
  std::vector<CoordCheck> coords;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// |a - n| / max(|a| + |n|, 1e-6)
double relative_error(double analytic, double numeric);

// Compares the tape gradient of -log_likelihood over the whole stream with
// central differences of the plain forward path, on randomly chosen
// coordinates of every tensor. Both sides share supports and MC seeds.
GradCheckReport grad_check(const ModelParams& params, const EventStream& stream,
                           const ModelOptions& model_options,
                           const GradCheckOptions& options);

}  // namespace dgnpp
