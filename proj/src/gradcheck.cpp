#include "dgnpp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dgnpp/likelihood.hpp"

namespace dgnpp {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
}

GradCheckReport grad_check(const ModelParams& params, const EventStream& stream,
                           const ModelOptions& model_options,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  const TrainingContext ctx(stream, model_options);
  ObjectiveConfig oc = options.objective;
  oc.dropout = 0.0;
  oc.threads = 1;

  ModelParams grads = zeros_like(params);
  window_objective(ctx, params, oc, 0, stream.size(), &grads);

  ModelParams probe = params;
  auto loss = [&] {
    return -window_objective_plain(ctx, probe, oc, 0, stream.size()).log_likelihood;
  };

  std::mt19937_64 rng(options.seed);
  auto probe_tensors = tensors(probe);
  const auto grad_tensors = tensors(grads);
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    TensorCheck tc;
    tc.name = probe_tensors[k].name;
    const Eigen::Index size = probe_tensors[k].size();
    const auto take = std::min<std::size_t>(options.coords_per_tensor,
                                            static_cast<std::size_t>(size));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(size));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t j = 0; j < take; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, order.size() - 1);
      std::swap(order[j], order[pick(rng)]);
    }
    for (std::size_t j = 0; j < take; ++j) {
      const Eigen::Index idx = order[j];
      double& x = probe_tensors[k].data[idx];
      const double saved = x;
      x = saved + options.step;
      const double up = loss();
      x = saved - options.step;
      const double down = loss();
      x = saved;
      CoordCheck cc;
      cc.index = idx;
      cc.numeric = (up - down) / (2.0 * options.step);
      cc.analytic = grad_tensors[k].data[idx] * (1.0 + options.inject_gradient_error);
      cc.relative_error = relative_error(cc.analytic, cc.numeric);
      tc.max_relative_error = std::max(tc.max_relative_error, cc.relative_error);
      tc.coords.push_back(cc);
      ++report.checked;
    }
    report.max_relative_error = std::max(report.max_relative_error, tc.max_relative_error);
    if (!tc.coords.empty()) report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace dgnpp
