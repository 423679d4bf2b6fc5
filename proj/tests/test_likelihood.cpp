#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dgnpp/gradcheck.hpp"
#include "dgnpp/likelihood.hpp"
#include "dgnpp/objective.hpp"
#include "dgnpp/stats.hpp"
#include "stubs.hpp"
#include "toy.hpp"

using namespace dgnpp;

namespace {

EventStream poisson_stream(std::size_t n, double horizon) {
  EventStream s;
  s.num_users = 2;
  s.num_items = 3;
  for (std::size_t k = 0; k < n; ++k) {
    s.events.push_back({k % 2, k % 3, horizon * static_cast<double>(k + 1) / static_cast<double>(n + 1)});
  }
  s.horizon = horizon;
  return s;
}

double mc_spread(const PointProcess& p, const EventStream& s, std::size_t samples, int seeds) {
  std::vector<double> values;
  for (int seed = 0; seed < seeds; ++seed) {
    values.push_back(log_likelihood(p, s, samples, static_cast<std::uint64_t>(seed)).integral_term);
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / seeds;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / (seeds - 1));
}

}  // namespace

TEST_CASE("constant intensity matches the Poisson log-likelihood") {
  stubs::ConstantProcess p;
  p.pair_rate = 0.4;
  p.pairs = 6;
  const auto s = poisson_stream(25, 30.0);
  const double exact = 25 * std::log(0.4) - 0.4 * 6 * 30.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto est = log_likelihood(p, s, 4, seed);
    CHECK(std::abs(est.total - exact) <= 3 * est.integral_std_error + 1e-9 * std::abs(exact));
    CHECK(est.total == est.log_sum_term - est.integral_term);
    CHECK(est.integral_term >= 0.0);
  }
}

TEST_CASE("empty stream has only the integral") {
  stubs::ConstantProcess p;
  p.pair_rate = 2.0;
  EventStream s;
  s.horizon = 1.0;
  const auto est = log_likelihood(p, s, 8, 3);
  CHECK(est.log_sum_term == 0.0);
  CHECK(std::abs(est.integral_term - 2.0) <= 3 * est.integral_std_error + 1e-12);
  CHECK(est.mc_samples == 8);
}

TEST_CASE("Hawkes likelihood within three standard errors") {
  HawkesParams hp;
  hp.baseline = Eigen::VectorXd::Constant(4, 0.3);
  hp.excitation = Eigen::MatrixXd::Constant(4, 4, 0.15);
  hp.decay = 1.2;
  const auto sim = simulate_hawkes(hp, 60.0, 4, TypeGrid{2, 2});
  stubs::HawkesProcess p;
  p.params = hp;
  p.path = sim.typed;
  const auto gaps = time_rescaled_gaps(hp, sim.typed);
  double exact = 0.0;
  for (std::size_t k = 0; k < sim.typed.size(); ++k) {
    exact += p.log_event_intensity(k, sim.stream.events[k]);
  }
  double compensator = std::accumulate(gaps.begin(), gaps.end(), 0.0);
  // Tail from the last event to the horizon.
  const double last = sim.typed.back().time;
  for (std::size_t i = 0; i < 4; ++i) {
    compensator += hp.baseline(static_cast<Eigen::Index>(i)) * (sim.stream.horizon - last);
    for (const auto& e : sim.typed) {
      compensator += hp.excitation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.type)) /
                     hp.decay * (std::exp(-hp.decay * (last - e.time)) -
                                 std::exp(-hp.decay * (sim.stream.horizon - e.time)));
    }
  }
  exact -= compensator;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto est = log_likelihood(p, sim.stream, 4, seed);
    if (std::abs(est.total - exact) <= 3 * est.integral_std_error) ++inside;
  }
  CHECK(inside >= 18);
}

TEST_CASE("Monte Carlo error shrinks like one over root samples") {
  stubs::FunctionProcess p;
  p.rate = [](double t) { return 1.0 + std::sin(3.0 * t) * std::sin(3.0 * t) + 0.5 * std::cos(t); };
  const auto s = poisson_stream(6, 5.0);
  std::vector<double> xs, ys;
  for (std::size_t samples = 8; samples <= 512; samples *= 2) {
    xs.push_back(std::log(static_cast<double>(samples)));
    ys.push_back(std::log(mc_spread(p, s, samples, 100)));
  }
  const double slope = stats::fit_slope(xs, ys);
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}

TEST_CASE("windows over a partition add up") {
  stubs::FunctionProcess p;
  p.rate = [](double t) { return 2.0 + std::cos(t); };
  const auto s = poisson_stream(40, 20.0);
  const auto full = log_likelihood(p, s, 3, 17);
  double total = 0.0, a = 0.0, b = 0.0;
  for (std::size_t begin = 0; begin < 40; begin += 7) {
    const auto w = window_log_likelihood(p, s, begin, std::min<std::size_t>(40, begin + 7), 3, 17);
    total += w.total;
    a += w.log_sum_term;
    b += w.integral_term;
  }
  CHECK(total == doctest::Approx(full.total).epsilon(1e-12));
  CHECK(a == doctest::Approx(full.log_sum_term).epsilon(1e-12));
  CHECK(b == doctest::Approx(full.integral_term).epsilon(1e-12));
}

TEST_CASE("estimates are deterministic under seed") {
  stubs::FunctionProcess p;
  p.rate = [](double t) { return 1.5 + std::sin(t); };
  const auto s = poisson_stream(10, 8.0);
  CHECK(log_likelihood(p, s, 4, 9).total == log_likelihood(p, s, 4, 9).total);
  CHECK(log_likelihood(p, s, 4, 9).total != log_likelihood(p, s, 4, 10).total);
  CHECK_THROWS_AS(log_likelihood(p, s, 0, 9), std::invalid_argument);
}

TEST_CASE("log intensities are clamped") {
  stubs::ConstantProcess p;
  p.pair_rate = 1e-30;
  const auto s = poisson_stream(3, 1.0);
  const auto est = log_likelihood(p, s, 1, 1);
  CHECK(est.log_sum_term == doctest::Approx(3 * kLogIntensityFloor));
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("sampled supports") {
  const auto s = sampled_support(2, 7, 50, 10, 123);
  REQUIRE(s.items.size() == 11);
  CHECK(s.users == std::vector<std::size_t>{2});
  CHECK(s.items.front() == 7);
  auto sorted = s.items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted.back() < 50);
  CHECK(sampled_support(2, 7, 50, 10, 123).items == s.items);
  CHECK(sampled_support(2, 7, 50, 10, 124).items != s.items);
  CHECK(sampled_support(0, 3, 5, 10, 1).items == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(sampled_support(0, 3, 5, 0, 1).items.size() == 5);
  // Negatives cover every other item over many draws.
  std::vector<int> seen(6, 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (auto v : sampled_support(0, 2, 6, 2, seed).items) ++seen[v];
  }
  for (std::size_t v = 0; v < 6; ++v) CHECK(seen[v] > 0);
}

TEST_CASE("model likelihood: tape and plain forward agree") {
  const auto s = toy::hawkes_stream(3, 3, 12.0, 2);
  REQUIRE(s.size() >= 10);
  const ModelParams p = toy::params(toy::dims(3, 3), 3);
  const TrainingContext ctx(s, toy::options(4, 2));
  for (bool all_pairs : {false, true}) {
    ObjectiveConfig oc;
    oc.negatives = 0;
    oc.all_pairs = all_pairs;
    oc.seed = 5;
    const auto tape = window_objective(ctx, p, oc, 0, s.size(), nullptr);
    const auto plain = window_objective_plain(ctx, p, oc, 0, s.size());
    CHECK(tape.log_sum_term == doctest::Approx(plain.log_sum_term).epsilon(1e-12));
    CHECK(tape.integral_term == plain.integral_term);
    // Normalized intensities sum to one, so B is the window length.
    CHECK(plain.integral_term == doctest::Approx(s.horizon).epsilon(1e-12));
  }
}

TEST_CASE("model likelihood gradient on a 3x3, 10-event instance") {
  auto s = toy::hawkes_stream(3, 3, 12.0, 2);
  s.events.resize(10);
  s.horizon = horizon_after(s.events);
  const ModelParams p = toy::params(toy::dims(3, 3), 3);
  GradCheckOptions go;
  go.coords_per_tensor = 6;
  go.objective.all_pairs = true;
  go.objective.seed = 8;
  const auto report = grad_check(p, s, toy::options(4, 2), go);
  CHECK(report.checked > 0);
  for (const auto& t : report.tensors) {
    INFO(t.name);
    CHECK(t.max_relative_error < 1e-3);
  }
}

TEST_CASE("threaded gradients match the single-threaded ones") {
  const auto s = toy::hawkes_stream(3, 4, 15.0, 6);
  const ModelParams p = toy::params(toy::dims(3, 4), 4);
  const TrainingContext ctx(s, toy::options(4, 2));
  ObjectiveConfig oc;
  oc.negatives = 2;
  oc.dropout = 0.3;
  oc.seed = 1;
  ModelParams g1 = zeros_like(p), g3 = zeros_like(p), g3b = zeros_like(p);
  const auto r1 = window_objective(ctx, p, oc, 0, s.size(), &g1);
  oc.threads = 3;
  const auto r3 = window_objective(ctx, p, oc, 0, s.size(), &g3);
  window_objective(ctx, p, oc, 0, s.size(), &g3b);
  CHECK(r1.log_sum_term == doctest::Approx(r3.log_sum_term).epsilon(1e-13));
  const auto a = tensors(g1), b = tensors(g3), c = tensors(g3b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK((a[k].flat() - b[k].flat()).cwiseAbs().maxCoeff() <=
          1e-12 * (1.0 + a[k].flat().cwiseAbs().maxCoeff()));
    CHECK(b[k].flat() == c[k].flat());
  }
}
