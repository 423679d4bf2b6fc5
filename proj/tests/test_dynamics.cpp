#include <doctest.h>

#include <cmath>
#include <random>

#include "dgnpp/autodiff.hpp"
#include "dgnpp/dynamics.hpp"
#include "toy.hpp"

using namespace dgnpp;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, double scale, std::uint64_t seed) {
  return toy::random_matrix(n, 1, scale, seed);
}

AttentionParams random_attention(Eigen::Index d, Eigen::Index da, std::uint64_t seed) {
  return {toy::random_matrix(da, 2 * d, 0.5, seed), toy::random_matrix(da, 2 * d, 0.5, seed + 1),
          toy::random_matrix(d, d, 0.5, seed + 2)};
}

GruCell random_cell(Eigen::Index d, std::uint64_t seed) {
  GruCell c = zero_gru_cell(d);
  c.w_update = toy::random_matrix(d, d, 0.4, seed);
  c.u_update = toy::random_matrix(d, d, 0.4, seed + 1);
  c.w_reset = toy::random_matrix(d, d, 0.4, seed + 2);
  c.u_reset = toy::random_matrix(d, d, 0.4, seed + 3);
  c.w_cand = toy::random_matrix(d, d, 0.4, seed + 4);
  c.u_cand = toy::random_matrix(d, d, 0.4, seed + 5);
  c.b_update = random_vector(d, 0.2, seed + 6);
  c.b_reset = random_vector(d, 0.2, seed + 7);
  c.b_cand = random_vector(d, 0.2, seed + 8);
  return c;
}

UserHistory history_of(std::vector<std::pair<std::size_t, double>> rows, double first_pos = 1) {
  UserHistory h;
  double pos = first_pos;
  for (const auto& [item, time] : rows) h.entries.push_back({item, time, pos++});
  return h;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("singleton history puts all weight on it") {
  const Eigen::Index d = 4;
  const auto attn = random_attention(d, 3, 1);
  const auto items = toy::random_matrix(3, d, 1.0, 4);
  const auto tp = default_time_params(d);
  const auto user = random_vector(d, 1.0, 5);
  AttentionTrace trace;
  const auto w = attentive_interaction(user, history_of({{2, 1.0}}), items, tp, attn, 2.0, &trace);
  CHECK(trace.weights.size() == 1);
  CHECK(trace.weights(0) == 1.0);
  const Eigen::VectorXd want = (attn.value * items.row(2).transpose()).cwiseMax(0.0);
  CHECK((w - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("attention weights are a probability vector and w is non-negative") {
  const Eigen::Index d = 6;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto attn = random_attention(d, 5, 10 + trial);
    const auto items = toy::random_matrix(7, d, 2.0, 100 + trial);
    const auto user = random_vector(d, 2.0, 200 + trial);
    std::vector<std::pair<std::size_t, double>> rows;
    double t = 0.0;
    const int len = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < len; ++k) {
      t += 0.5;
      rows.emplace_back(rng() % 7, t);
    }
    AttentionTrace trace;
    const auto w = attentive_interaction(user, history_of(rows), items, default_time_params(d),
                                         attn, t + 1.0, &trace);
    CHECK(std::abs(trace.weights.sum() - 1.0) < 1e-12);
    CHECK(trace.weights.minCoeff() >= 0.0);
    CHECK(w.minCoeff() >= 0.0);
  }
}

TEST_CASE("length-3 history against a straight-line scalar evaluation") {
  const Eigen::Index d = 2;
  AttentionParams attn = zero_attention(d, 2);
  attn.query << 0.1, -0.2, 0.3, 0.05, 0.2, 0.1, -0.1, 0.4;
  attn.key << -0.3, 0.2, 0.1, 0.2, 0.05, -0.1, 0.3, 0.1;
  attn.value << 0.5, -0.4, 0.3, 0.8;
  Eigen::MatrixXd items(3, 2);
  items << 1.0, 0.5, -0.5, 2.0, 0.25, -1.0;
  Eigen::VectorXd user(2);
  user << 0.3, -0.7;
  TimeEmbeddingParams tp;
  tp.omega = Eigen::Vector2d(0.9, 0.2);
  const auto hist = history_of({{0, 1.0}, {2, 1.5}, {1, 2.5}}, 4);
  const double t = 3.0;

  // time embedding, i = 1 (cos) and i = 2 (sin), D = 2
  auto emb = [&](double tm, double h) {
    return std::array<double, 2>{std::cos(0.9 * (t - tm) + h),
                                 std::sin(0.2 * (t - tm) + h / 10000.0)};
  };
  std::array<std::array<double, 4>, 3> in{};
  for (int m = 0; m < 3; ++m) {
    const auto& e = hist.entries[m];
    const auto p = emb(e.time, e.position);
    in[m] = {user(0), user(1), items(e.item, 0) + p[0], items(e.item, 1) + p[1]};
  }
  auto row = [](const Eigen::MatrixXd& w, int r, const std::array<double, 4>& x) {
    return w(r, 0) * x[0] + w(r, 1) * x[1] + w(r, 2) * x[2] + w(r, 3) * x[3];
  };
  const double q0 = row(attn.query, 0, in[2]);
  const double q1 = row(attn.query, 1, in[2]);
  double score[3], z = 0.0, peak = -1e300;
  for (int m = 0; m < 3; ++m) {
    score[m] = q0 * row(attn.key, 0, in[m]) + q1 * row(attn.key, 1, in[m]);
    peak = std::max(peak, score[m]);
  }
  for (double s : score) z += std::exp(s - peak);
  double out0 = 0.0, out1 = 0.0;
  for (int m = 0; m < 3; ++m) {
    const double a = std::exp(score[m] - peak) / z;
    const auto item = hist.entries[m].item;
    out0 += a * (0.5 * items(item, 0) - 0.4 * items(item, 1));
    out1 += a * (0.3 * items(item, 0) + 0.8 * items(item, 1));
  }
  const auto w = attentive_interaction(user, hist, items, tp, attn, t);
  CHECK(w(0) == doctest::Approx(std::max(out0, 0.0)).epsilon(1e-12));
  CHECK(w(1) == doctest::Approx(std::max(out1, 0.0)).epsilon(1e-12));
}

TEST_CASE("empty history gives the zero vector") {
  const auto attn = random_attention(4, 4, 1);
  const auto w = attentive_interaction(random_vector(4, 1, 2), {}, toy::random_matrix(2, 4, 1, 3),
                                       default_time_params(4), attn, 1.0);
  CHECK(w.isZero(0.0));
}

TEST_CASE("history after the query time is rejected") {
  const auto attn = random_attention(4, 4, 1);
  CHECK_THROWS_AS(attentive_interaction(random_vector(4, 1, 2), history_of({{0, 2.0}}),
                                        toy::random_matrix(2, 4, 1, 3), default_time_params(4),
                                        attn, 1.0),
                  std::invalid_argument);
}

TEST_CASE("one block stack equals the single block") {
  const Eigen::Index d = 4;
  const std::vector<AttentionParams> blocks = {random_attention(d, 3, 7)};
  const auto items = toy::random_matrix(5, d, 1.0, 8);
  const auto user = random_vector(d, 1.0, 9);
  const auto hist = history_of({{1, 0.5}, {4, 0.7}, {0, 1.1}, {1, 1.2}});
  const auto tp = default_time_params(d);
  const auto a = attend_stack(user, hist, items, tp, blocks, 2.0);
  const auto b = attentive_interaction(user, hist, items, tp, blocks[0], 2.0);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stacked blocks feed per-position outputs forward") {
  const Eigen::Index d = 4;
  const std::vector<AttentionParams> blocks = {random_attention(d, 3, 7), random_attention(d, 3, 17)};
  const auto items = toy::random_matrix(5, d, 1.0, 8);
  const auto user = random_vector(d, 1.0, 9);
  const auto hist = history_of({{1, 0.5}, {4, 0.7}, {0, 1.1}});
  const auto tp = default_time_params(d);
  // First block evaluated causally at each prefix, then a second block over
  // those outputs as a pseudo item table.
  Eigen::MatrixXd lower(3, d);
  for (std::size_t j = 0; j < 3; ++j) {
    UserHistory prefix;
    prefix.entries.assign(hist.entries.begin(), hist.entries.begin() + static_cast<long>(j) + 1);
    lower.row(static_cast<Eigen::Index>(j)) =
        attentive_interaction(user, prefix, items, tp, blocks[0], 2.0).transpose();
  }
  UserHistory relabeled = hist;
  for (std::size_t j = 0; j < 3; ++j) relabeled.entries[j].item = j;
  const auto want = attentive_interaction(user, relabeled, lower, tp, blocks[1], 2.0);
  const auto got = attend_stack(user, hist, items, tp, blocks, 2.0);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("update gate saturation") {
  const Eigen::Index d = 5;
  GruCell c = random_cell(d, 1);
  const auto h = random_vector(d, 1.0, 2);
  const auto x = random_vector(d, 1.0, 3);
  c.b_update.setConstant(-50.0);
  CHECK((gru_step(c, h, x) - h).cwiseAbs().maxCoeff() < 1e-10);
  c.b_update.setConstant(50.0);
  const Eigen::VectorXd r = (c.w_reset * x + c.u_reset * h + c.b_reset).unaryExpr(&sigmoid);
  const Eigen::VectorXd n =
      (c.w_cand * x + r.cwiseProduct(c.u_cand * h) + c.b_cand).array().tanh().matrix();
  CHECK((gru_step(c, h, x) - n).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("GRU step against a gate-by-gate scalar oracle") {
  const int d = 4;
  const GruCell c = random_cell(d, 11);
  const auto h = random_vector(d, 1.0, 12);
  const auto x = random_vector(d, 1.0, 13);
  const auto got = gru_step(c, h, x);
  for (int i = 0; i < d; ++i) {
    double az = c.b_update(i), ar = c.b_reset(i), an = c.b_cand(i), un = 0.0;
    for (int j = 0; j < d; ++j) {
      az += c.w_update(i, j) * x(j) + c.u_update(i, j) * h(j);
      ar += c.w_reset(i, j) * x(j) + c.u_reset(i, j) * h(j);
      an += c.w_cand(i, j) * x(j);
      un += c.u_cand(i, j) * h(j);
    }
    const double z = sigmoid(az);
    const double r = sigmoid(ar);
    const double n = std::tanh(an + r * un);
    CHECK(got(i) == doctest::Approx((1 - z) * h(i) + z * n).epsilon(1e-12));
  }
}

TEST_CASE("fusion runs the two cells independently") {
  const GruParams p{random_cell(3, 1), random_cell(3, 20)};
  const auto u = random_vector(3, 1, 2), v = random_vector(3, 1, 3), w = random_vector(3, 1, 4);
  const auto [uf, vf] = gru_fuse(p, u, v, w);
  CHECK(uf == gru_step(p.user, u, w));
  CHECK(vf == gru_step(p.item, v, w));
  CHECK_THROWS_AS(gru_fuse(p, random_vector(4, 1, 5), v, w), std::invalid_argument);
}

TEST_CASE("temporal shift examples") {
  ShiftParams p{Eigen::MatrixXd(1, 2), Eigen::MatrixXd::Zero(1, 2)};
  p.user << 0.5, -0.5;
  const Eigen::Vector2d u(1.0, 2.0);
  const Eigen::Vector2d v(3.0, -1.0);
  const auto [us, vs] = temporal_shift(p, u, v, 0, 0, 1.0, 3.0);
  CHECK(us(0) == 2.0);
  CHECK(us(1) == 0.0);
  CHECK(vs == v);
  const auto [u0, v0] = temporal_shift(p, u, v, 0, 0, 1.0, 1.0);
  CHECK((u0 - u).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((v0 - v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(temporal_shift(p, u, v, 0, 0, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(temporal_shift(p, u, v, 1, 0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("temporal shift is linear in the embedding") {
  ShiftParams p{toy::random_matrix(2, 4, 1, 1), toy::random_matrix(3, 4, 1, 2)};
  const auto a = random_vector(4, 1, 3), b = random_vector(4, 1, 4), c = random_vector(4, 1, 5);
  const auto [sa, ta] = temporal_shift(p, a, c, 1, 2, 0.5, 2.0);
  const auto [sb, tb] = temporal_shift(p, b, c, 1, 2, 0.5, 2.0);
  const auto [sab, tab] = temporal_shift(p, Eigen::VectorXd(2.0 * a + b), c, 1, 2, 0.5, 2.0);
  CHECK((sab - 2.0 * sa - sb).cwiseAbs().maxCoeff() < 1e-14);
}

// Gradients of a random linear read-out through each operation.
TEST_CASE("dynamics gradients match central differences") {
  const Eigen::Index d = 8;
  const double step = 1e-5;
  std::vector<AttentionParams> blocks = {random_attention(d, d, 30), random_attention(d, d, 40)};
  for (auto& b : blocks) {
    b.query *= 0.5;
    b.key *= 0.5;
  }
  GruCell cell = random_cell(d, 50);
  ShiftParams shift{toy::random_matrix(2, d, 0.5, 60), toy::random_matrix(4, d, 0.5, 61)};
  auto tp = default_time_params(d);
  Eigen::MatrixXd items = toy::random_matrix(4, d, 1.0, 70);
  Eigen::VectorXd user = random_vector(d, 1.0, 71);
  const Eigen::VectorXd readout = random_vector(d, 1.0, 72);
  const auto hist = history_of({{1, 0.2}, {3, 0.9}, {0, 1.4}, {3, 1.8}});
  const double t = 2.5;

  auto plain = [&] {
    const auto w = attend_stack(user, hist, items, tp, blocks, t);
    const auto g = gru_step(cell, user, w);
    const auto [us, vs] = temporal_shift(shift, g, g, 1, 2, t, t + 0.7);
    return readout.dot(us) + 0.5 * readout.dot(vs);
  };

  std::vector<AttentionParams> gblocks = {zero_attention(d, d), zero_attention(d, d)};
  GruCell gcell = zero_gru_cell(d);
  ShiftParams gshift{Eigen::MatrixXd::Zero(2, d), Eigen::MatrixXd::Zero(4, d)};
  Eigen::VectorXd gomega = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd gitems = Eigen::MatrixXd::Zero(4, d);
  Eigen::VectorXd guser = Eigen::VectorXd::Zero(d);
  {
    ad::Tape tape;
    const ad::Var u = tape.leaf(user, ad::GradSink::whole(guser));
    std::vector<ad::Var> hv;
    for (const auto& e : hist.entries) {
      hv.push_back(tape.leaf(items.row(static_cast<Eigen::Index>(e.item)).transpose(),
                             ad::GradSink::row(gitems, static_cast<Eigen::Index>(e.item))));
    }
    const ad::Var w = attend_stack(tape, u, hist, hv, tp.omega, &gomega, blocks, gblocks, t);
    const ad::Var g = gru_step(tape, cell, &gcell, u, w);
    const ad::Var us = tape.shift(g, shift.user, &gshift.user, 1, 0.7);
    const ad::Var vs = tape.shift(g, shift.item, &gshift.item, 2, 0.7);
    const ad::Var r = tape.constant(readout);
    const ad::Var loss = tape.add(tape.dot(r, us), tape.scale(tape.dot(r, vs), 0.5));
    CHECK(tape.scalar(loss) == doctest::Approx(plain()).epsilon(1e-13));
    tape.backward(loss);
  }

  double worst = 0.0;
  auto check = [&](double& x, double analytic) {
    const double saved = x;
    x = saved + step;
    const double up = plain();
    x = saved - step;
    const double down = plain();
    x = saved;
    const double numeric = (up - down) / (2 * step);
    const double err = std::abs(analytic - numeric) /
                       std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    worst = std::max(worst, err);
  };
  auto check_matrix = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& g) {
    for (Eigen::Index i = 0; i < m.size(); ++i) check(m.data()[i], g.data()[i]);
  };
  auto check_vector = [&](Eigen::VectorXd& m, const Eigen::VectorXd& g) {
    for (Eigen::Index i = 0; i < m.size(); ++i) check(m.data()[i], g.data()[i]);
  };
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    check_matrix(blocks[k].query, gblocks[k].query);
    check_matrix(blocks[k].key, gblocks[k].key);
    check_matrix(blocks[k].value, gblocks[k].value);
  }
  check_matrix(cell.w_update, gcell.w_update);
  check_matrix(cell.u_update, gcell.u_update);
  check_matrix(cell.w_reset, gcell.w_reset);
  check_matrix(cell.u_reset, gcell.u_reset);
  check_matrix(cell.w_cand, gcell.w_cand);
  check_matrix(cell.u_cand, gcell.u_cand);
  check_vector(cell.b_update, gcell.b_update);
  check_vector(cell.b_reset, gcell.b_reset);
  check_vector(cell.b_cand, gcell.b_cand);
  check_matrix(shift.user, gshift.user);
  check_matrix(shift.item, gshift.item);
  check_vector(tp.omega, gomega);
  check_matrix(items, gitems);
  check_vector(user, guser);
  CHECK(worst < 1e-4);
}

TEST_CASE("attention dropout rescales kept weights") {
  const Eigen::Index d = 4;
  const std::vector<AttentionParams> blocks = {random_attention(d, d, 3)};
  const auto items = toy::random_matrix(3, d, 1.0, 4);
  const auto user = random_vector(d, 1.0, 5);
  const auto hist = history_of({{0, 0.1}, {1, 0.2}, {2, 0.3}});
  const auto tp = default_time_params(d);
  std::vector<ad::Var> hv;
  ad::Tape tape;
  for (const auto& e : hist.entries) {
    hv.push_back(tape.constant(items.row(static_cast<Eigen::Index>(e.item)).transpose()));
  }
  const ad::Var u = tape.constant(user);
  std::mt19937_64 rng(1);
  const ad::Var off = attend_stack(tape, u, hist, hv, tp.omega, nullptr, blocks, {}, 1.0,
                                   AttentionDropout{0.5, nullptr});
  CHECK((tape.value(off) - attend_stack(user, hist, items, tp, blocks, 1.0)).cwiseAbs().maxCoeff() <
        1e-15);
  // With a mask, the result is ReLU(sum of kept alpha_m V x_m / (1 - p)).
  double mean_norm = 0.0;
  for (int k = 0; k < 200; ++k) {
    const ad::Var on = attend_stack(tape, u, hist, hv, tp.omega, nullptr, blocks, {}, 1.0,
                                    AttentionDropout{0.5, &rng});
    CHECK(tape.value(on).minCoeff() >= 0.0);
    mean_norm += tape.value(on).sum() / 200.0;
  }
  CHECK(std::isfinite(mean_norm));
}
