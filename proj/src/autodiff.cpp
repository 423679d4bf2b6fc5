#include "dgnpp/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "dgnpp/embedding.hpp"

namespace dgnpp::ad {

void GradSink::accumulate(const Vec& g) const {
  if (!data) return;
  Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<>> view(
      data, size, Eigen::InnerStride<>(stride));
  view += g;
}

GradSink GradSink::row(Eigen::MatrixXd& m, Eigen::Index r) {
  return {m.data() + r, m.cols(), m.rows()};
}

GradSink GradSink::whole(Eigen::VectorXd& v) { return {v.data(), v.size(), 1}; }

Var Tape::push(Vec value, std::function<void(Tape&, const Vec&)> back) {
  nodes_.push_back({std::move(value), Vec(), std::move(back)});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Vec& g) {
  auto& node = nodes_[v.id];
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

Var Tape::constant(Vec value) { return push(std::move(value), nullptr); }

Var Tape::leaf(Vec value, GradSink sink) {
  if (!sink) return constant(std::move(value));
  return push(std::move(value),
              [sink](Tape&, const Vec& g) { sink.accumulate(g); });
}

Var Tape::matvec(const Eigen::MatrixXd& w, Eigen::MatrixXd* grad_w, Var x) {
  if (w.cols() != value(x).size()) {
    throw std::invalid_argument("matvec: shape mismatch");
  }
  return push(w * value(x), [&w, grad_w, x](Tape& t, const Vec& g) {
    if (grad_w) grad_w->noalias() += g * t.value(x).transpose();
    t.accumulate(x, w.transpose() * g);
  });
}

Var Tape::add_bias(Var x, const Eigen::VectorXd& b, Eigen::VectorXd* grad_b) {
  return push(value(x) + b, [x, grad_b](Tape& t, const Vec& g) {
    if (grad_b) *grad_b += g;
    t.accumulate(x, g);
  });
}

Var Tape::add(Var a, Var b) {
  return push(value(a) + value(b), [a, b](Tape& t, const Vec& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  return push(value(a) - value(b), [a, b](Tape& t, const Vec& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::mul(Var a, Var b) {
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Vec& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var Tape::scale(Var a, double c) {
  return push(c * value(a), [a, c](Tape& t, const Vec& g) { t.accumulate(a, c * g); });
}

Var Tape::one_minus(Var a) {
  return push(1.0 - value(a).array(), [a](Tape& t, const Vec& g) { t.accumulate(a, -g); });
}

Var Tape::mask(Var a, Vec m) {
  Vec out = value(a).cwiseProduct(m);
  return push(std::move(out), [a, m = std::move(m)](Tape& t, const Vec& g) {
    t.accumulate(a, g.cwiseProduct(m));
  });
}

Var Tape::concat(Var a, Var b) {
  const auto na = value(a).size();
  const auto nb = value(b).size();
  Vec out(na + nb);
  out << value(a), value(b);
  return push(std::move(out), [a, b, na, nb](Tape& t, const Vec& g) {
    t.accumulate(a, g.head(na));
    t.accumulate(b, g.tail(nb));
  });
}

Var Tape::sigmoid(Var a) {
  Vec out = 1.0 / (1.0 + (-value(a).array()).exp());
  const Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [a, y](Tape& t, const Vec& g) {
    const auto& s = t.value(y);
    t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  };
  return y;
}

Var Tape::tanh(Var a) {
  Vec out = value(a).array().tanh();
  const Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [a, y](Tape& t, const Vec& g) {
    const auto& s = t.value(y);
    t.accumulate(a, g.cwiseProduct((1.0 - s.array().square()).matrix()));
  };
  return y;
}

Var Tape::relu(Var a) {
  return push(value(a).cwiseMax(0.0), [a](Tape& t, const Vec& g) {
    const auto& x = t.value(a);
    t.accumulate(a, Vec((x.array() > 0.0).select(g.array(), 0.0)));
  });
}

Var Tape::dot(Var a, Var b) {
  if (value(a).size() != value(b).size()) {
    throw std::invalid_argument("dot: size mismatch");
  }
  Vec out(1);
  out(0) = value(a).dot(value(b));
  return push(std::move(out), [a, b](Tape& t, const Vec& g) {
    t.accumulate(a, g(0) * t.value(b));
    t.accumulate(b, g(0) * t.value(a));
  });
}

Var Tape::log_softmax_at(Var logits, Eigen::Index index) {
  const auto& z = value(logits);
  const double peak = z.maxCoeff();
  const double log_norm = peak + std::log((z.array() - peak).exp().sum());
  Vec out(1);
  out(0) = z(index) - log_norm;
  return push(std::move(out), [logits, index, log_norm](Tape& t, const Vec& g) {
    Vec d = -(t.value(logits).array() - log_norm).exp().matrix();
    d(index) += 1.0;
    t.accumulate(logits, g(0) * d);
  });
}

Var Tape::sum(std::span<const Var> scalars) {
  Vec out = Vec::Zero(1);
  for (const Var s : scalars) out(0) += value(s)(0);
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return push(std::move(out), [inputs = std::move(inputs)](Tape& t, const Vec& g) {
    for (const Var s : inputs) t.accumulate(s, g);
  });
}

Var Tape::stack(std::span<const Var> scalars) {
  Vec out(static_cast<Eigen::Index>(scalars.size()));
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = value(scalars[i])(0);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return push(std::move(out), [inputs = std::move(inputs)](Tape& t, const Vec& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      t.accumulate(inputs[i], g.segment(static_cast<Eigen::Index>(i), 1));
    }
  });
}

Var Tape::softmax(Var a) {
  const auto& z = value(a);
  Vec e = (z.array() - z.maxCoeff()).exp();
  e /= e.sum();
  const Var y = push(std::move(e), nullptr);
  nodes_[y.id].back = [a, y](Tape& t, const Vec& g) {
    const auto& p = t.value(y);
    t.accumulate(a, p.cwiseProduct((g.array() - p.dot(g)).matrix()));
  };
  return y;
}

Var Tape::weighted_sum(Var weights, std::span<const Var> xs) {
  const auto& w = value(weights);
  if (w.size() != static_cast<Eigen::Index>(xs.size()) || xs.empty()) {
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  }
  Vec out = Vec::Zero(value(xs[0]).size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += w(static_cast<Eigen::Index>(i)) * value(xs[i]);
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return push(std::move(out), [weights, inputs = std::move(inputs)](Tape& t, const Vec& g) {
    Vec gw(static_cast<Eigen::Index>(inputs.size()));
    const Vec w = t.value(weights);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      gw(ii) = g.dot(t.value(inputs[i]));
      t.accumulate(inputs[i], w(ii) * g);
    }
    t.accumulate(weights, gw);
  });
}

Var Tape::time_embedding(const Eigen::VectorXd& omega, Eigen::VectorXd* grad_omega,
                         double dt, double position) {
  const auto dim = static_cast<std::size_t>(omega.size());
  Vec out(omega.size());
  Vec slope(omega.size());  // d out_i / d omega_i
  for (std::size_t i = 1; i <= dim; ++i) {
    const auto j = static_cast<Eigen::Index>(i - 1);
    const double arg = omega(j) * dt + time_phase(i, dim, position);
    if (i % 2 == 1) {
      out(j) = std::cos(arg);
      slope(j) = -dt * std::sin(arg);
    } else {
      out(j) = std::sin(arg);
      slope(j) = dt * std::cos(arg);
    }
  }
  if (!grad_omega) return constant(std::move(out));
  return push(std::move(out), [grad_omega, slope = std::move(slope)](Tape&, const Vec& g) {
    *grad_omega += g.cwiseProduct(slope);
  });
}

Var Tape::shift(Var x, const Eigen::MatrixXd& table, Eigen::MatrixXd* grad_table,
                Eigen::Index r, double dt) {
  Vec factor = 1.0 + dt * table.row(r).transpose().array();
  Vec out = factor.cwiseProduct(value(x));
  return push(std::move(out), [x, grad_table, r, dt, factor = std::move(factor)](
                                  Tape& t, const Vec& g) {
    if (grad_table) {
      grad_table->row(r) += (dt * g.cwiseProduct(t.value(x))).transpose();
    }
    t.accumulate(x, g.cwiseProduct(factor));
  });
}

void Tape::backward(Var root, double scale) {
  if (nodes_[root.id].value.size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar");
  }
  nodes_[root.id].grad = Vec::Constant(1, scale);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.grad.size() == 0 || !node.back) continue;
    // The closure may append to grads of earlier nodes only.
    const Vec g = std::move(node.grad);
    node.back(*this, g);
  }
}

}  // namespace dgnpp::ad
