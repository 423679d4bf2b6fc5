#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dgnpp::ad {

using Vec = Eigen::VectorXd;

// Destination for a leaf's gradient: a strided view into a parameter or
// gradient buffer (a matrix row, or a whole vector).
struct GradSink {
  double* data = nullptr;
  Eigen::Index size = 0;
  Eigen::Index stride = 1;

  explicit operator bool() const { return data != nullptr; }
  void accumulate(const Vec& g) const;

  static GradSink row(Eigen::MatrixXd& m, Eigen::Index r);
  static GradSink whole(Eigen::VectorXd& v);
};

struct Var {
  std::uint32_t id = 0;
};

// Vector-valued reverse-mode tape. Parameter matrices passed by reference
// must outlive the tape; their gradients go to the matching grad pointer
// (skipped when null).
class Tape {
 public:
  Var constant(Vec value);
  Var leaf(Vec value, GradSink sink);

  Var matvec(const Eigen::MatrixXd& w, Eigen::MatrixXd* grad_w, Var x);
  Var add_bias(Var x, const Eigen::VectorXd& b, Eigen::VectorXd* grad_b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var one_minus(Var a);
  Var mask(Var a, Vec m);
  Var concat(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  // Scalar (size-1) results.
  Var dot(Var a, Var b);
  Var log_softmax_at(Var logits, Eigen::Index index);
  Var sum(std::span<const Var> scalars);

  Var stack(std::span<const Var> scalars);
  Var softmax(Var a);
  Var weighted_sum(Var weights, std::span<const Var> xs);

  // cos/sin time encoding with learnable frequencies; see time_embedding().
  Var time_embedding(const Eigen::VectorXd& omega, Eigen::VectorXd* grad_omega,
                     double dt, double position);
  // (1 + dt * table.row(r)) elementwise-times x.
  Var shift(Var x, const Eigen::MatrixXd& table, Eigen::MatrixXd* grad_table,
            Eigen::Index r, double dt);

  const Vec& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = scale and sweeps the tape backwards.
  void backward(Var root, double scale = 1.0);

 private:
  struct Node {
    Vec value;
    Vec grad;
    std::function<void(Tape&, const Vec&)> back;
  };

  Var push(Vec value, std::function<void(Tape&, const Vec&)> back);
  void accumulate(Var v, const Vec& g);

  std::vector<Node> nodes_;
};

}  // namespace dgnpp::ad
