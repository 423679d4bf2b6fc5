#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgnpp/dynamics.hpp"
#include "dgnpp/embedding.hpp"

namespace dgnpp {

struct ModelDims {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t dim = 128;
  std::size_t attn_dim = 128;
  std::size_t sal_blocks = 4;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Every learnable tensor of the model. Gradients and optimizer moments use
// the same struct so the tensor lists line up one-to-one.
struct ModelParams {
  NodeEmbeddingTable nodes;
  TimeEmbeddingParams time;
  std::vector<AttentionParams> attention;
  GruParams gru;
  ShiftParams shift;

  ModelDims dims() const;
};

ModelParams init_model_params(const ModelDims& dims, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& params);

// Flat column-major view of one tensor.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  // Weight decay applies to matrices and tables; omega and biases are exempt.
  bool decayed = true;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Eigen::VectorXd> flat() const { return {data, size()}; }
};

// Stable order; identical for any two params of equal dims.
std::vector<TensorRef> tensors(ModelParams& params);
std::vector<TensorRef> tensors(const ModelParams& params);

std::size_t parameter_count(const ModelParams& params);
bool all_finite(const ModelParams& params);
void set_zero(ModelParams& params);
// a += b, tensor by tensor.
void accumulate(ModelParams& a, const ModelParams& b);

}  // namespace dgnpp
