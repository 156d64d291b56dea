#pragma once

#include <cstdint>
#include <vector>

#include "xfdd/losses.hpp"
#include "xfdd/matrix.hpp"
#include "xfdd/model.hpp"

namespace xfdd {

// Glorot-style init: W ~ U(-a, a) with a = 1/sqrt(fan_in + fan_out), zero
// biases. Deterministic in spec.seed.
Model init_model(const NetworkSpec& spec);

// Row-wise softmax, shifted by the row max.
Matrix softmax_rows(const Matrix& logits);

ForwardCache forward(const Model& model, const Matrix& batch);

// Exact gradient of composite_loss for the batch that produced `cache`.
Gradients backward(const Model& model, const ForwardCache& cache, const Matrix& targets,
                   const CompositeLossConfig& cfg);

// Arg-max class per row.
std::vector<int> predict(const Model& model, const Matrix& batch);

struct OptimizerState {
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_model(const Model& model, double learning_rate = 1e-3);
};

// One bias-corrected adaptive-moment update. Throws DivergenceError naming the
// block when a gradient is not finite; the model is left untouched then.
void adam_step(Model& model, const Gradients& grads, OptimizerState& state);

}  // namespace xfdd
