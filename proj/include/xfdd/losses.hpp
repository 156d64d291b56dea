#pragma once

#include "xfdd/matrix.hpp"
#include "xfdd/model.hpp"

namespace xfdd {

// Weights of the composite supervised-autoencoder objective
//   (1/N) [ lambda1 sum ||x - x_hat||^2 + lambda2 sum CE_delta + lambda3 sum W^2 ].
// delta scales the cross-entropy of the first class (index 0, "normal") and
// only applies to two-class problems; 1.0 disables it.
struct CompositeLossConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.0;
  double delta = 1.0;

  void validate() const;

  friend bool operator==(const CompositeLossConfig&, const CompositeLossConfig&) = default;
};

struct LossBreakdown {
  double recon = 0.0;
  double cls = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

inline constexpr double kLogClamp = 1e-12;

// (1/2N) sum_s ||x_s - x_hat_s||^2
double reconstruction_loss(const Matrix& x, const Matrix& x_hat);

// (1/N) sum_s sum_c -y_sc log(max(p_sc, 1e-12)); y must be one-hot.
double softmax_cross_entropy(const Matrix& p, const Matrix& y);

// Two-class cross-entropy with the class-0 terms multiplied by delta.
double weighted_binary_cross_entropy(const Matrix& p, const Matrix& y, double delta);

// Sum of squared weights over every layer; biases excluded.
double l2_penalty(const Parameters& params);

// Composite objective on one batch. N is the number of rows in x, which for
// lag-augmented data is already N - l. The reconstruction term carries no 1/2,
// so with lambda1 = 1 it equals 2 * reconstruction_loss.
LossBreakdown composite_loss(const Model& model, const Matrix& x, const ForwardCache& cache,
                             const Matrix& y, const CompositeLossConfig& cfg);

// Throws LabelError unless every row holds a single 1 and zeros elsewhere.
void require_one_hot(const Matrix& y);

Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

}  // namespace xfdd
