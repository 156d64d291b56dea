#include "xfdd/losses.hpp"

#include <algorithm>
#include <cmath>

#include "xfdd/errors.hpp"

namespace xfdd {

void CompositeLossConfig::validate() const {
  for (double v : {lambda1, lambda2, lambda3, delta}) {
    if (!std::isfinite(v)) throw ConfigError("loss weights must be finite");
  }
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) {
    throw ConfigError("loss weights lambda1..3 must be nonnegative");
  }
  if (delta <= 0) throw ConfigError("class weight delta must be positive");
}

void require_one_hot(const Matrix& y) {
  for (std::size_t r = 0; r < y.rows(); ++r) {
    int ones = 0;
    for (double v : y.row(r)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw LabelError("target row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (ones != 1) throw LabelError("target row " + std::to_string(r) + " is not one-hot");
  }
}

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  Matrix y(labels.size(), num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= num_classes) {
      throw LabelError("label " + std::to_string(labels[r]) + " out of range");
    }
    y(r, static_cast<std::size_t>(labels[r])) = 1.0;
  }
  return y;
}

double reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
  require_shape(x_hat, x.rows(), x.cols(), "reconstruction");
  if (x.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x.data()[i] - x_hat.data()[i];
    sum += d * d;
  }
  return sum / (2.0 * static_cast<double>(x.rows()));
}

namespace {

// Per-row class weights; delta multiplies class 0.
double weighted_ce(const Matrix& p, const Matrix& y, double delta) {
  require_shape(y, p.rows(), p.cols(), "cross-entropy targets");
  require_one_hot(y);
  if (p.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (std::size_t c = 0; c < p.cols(); ++c) {
      if (y(r, c) == 0.0) continue;
      double w = c == 0 ? delta : 1.0;
      sum -= w * std::log(std::max(p(r, c), kLogClamp));
    }
  }
  return sum / static_cast<double>(p.rows());
}

}  // namespace

double softmax_cross_entropy(const Matrix& p, const Matrix& y) { return weighted_ce(p, y, 1.0); }

double weighted_binary_cross_entropy(const Matrix& p, const Matrix& y, double delta) {
  if (p.cols() != 2) {
    throw ConfigError("weighted cross-entropy needs exactly 2 classes, got " +
                      std::to_string(p.cols()));
  }
  if (!(delta > 0)) throw ConfigError("class weight delta must be positive");
  return weighted_ce(p, y, delta);
}

double l2_penalty(const Parameters& params) {
  double sum = 0.0;
  params.for_each([&](const std::string&, const DenseLayer& layer) {
    for (double w : layer.weights.data()) sum += w * w;
  });
  return sum;
}

LossBreakdown composite_loss(const Model& model, const Matrix& x, const ForwardCache& cache,
                             const Matrix& y, const CompositeLossConfig& cfg) {
  cfg.validate();
  if (cfg.delta != 1.0 && model.spec.num_classes != 2) {
    throw ConfigError("class weight delta only applies to two-class detection");
  }
  const double n = static_cast<double>(x.rows());
  LossBreakdown out;
  if (x.rows() == 0) return out;
  out.recon = cfg.lambda1 * 2.0 * reconstruction_loss(x, cache.reconstruction());
  out.cls = cfg.lambda2 * weighted_ce(cache.probs, y, cfg.delta);
  out.l2 = cfg.lambda3 * l2_penalty(model.params) / n;
  out.total = out.recon + out.cls + out.l2;
  return out;
}

}  // namespace xfdd
