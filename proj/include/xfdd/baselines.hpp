#pragma once

#include <cstddef>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/matrix.hpp"

namespace xfdd {

// PCA monitoring model on z-scored inputs with empirical control limits.
struct PcaModel {
  std::vector<ColumnScaling> scaling;  // per input column
  Matrix loadings;                     // d x k, orthonormal columns
  std::vector<double> eigenvalues;     // all d, nonincreasing
  std::size_t k = 0;
  double alpha = 0.99;
  double t2_limit = 0.0;
  double spe_limit = 0.0;

  std::size_t dim() const { return loadings.rows(); }
  double explained_variance() const;  // fraction carried by the first k
};

// Eigendecomposition of the training covariance (N - 1 normalization).
// Limits are the alpha-quantiles of the training statistics. Throws
// ConfigError when k is 0 or exceeds the numerical rank.
PcaModel fit_pca(const Matrix& normal_train, std::size_t k, double alpha = 0.99);

// Standardizes a raw row with the model's scaling.
std::vector<double> pca_standardize(const PcaModel& model, std::span<const double> raw);

// Both take a row already standardized with the model's parameters.
double t2_statistic(const PcaModel& model, std::span<const double> z);
double spe_statistic(const PcaModel& model, std::span<const double> z);

struct PcaDetection {
  std::vector<double> t2;
  std::vector<double> spe;
  std::vector<bool> t2_flag;
  std::vector<bool> spe_flag;
  std::vector<bool> flag;  // T2 or SPE over its limit
};

// Smallest k whose leading eigenvalues carry at least `fraction` of the total.
std::size_t components_for_variance(const std::vector<double>& eigenvalues, double fraction);

// Raw rows in, flags out.
PcaDetection detect_pca(const PcaModel& model, const Matrix& rows);

// Dynamic PCA: fit_pca on the lag-augmented normal data.
PcaModel fit_dpca(const Dataset& normal, std::size_t lag, std::size_t k, double alpha = 0.99);

}  // namespace xfdd
