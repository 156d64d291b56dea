#include "xfdd/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "xfdd/errors.hpp"

namespace xfdd {
namespace {

double quantile(std::vector<double> values, double alpha) {
  std::sort(values.begin(), values.end());
  auto idx = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(values.size())));
  idx = std::clamp<std::size_t>(idx, 1, values.size()) - 1;
  return values[idx];
}

}  // namespace

double PcaModel::explained_variance() const {
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  const double kept = std::accumulate(eigenvalues.begin(),
                                      eigenvalues.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return total > 0.0 ? kept / total : 0.0;
}

PcaModel fit_pca(const Matrix& normal_train, std::size_t k, double alpha) {
  const std::size_t n = normal_train.rows();
  const std::size_t d = normal_train.cols();
  if (n < 2 || d == 0) throw DataError("PCA needs at least two rows and one column");
  if (k == 0 || k > d) throw ConfigError("PCA component count must be in 1..d");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("PCA confidence must be in (0, 1)");

  PcaModel model;
  model.alpha = alpha;
  model.scaling.resize(d);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += normal_train(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (normal_train(r, j) - mean) * (normal_train(r, j) - mean);
    double sd = std::sqrt(var / static_cast<double>(n - 1));
    if (!(sd > 0.0)) sd = 1.0;
    model.scaling[j] = {mean, sd};
    for (std::size_t r = 0; r < n; ++r) {
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = (normal_train(r, j) - mean) / sd;
    }
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("covariance eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  model.eigenvalues.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    model.eigenvalues[i] = std::max(0.0, evals(static_cast<Eigen::Index>(d - 1 - i)));
  }
  const double tol = 1e-10 * std::max(model.eigenvalues.front(), 1e-300);
  const auto rank = static_cast<std::size_t>(
      std::count_if(model.eigenvalues.begin(), model.eigenvalues.end(),
                    [&](double v) { return v > tol; }));
  if (k > rank) {
    throw ConfigError("PCA asked for " + std::to_string(k) + " components, data rank is " +
                      std::to_string(rank));
  }
  model.k = k;
  model.loadings = Matrix(d, k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    evecs.col(col).cwiseAbs().maxCoeff(&arg);
    const double sign = evecs(arg, col) < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      model.loadings(j, c) = sign * evecs(static_cast<Eigen::Index>(j), col);
    }
  }

  std::vector<double> t2(n);
  std::vector<double> spe(n);
  std::vector<double> row(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    }
    t2[r] = t2_statistic(model, row);
    spe[r] = spe_statistic(model, row);
  }
  model.t2_limit = quantile(std::move(t2), alpha);
  model.spe_limit = quantile(std::move(spe), alpha);
  return model;
}

std::vector<double> pca_standardize(const PcaModel& model, std::span<const double> raw) {
  if (raw.size() != model.dim()) throw ShapeError("row width does not match the PCA model");
  std::vector<double> z(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    z[j] = (raw[j] - model.scaling[j].mean) / model.scaling[j].std;
  }
  return z;
}

double t2_statistic(const PcaModel& model, std::span<const double> z) {
  if (z.size() != model.dim()) throw ShapeError("row width does not match the PCA model");
  double t2 = 0.0;
  for (std::size_t c = 0; c < model.k; ++c) {
    const double lambda = model.eigenvalues[c];
    if (!(lambda > 0.0)) throw DataError("zero eigenvalue in the retained PCA subspace");
    double score = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) score += model.loadings(j, c) * z[j];
    t2 += score * score / lambda;
  }
  return t2;
}

double spe_statistic(const PcaModel& model, std::span<const double> z) {
  if (z.size() != model.dim()) throw ShapeError("row width does not match the PCA model");
  std::vector<double> scores(model.k, 0.0);
  for (std::size_t c = 0; c < model.k; ++c) {
    for (std::size_t j = 0; j < z.size(); ++j) scores[c] += model.loadings(j, c) * z[j];
  }
  double spe = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    double proj = 0.0;
    for (std::size_t c = 0; c < model.k; ++c) proj += model.loadings(j, c) * scores[c];
    spe += (z[j] - proj) * (z[j] - proj);
  }
  return spe;
}

PcaDetection detect_pca(const PcaModel& model, const Matrix& rows) {
  PcaDetection out;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto z = pca_standardize(model, rows.row(r));
    const double t2 = t2_statistic(model, z);
    const double spe = spe_statistic(model, z);
    out.t2.push_back(t2);
    out.spe.push_back(spe);
    out.t2_flag.push_back(t2 > model.t2_limit);
    out.spe_flag.push_back(spe > model.spe_limit);
    out.flag.push_back(out.t2_flag.back() || out.spe_flag.back());
  }
  return out;
}

std::size_t components_for_variance(const std::vector<double>& eigenvalues, double fraction) {
  if (eigenvalues.empty()) throw ConfigError("no eigenvalues");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("variance fraction must be in (0, 1]");
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  double kept = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    kept += eigenvalues[k];
    if (kept >= fraction * total) return k + 1;
  }
  return eigenvalues.size();
}

PcaModel fit_dpca(const Dataset& normal, std::size_t lag, std::size_t k, double alpha) {
  return fit_pca(lag_augment(normal, lag).X, k, alpha);
}

}  // namespace xfdd
