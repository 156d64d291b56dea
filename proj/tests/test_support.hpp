#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/matrix.hpp"
#include "xfdd/model.hpp"
#include "xfdd/nn.hpp"

namespace xfdd::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

// Rows of a random probability matrix, every entry bounded away from zero.
inline Matrix random_probs(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  Matrix p(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += p(r, c) = dist(rng);
    for (std::size_t c = 0; c < cols; ++c) p(r, c) /= s;
  }
  return p;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, static_cast<int>(m) - 1);
  std::vector<int> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

// Model with every weight and bias drawn from N(0, scale^2).
inline Model random_model(const NetworkSpec& spec, std::mt19937_64& rng, double scale = 0.7,
                          bool with_bias = true) {
  Model m = init_model(spec);
  std::normal_distribution<double> dist(0.0, scale);
  m.params.for_each([&](const std::string&, DenseLayer& layer) {
    for (auto& w : layer.weights.data()) w = dist(rng);
    for (auto& b : layer.bias) b = with_bias ? dist(rng) : 0.0;
  });
  return m;
}

// Unlabelled dataset over generic names v1..vd with a single run.
inline Dataset make_dataset(const Matrix& x, std::vector<int> fault_ids,
                            std::vector<int> runs = {}) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < x.cols(); ++j) names.push_back("v" + std::to_string(j + 1));
  Dataset ds;
  ds.X = x;
  ds.catalog = VariableCatalog::from_names(names);
  ds.active_mask.assign(x.cols(), true);
  ds.fault_ids = std::move(fault_ids);
  ds.runs = runs.empty() ? std::vector<int>(x.rows(), 0) : std::move(runs);
  ds.origin.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) ds.origin[r] = r;
  std::vector<int> ids(ds.fault_ids.begin(), ds.fault_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  ds.class_fault_ids = ids;
  ds.labels.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    ds.labels[r] = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), ds.fault_ids[r]) -
                                    ids.begin());
  }
  return ds;
}

}  // namespace xfdd::testing
