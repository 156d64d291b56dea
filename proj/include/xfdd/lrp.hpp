#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/model.hpp"

namespace xfdd {

// Relevance of every input column for one sample and one class score.
struct RelevanceVector {
  std::vector<double> values;
  int cls = 0;
  // The class logit f_c that was redistributed.
  double score = 0.0;

  double sum() const;
};

// Epsilon-rule LRP through the encoder and classifier head. The decoder does
// not take part. Each layer redistributes R_u onto its inputs in proportion
// to a_l w_lu / (z_u + eps * sign(z_u)), z_u being the cached pre-activation.
RelevanceVector relevance_sample(const Model& model, std::span<const double> x, int cls,
                                 double epsilon);

// Same, for every row of a batch in one forward pass.
std::vector<RelevanceVector> relevance_batch(const Model& model, const Matrix& batch, int cls,
                                             double epsilon);

struct RelevanceOptions {
  double epsilon = 1e-3;
  double lambda = 0.01;
};

// Averaged relevance per active base variable.
struct RelevanceReport {
  int cls = -1;                          // -1 for the multi-class aggregate
  std::vector<std::size_t> variables;    // catalog indices of active variables
  std::vector<std::string> names;
  std::vector<double> mean_abs;          // mean over samples of sum_lag |R|
  std::vector<double> mean_signed;       // mean over samples of sum_lag R
  std::size_t n_samples = 0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double threshold = 0.0;
  std::vector<std::size_t> prune_candidates;  // catalog indices below threshold

  double max_relevance() const;
};

// Sets lambda, the threshold lambda * max and the candidate list.
void apply_threshold(RelevanceReport& report, double lambda);

// Averages over the rows labelled `cls` that the model also predicts as
// `cls`. With `fault_id` only rows of that source fault count. Throws
// AttributionError naming the class when no row qualifies.
RelevanceReport average_relevance(const Model& model, const Dataset& ds, int cls,
                                  const RelevanceOptions& opts = {},
                                  std::optional<int> fault_id = std::nullopt);

// Per-class reports combined with weights N_c. Classes without a correctly
// classified sample are skipped with a warning.
RelevanceReport overall_relevance(const Model& model, const Dataset& ds,
                                  const RelevanceOptions& opts = {});

// Keep mask over the catalog: active variables with relevance >= lambda * max.
std::vector<bool> prune_mask(const RelevanceReport& report, double lambda,
                             std::size_t catalog_size);

}  // namespace xfdd
