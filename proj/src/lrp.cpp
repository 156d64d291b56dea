#include "xfdd/lrp.hpp"

#include <algorithm>
#include <cmath>

#include "xfdd/errors.hpp"
#include "xfdd/log.hpp"
#include "xfdd/nn.hpp"

namespace xfdd {

double RelevanceVector::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double RelevanceReport::max_relevance() const {
  return mean_abs.empty() ? 0.0 : *std::max_element(mean_abs.begin(), mean_abs.end());
}

namespace {

// Redistributes `upper` (relevance of the layer outputs) onto the layer inputs.
std::vector<double> redistribute(const DenseLayer& layer, std::span<const double> input,
                                 std::span<const double> pre, const std::vector<double>& upper,
                                 double epsilon) {
  std::vector<double> lower(layer.in_dim(), 0.0);
  for (std::size_t u = 0; u < layer.out_dim(); ++u) {
    if (upper[u] == 0.0) continue;
    const double z = pre[u];
    const double denom = z + epsilon * (z >= 0.0 ? 1.0 : -1.0);
    if (denom == 0.0) continue;
    const double ratio = upper[u] / denom;
    auto w = layer.weights.row(u);
    for (std::size_t l = 0; l < lower.size(); ++l) lower[l] += input[l] * w[l] * ratio;
  }
  return lower;
}

RelevanceVector relevance_from_cache(const Model& model, const ForwardCache& cache,
                                     std::size_t row, int cls, double epsilon) {
  RelevanceVector out;
  out.cls = cls;
  out.score = cache.logits(row, static_cast<std::size_t>(cls));
  std::vector<double> rel(model.spec.num_classes, 0.0);
  rel[static_cast<std::size_t>(cls)] = out.score;
  rel = redistribute(model.params.classifier, cache.latent().row(row), cache.logits.row(row), rel,
                     epsilon);
  for (std::size_t k = model.params.encoder.size(); k-- > 0;) {
    rel = redistribute(model.params.encoder[k], cache.encoder_acts[k].row(row),
                       cache.encoder_pre[k].row(row), rel, epsilon);
  }
  for (double v : rel) {
    if (!std::isfinite(v)) throw AttributionError("relevance became non-finite");
  }
  out.values = std::move(rel);
  return out;
}

void check_class(const Model& model, int cls) {
  if (cls < 0 || static_cast<std::size_t>(cls) >= model.spec.num_classes) {
    throw AttributionError("class " + std::to_string(cls) + " out of range for a " +
                           std::to_string(model.spec.num_classes) + "-class model");
  }
}

}  // namespace

RelevanceVector relevance_sample(const Model& model, std::span<const double> x, int cls,
                                 double epsilon) {
  check_class(model, cls);
  Matrix batch(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return relevance_from_cache(model, forward(model, batch), 0, cls, epsilon);
}

std::vector<RelevanceVector> relevance_batch(const Model& model, const Matrix& batch, int cls,
                                             double epsilon) {
  check_class(model, cls);
  const ForwardCache cache = forward(model, batch);
  std::vector<RelevanceVector> out;
  out.reserve(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    out.push_back(relevance_from_cache(model, cache, r, cls, epsilon));
  }
  return out;
}

void apply_threshold(RelevanceReport& report, double lambda) {
  report.lambda = lambda;
  report.threshold = lambda * report.max_relevance();
  report.prune_candidates.clear();
  for (std::size_t j = 0; j < report.variables.size(); ++j) {
    if (report.mean_abs[j] < report.threshold) report.prune_candidates.push_back(report.variables[j]);
  }
}

RelevanceReport average_relevance(const Model& model, const Dataset& ds, int cls,
                                  const RelevanceOptions& opts, std::optional<int> fault_id) {
  check_class(model, cls);
  const auto active = ds.active_indices();
  const std::size_t d = active.size();
  if (d * (ds.lag + 1) != model.spec.input_dim) {
    throw ShapeError("dataset layout does not match the model input");
  }
  RelevanceReport report;
  report.cls = cls;
  report.variables = active;
  for (auto v : active) report.names.push_back(ds.catalog[v].name);
  report.mean_abs.assign(d, 0.0);
  report.mean_signed.assign(d, 0.0);
  report.epsilon = opts.epsilon;

  const ForwardCache cache = forward(model, ds.X);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (ds.labels[r] != cls) continue;
    if (fault_id && ds.fault_ids[r] != *fault_id) continue;
    auto z = cache.logits.row(r);
    if (std::max_element(z.begin(), z.end()) - z.begin() != cls) continue;
    const RelevanceVector rv = relevance_from_cache(model, cache, r, cls, opts.epsilon);
    for (std::size_t k = 0; k <= ds.lag; ++k) {
      for (std::size_t j = 0; j < d; ++j) {
        const double v = rv.values[k * d + j];
        report.mean_abs[j] += std::abs(v);
        report.mean_signed[j] += v;
      }
    }
    ++report.n_samples;
  }
  if (report.n_samples == 0) {
    throw AttributionError("no correctly classified sample of class " + std::to_string(cls) +
                           (fault_id ? " (fault " + std::to_string(*fault_id) + ")" : ""));
  }
  const double inv = 1.0 / static_cast<double>(report.n_samples);
  for (std::size_t j = 0; j < d; ++j) {
    report.mean_abs[j] *= inv;
    report.mean_signed[j] *= inv;
  }
  apply_threshold(report, opts.lambda);
  return report;
}

RelevanceReport overall_relevance(const Model& model, const Dataset& ds,
                                  const RelevanceOptions& opts) {
  RelevanceReport total;
  bool any = false;
  for (std::size_t c = 0; c < model.spec.num_classes; ++c) {
    RelevanceReport rep;
    try {
      rep = average_relevance(model, ds, static_cast<int>(c), opts);
    } catch (const AttributionError& e) {
      log::warn(std::string("skipping class in overall relevance: ") + e.what());
      continue;
    }
    if (!any) {
      total = rep;
      total.cls = -1;
      total.n_samples = 0;
      std::fill(total.mean_abs.begin(), total.mean_abs.end(), 0.0);
      std::fill(total.mean_signed.begin(), total.mean_signed.end(), 0.0);
      any = true;
    }
    const double w = static_cast<double>(rep.n_samples);
    for (std::size_t j = 0; j < rep.mean_abs.size(); ++j) {
      total.mean_abs[j] += w * rep.mean_abs[j];
      total.mean_signed[j] += w * rep.mean_signed[j];
    }
    total.n_samples += rep.n_samples;
  }
  if (!any) throw AttributionError("no class has a correctly classified sample");
  const double inv = 1.0 / static_cast<double>(total.n_samples);
  for (std::size_t j = 0; j < total.mean_abs.size(); ++j) {
    total.mean_abs[j] *= inv;
    total.mean_signed[j] *= inv;
  }
  apply_threshold(total, opts.lambda);
  return total;
}

std::vector<bool> prune_mask(const RelevanceReport& report, double lambda,
                             std::size_t catalog_size) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("prune threshold lambda must be in (0, 1]");
  std::vector<bool> mask(catalog_size, false);
  const double threshold = lambda * report.max_relevance();
  for (std::size_t j = 0; j < report.variables.size(); ++j) {
    if (report.variables[j] >= catalog_size) throw ShapeError("report variable outside catalog");
    if (report.mean_abs[j] >= threshold) mask[report.variables[j]] = true;
  }
  return mask;
}

}  // namespace xfdd
