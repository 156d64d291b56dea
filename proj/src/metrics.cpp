#include "xfdd/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "xfdd/errors.hpp"
#include "xfdd/log.hpp"

namespace xfdd {

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

std::vector<std::size_t> ConfusionMatrix::row_sums() const {
  std::vector<std::size_t> out;
  for (const auto& row : counts) out.push_back(std::accumulate(row.begin(), row.end(), std::size_t{0}));
  return out;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 const std::vector<std::string>& class_labels) {
  if (preds.size() != labels.size()) throw ShapeError("prediction/label length mismatch");
  const std::size_t m = class_labels.size();
  ConfusionMatrix cm{class_labels, std::vector<std::vector<std::size_t>>(m, std::vector<std::size_t>(m, 0))};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || preds[i] < 0 || static_cast<std::size_t>(labels[i]) >= m ||
        static_cast<std::size_t>(preds[i]) >= m) {
      throw LabelError("class index outside the confusion matrix");
    }
    ++cm.counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
  }
  return cm;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw ShapeError("prediction/label length mismatch");
  if (preds.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

namespace {

double flagged_percent(const std::vector<bool>& flagged, const std::vector<int>& fault_ids,
                       int fault_id, const char* what) {
  if (flagged.size() != fault_ids.size()) throw ShapeError("flag/fault-id length mismatch");
  std::size_t n = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    if (fault_ids[i] != fault_id) continue;
    ++n;
    hit += flagged[i];
  }
  if (n == 0) throw DataError(std::string("no rows for ") + what);
  return 100.0 * static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

double fault_detection_rate(const std::vector<bool>& flagged, const std::vector<int>& fault_ids,
                            int fault_id) {
  return flagged_percent(flagged, fault_ids, fault_id,
                         ("fault " + std::to_string(fault_id)).c_str());
}

double false_alarm_rate(const std::vector<bool>& flagged, const std::vector<int>& fault_ids) {
  return flagged_percent(flagged, fault_ids, 0, "normal operation");
}

Heatmap build_heatmap(const std::map<int, RelevanceReport>& reports) {
  Heatmap hm;
  const RelevanceReport* first = nullptr;
  for (const auto& [fault, rep] : reports) {
    if (rep.n_samples == 0 || rep.mean_abs.empty()) {
      log::warn("no relevance for fault " + std::to_string(fault) + "; heatmap row omitted");
      continue;
    }
    if (first == nullptr) {
      first = &rep;
      hm.variables = rep.names;
    } else if (rep.variables != first->variables) {
      throw ShapeError("heatmap reports cover different variables");
    }
    hm.faults.push_back(fault);
  }
  hm.values = Matrix(hm.faults.size(), hm.variables.size());
  for (std::size_t i = 0; i < hm.faults.size(); ++i) {
    const auto& rep = reports.at(hm.faults[i]);
    const double mx = rep.max_relevance();
    for (std::size_t j = 0; j < hm.variables.size(); ++j) {
      hm.values(i, j) = mx > 0.0 ? rep.mean_abs[j] / mx : 0.0;
    }
  }
  return hm;
}

std::map<int, RelevanceReport> fault_relevance_reports(const ModelBundle& bundle,
                                                       const Dataset& view,
                                                       const RelevanceOptions& opts) {
  std::map<int, RelevanceReport> out;
  const std::set<int> faults(view.fault_ids.begin(), view.fault_ids.end());
  for (int f : faults) {
    if (f == 0) continue;
    try {
      if (bundle.mode == Mode::kDetect) {
        out[f] = average_relevance(bundle.model, view, 1, opts, f);
      } else {
        const auto& ids = bundle.class_fault_ids;
        const auto it = std::find(ids.begin(), ids.end(), f);
        if (it == ids.end()) continue;
        out[f] = average_relevance(bundle.model, view, static_cast<int>(it - ids.begin()), opts);
      }
    } catch (const AttributionError& e) {
      log::warn("heatmap row for fault " + std::to_string(f) + " omitted: " + e.what());
    }
  }
  return out;
}

}  // namespace xfdd
