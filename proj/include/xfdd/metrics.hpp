#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "xfdd/lrp.hpp"
#include "xfdd/matrix.hpp"
#include "xfdd/serialization.hpp"

namespace xfdd {

// counts[true][predicted].
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;
  std::vector<std::size_t> row_sums() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 const std::vector<std::string>& class_labels);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Percent of rows with fault_ids == fault_id that are flagged. Rows of a
// faulty test run before onset already carry fault id 0 and do not count.
double fault_detection_rate(const std::vector<bool>& flagged, const std::vector<int>& fault_ids,
                            int fault_id);

// Percent of normal rows (fault id 0) that are flagged.
double false_alarm_rate(const std::vector<bool>& flagged, const std::vector<int>& fault_ids);

// Rows = faults, columns = variables; each row scaled to max 1.
struct Heatmap {
  std::vector<int> faults;
  std::vector<std::string> variables;
  Matrix values;
};

// One report per fault, all over the same variables. Reports without samples
// are dropped with a warning.
Heatmap build_heatmap(const std::map<int, RelevanceReport>& reports);

// One report per fault present in `view`: relevance of the fault class for a
// detection model, of the fault's own class for diagnosis, averaged over that
// fault's correctly classified rows. Faults without such rows are skipped
// with a warning.
std::map<int, RelevanceReport> fault_relevance_reports(const ModelBundle& bundle,
                                                       const Dataset& view,
                                                       const RelevanceOptions& opts = {});

}  // namespace xfdd
