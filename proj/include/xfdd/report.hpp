#pragma once

#include <map>
#include <string>
#include <vector>

#include "xfdd/lrp.hpp"
#include "xfdd/metrics.hpp"
#include "xfdd/pipeline.hpp"
#include "xfdd/training.hpp"

namespace xfdd {

// Shortest round-trip decimal form; stable across runs.
std::string format_number(double value);

// Writes `text` to `path`, replacing the file. Throws DataError on failure.
void write_text(const std::string& path, const std::string& text);

std::string ledger_csv(const std::vector<PruneIterationRecord>& ledger, std::size_t selected);
std::string relevance_csv(const RelevanceReport& report);
std::string relevance_json(const RelevanceReport& report);
std::string confusion_csv(const ConfusionMatrix& cm);
std::string heatmap_csv(const Heatmap& heatmap);
std::string loss_trace_csv(const std::vector<LossTraceRow>& trace);

// One detector's flags over its own (possibly lag-trimmed) rows.
struct DetectionColumn {
  std::string method;
  std::vector<bool> flagged;
  std::vector<int> fault_ids;
};

// Per-fault detection rates in percent, then the average over faults and the
// false alarm rate. Faults missing from a column are left blank.
std::string fdr_table_csv(const std::vector<DetectionColumn>& columns);

// Per-class recall in percent for a diagnosis model.
std::string class_rates_csv(const ConfusionMatrix& cm);

// Sources, standardization, mask, lag and split seed behind a trained model.
std::string dataset_manifest_json(const PreparedData& data, const std::vector<bool>& mask,
                                  std::size_t lag, std::uint64_t split_seed,
                                  const std::map<std::string, std::string>& sources);

std::string heatmap_svg(const Heatmap& heatmap);
std::string relevance_bar_svg(const RelevanceReport& report);

}  // namespace xfdd
