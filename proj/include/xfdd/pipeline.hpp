#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/losses.hpp"
#include "xfdd/lrp.hpp"
#include "xfdd/model.hpp"
#include "xfdd/serialization.hpp"
#include "xfdd/training.hpp"

namespace xfdd {

struct PipelineConfig {
  Mode mode = Mode::kDetect;
  // Encoder widths per candidate; decoders mirror them.
  std::vector<std::vector<std::size_t>> architectures{{8, 4}};
  std::vector<CompositeLossConfig> loss_grid{CompositeLossConfig{}};
  // Pruning thresholds tried in order; the next one is used once nothing
  // falls below the current one.
  std::vector<double> lambda_schedule{0.01};
  std::vector<std::size_t> lags{};
  std::size_t patience = 1;
  // Validation accuracy may fall this far below the best before the loop stops.
  double accuracy_tolerance = 0.001;
  std::size_t max_iterations = 8;
  double epsilon = 1e-3;
  double val_fraction = 0.2;
  TrainSchedule schedule{};
  ActivationKind hidden_activation = ActivationKind::kTanh;
  ActivationKind reconstruction_activation = ActivationKind::kLinear;
  std::set<int> excluded_faults{3, 9, 15};
  // Linear baselines reported next to the network; 0 components picks the
  // smallest count explaining 90% of the variance.
  std::size_t pca_components = 0;
  std::size_t dpca_lag = 2;
  std::size_t dpca_components = 0;
  bool include_normal = false;
  // Rows before this position in each test run are relabelled normal.
  std::optional<std::size_t> test_onset;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

// Parses the JSON config document; unknown keys are rejected.
PipelineConfig config_from_json_string(const std::string& text);
std::string config_to_json_string(const PipelineConfig& cfg);

// Standardized data and the fixed train/validation split every iteration
// reuses.
struct PreparedData {
  Dataset train_full;  // standardized training rows (train + validation)
  Dataset test;        // standardized test rows
  Dataset reference;   // carries the class list
  std::set<std::size_t> val_origins;
  std::vector<ColumnScaling> scaling;
  std::vector<bool> base_mask;
  std::vector<std::string> warnings;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

PreparedData prepare_data(const PipelineConfig& cfg, const Dataset& raw_train,
                          const Dataset& raw_test);

// Labelled train/val/test for a mask and lag.
Splits materialize(const PipelineConfig& cfg, const PreparedData& data,
                   const std::vector<bool>& mask, std::size_t lag);

struct PruneIterationRecord {
  std::string block;  // "static" or "lag<l>"
  std::size_t iteration = 1;
  std::string network;  // DSAE, xDSAE, DDSAE (lag 2), xDDSAE (lag 2)
  std::size_t lag = 0;
  std::string architecture;
  std::vector<std::string> retained;
  std::vector<bool> mask;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double lambda = 0.0;  // threshold that produced the next mask
  CompositeLossConfig loss;
};

struct PhaseResult {
  std::vector<PruneIterationRecord> records;
  std::vector<Model> models;  // parallel to records
  std::vector<RelevanceReport> relevance;  // parallel to records (validation set)
  std::vector<std::vector<LossTraceRow>> traces;  // parallel to records
  std::size_t best = 0;       // index into records
  std::vector<bool> final_mask;
};

// Index of the record with the highest validation accuracy; ties go to the
// smaller input set, then the earlier record.
std::size_t select_best(const std::vector<PruneIterationRecord>& records);

// Select, train, explain, prune and retrain until nothing falls below the
// last threshold or validation accuracy drops.
PhaseResult run_static_phase(const PipelineConfig& cfg, const PreparedData& data);

// The same loop on lag-augmented copies of the reduced variable set, one
// block per lag candidate.
PhaseResult run_dynamic_phase(const PipelineConfig& cfg, const PreparedData& data,
                              const std::vector<bool>& mask);

struct PipelineResult {
  PreparedData data;
  PhaseResult static_phase;
  PhaseResult dynamic_phase;
  std::vector<PruneIterationRecord> ledger;  // static then dynamic
  std::size_t selected = 0;                  // index into ledger
  ModelBundle bundle;                        // the selected model
  Splits selected_splits;
  std::vector<LossTraceRow> selected_trace;
};

PipelineResult run_pipeline(const PipelineConfig& cfg, const Dataset& raw_train,
                            const Dataset& raw_test);

// Raw rows scaled, masked, lagged and labelled the way `bundle` expects.
// Rows whose fault id the model has no class for are dropped.
Dataset bundle_view(const ModelBundle& bundle, const Dataset& raw);

// Streaming inference on raw rows.
struct Verdict {
  enum class Status { kBuffering, kScored };
  Status status = Status::kBuffering;
  int cls = -1;
  int fault_id = 0;
  double probability = 0.0;
  bool alarm = false;
  // Per active base variable, sum over lag copies of |R|; empty unless
  // attribution was requested and the row raised an alarm.
  std::vector<double> attribution;
};

class OnlineScorer {
 public:
  explicit OnlineScorer(ModelBundle bundle, bool attribute = false, double epsilon = 1e-3);

  // One raw row over the full catalog. Buffers until lag rows of history exist.
  Verdict push(std::span<const double> raw_row);
  void reset() { history_.clear(); }

  const ModelBundle& bundle() const { return bundle_; }

 private:
  ModelBundle bundle_;
  bool attribute_;
  double epsilon_;
  std::vector<std::size_t> active_;
  std::vector<std::vector<double>> history_;  // newest last
};

std::vector<Verdict> score_online(const ModelBundle& bundle, const Matrix& raw_rows,
                                  bool attribute = false);

}  // namespace xfdd
