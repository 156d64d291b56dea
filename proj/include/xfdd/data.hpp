#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xfdd/matrix.hpp"

namespace xfdd {

enum class VariableKind { kMeasured, kManipulated };

struct VariableInfo {
  std::string name;
  std::string unit;
  std::string description;
  VariableKind kind = VariableKind::kMeasured;

  friend bool operator==(const VariableInfo&, const VariableInfo&) = default;
};

// Ordered, name-unique list of process variables. Column order of every
// dataset derived from it follows this order.
class VariableCatalog {
 public:
  VariableCatalog() = default;
  explicit VariableCatalog(std::vector<VariableInfo> vars);

  static VariableCatalog from_names(const std::vector<std::string>& names);

  std::size_t size() const { return vars_.size(); }
  const VariableInfo& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<VariableInfo>& variables() const { return vars_; }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(const std::string& name) const;

  friend bool operator==(const VariableCatalog&, const VariableCatalog&) = default;

 private:
  std::vector<VariableInfo> vars_;
};

enum class FaultType { kStep, kRandomVariation, kSlowDrift, kStiction, kUnknown };

std::string to_string(FaultType type);

struct FaultInfo {
  int id = 0;
  std::string description;
  FaultType type = FaultType::kUnknown;
  // Unobservable in the literature; left out of diagnosis by default.
  bool excluded_by_default = false;
};

using FaultCatalog = std::map<int, FaultInfo>;

// 52 measured and manipulated variables (XMEAS 1-41, XMV 1-11).
const VariableCatalog& tep_variable_catalog();
// IDV(1)-IDV(20); 3, 9 and 15 flagged excluded.
const FaultCatalog& tep_fault_catalog();

struct ColumnScaling {
  double mean = 0.0;
  double std = 1.0;

  friend bool operator==(const ColumnScaling&, const ColumnScaling&) = default;
};

// Fault id used as the "any fault" class in detection problems.
inline constexpr int kAnyFault = -1;

// Samples with labels. X holds only the active variables; with lag l each row
// is [x_n, x_{n-1}, ..., x_{n-l}], each block laid out in catalog order over
// the active variables.
struct Dataset {
  Matrix X;
  std::vector<int> labels;          // class index per row
  std::vector<int> fault_ids;       // source fault id per row, 0 = normal
  std::vector<int> runs;            // run id per row; lags never cross runs
  std::vector<std::size_t> origin;  // row index in the un-lagged source
  std::vector<int> class_fault_ids; // class index -> fault id (kAnyFault allowed)
  VariableCatalog catalog;
  std::vector<bool> active_mask;    // per catalog variable
  std::size_t lag = 0;
  std::vector<ColumnScaling> scaling;  // per catalog variable once standardized

  std::size_t rows() const { return X.rows(); }
  std::size_t num_classes() const { return class_fault_ids.size(); }
  std::vector<std::size_t> active_indices() const;
  std::size_t active_count() const;
  // Catalog index of column j.
  std::size_t column_variable(std::size_t j) const;

  // Throws DataError when the fields disagree on sizes.
  void check() const;
};

Dataset subset_rows(const Dataset& ds, const std::vector<std::size_t>& rows);

struct CsvOptions {
  // One integer label per line; when set the CSV carries no label column.
  std::optional<std::string> label_file;
  // Header name of the optional run-id column.
  std::string run_column = "run";
  // False for streams without a label column; every row is then fault 0.
  bool labelled = true;
};

// Reads a header row, numeric variable columns in catalog order, an optional
// run column and (unless a sidecar label file is given) a final integer label
// column holding fault ids. Without a catalog the header names define one.
Dataset load_csv(const std::string& path, const std::optional<VariableCatalog>& catalog = {},
                 const CsvOptions& options = {});

// Writes the layout load_csv reads back.
void write_csv(const std::string& path, const Dataset& ds);

// Rows earlier than `onset` within their run are relabelled normal.
Dataset apply_onset(const Dataset& ds, std::size_t onset);

// Two classes: normal (fault 0) and any fault.
Dataset label_for_detection(const Dataset& ds);

// One class per fault id present; excluded ids are dropped and, unless
// include_normal, so are normal rows.
Dataset label_for_diagnosis(const Dataset& ds, const std::set<int>& excluded,
                            bool include_normal = false);

// Relabels `ds` with the class list of `reference`; rows whose fault id has
// no class there are dropped.
Dataset align_classes(const Dataset& ds, const Dataset& reference);

struct StandardizeResult {
  Dataset train;
  std::vector<Dataset> others;
  std::vector<std::string> warnings;
};

// z-scores with train-only mean and (population) std. Zero-variance columns
// are removed from every active mask with a warning.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others);

// Applies fitted scaling and a mask to un-standardized data.
Dataset apply_scaling(const Dataset& raw, const std::vector<ColumnScaling>& scaling,
                      const std::vector<bool>& mask);

// Stacks each row with its previous l rows of the same run.
Dataset lag_augment(const Dataset& ds, std::size_t lag);

// Keeps variables whose mask entry is true (mask over the catalog); every lag
// copy of a dropped variable goes.
Dataset apply_mask(const Dataset& ds, const std::vector<bool>& mask);

// Stratified by class, deterministic in seed. Returns (train, val).
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double fraction, std::uint64_t seed);

// Partitions rows by whether their origin row is in `val_origins`.
std::pair<Dataset, Dataset> split_by_origin(const Dataset& ds,
                                            const std::set<std::size_t>& val_origins);

}  // namespace xfdd
