#include "xfdd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "xfdd/errors.hpp"
#include "xfdd/log.hpp"

namespace xfdd {

VariableCatalog::VariableCatalog(std::vector<VariableInfo> vars) : vars_(std::move(vars)) {
  std::set<std::string> seen;
  for (const auto& v : vars_) {
    if (!seen.insert(v.name).second) throw DataError("duplicate variable name '" + v.name + "'");
  }
}

VariableCatalog VariableCatalog::from_names(const std::vector<std::string>& names) {
  std::vector<VariableInfo> vars;
  vars.reserve(names.size());
  for (const auto& n : names) vars.push_back({n, "", "", VariableKind::kMeasured});
  return VariableCatalog(std::move(vars));
}

std::vector<std::string> VariableCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

std::optional<std::size_t> VariableCatalog::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Dataset::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < active_mask.size(); ++i) {
    if (active_mask[i]) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::active_count() const {
  return static_cast<std::size_t>(std::count(active_mask.begin(), active_mask.end(), true));
}

std::size_t Dataset::column_variable(std::size_t j) const {
  const auto active = active_indices();
  return active.at(j % active.size());
}

void Dataset::check() const {
  const std::size_t n = X.rows();
  if (labels.size() != n || fault_ids.size() != n || runs.size() != n || origin.size() != n) {
    throw DataError("dataset row bookkeeping does not match X");
  }
  if (active_mask.size() != catalog.size()) throw DataError("active mask length != catalog size");
  if (active_count() * (lag + 1) != X.cols()) {
    throw DataError("dataset has " + std::to_string(X.cols()) + " columns, expected " +
                    std::to_string(active_count() * (lag + 1)));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes()) {
      throw LabelError("label " + std::to_string(y) + " outside 0.." +
                       std::to_string(num_classes()));
    }
  }
}

Dataset subset_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out = ds;
  out.X = ds.X.select_rows(rows);
  out.labels.clear();
  out.fault_ids.clear();
  out.runs.clear();
  out.origin.clear();
  for (auto r : rows) {
    out.labels.push_back(ds.labels[r]);
    out.fault_ids.push_back(ds.fault_ids[r]);
    out.runs.push_back(ds.runs[r]);
    out.origin.push_back(ds.origin[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  const std::string t = trim(cell);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column " + std::to_string(col));
  }
  return v;
}

int parse_int(const std::string& cell, std::size_t row, std::size_t col) {
  const double v = parse_double(cell, row, col);
  if (v != std::floor(v)) {
    throw DataError("non-integer label '" + cell + "' at row " + std::to_string(row) +
                    ", column " + std::to_string(col));
  }
  return static_cast<int>(v);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

Dataset load_csv(const std::string& path, const std::optional<VariableCatalog>& catalog,
                 const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  const bool has_label_col = options.labelled && !options.label_file.has_value();
  std::size_t n_meta = has_label_col ? 1 : 0;
  std::optional<std::size_t> run_col;
  {
    std::size_t limit = header.size() - n_meta;
    for (std::size_t j = 0; j < limit; ++j) {
      if (header[j] == options.run_column) run_col = j;
    }
    if (run_col) ++n_meta;
  }
  if (header.size() < n_meta + 1) throw DataError("'" + path + "' has no variable columns");

  std::vector<std::size_t> var_cols;
  std::vector<std::string> var_names;
  for (std::size_t j = 0; j + (has_label_col ? 1 : 0) < header.size(); ++j) {
    if (run_col && j == *run_col) continue;
    var_cols.push_back(j);
    var_names.push_back(header[j]);
  }

  VariableCatalog cat = catalog ? *catalog : VariableCatalog::from_names(var_names);
  if (var_cols.size() != cat.size()) {
    throw DataError("'" + path + "' has " + std::to_string(var_cols.size()) +
                    " variable columns, catalog has " + std::to_string(cat.size()));
  }
  for (std::size_t j = 0; j < var_names.size(); ++j) {
    if (var_names[j] != cat[j].name) {
      throw DataError("column " + std::to_string(var_cols[j] + 1) + " is '" + var_names[j] +
                      "', catalog expects '" + cat[j].name + "'");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<int> runs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " of '" + path + "' has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    for (auto j : var_cols) values.push_back(parse_double(cells[j], row, j + 1));
    runs.push_back(run_col ? parse_int(cells[*run_col], row, *run_col + 1) : 0);
    if (has_label_col) labels.push_back(parse_int(cells.back(), row, cells.size()));
  }

  const std::size_t n = runs.size();
  if (!options.labelled) {
    labels.assign(n, 0);
  } else if (!has_label_col) {
    std::ifstream lf(*options.label_file);
    if (!lf) throw DataError("cannot open label file '" + *options.label_file + "'");
    std::size_t lrow = 0;
    while (std::getline(lf, line)) {
      ++lrow;
      if (trim(line).empty()) continue;
      labels.push_back(parse_int(line, lrow, 1));
    }
    if (labels.size() != n) {
      throw DataError("label file has " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(n) + " rows");
    }
  }

  Dataset ds;
  ds.X = Matrix(n, cat.size(), std::move(values));
  ds.fault_ids = labels;
  ds.runs = std::move(runs);
  ds.origin.resize(n);
  std::iota(ds.origin.begin(), ds.origin.end(), std::size_t{0});
  std::set<int> ids(labels.begin(), labels.end());
  ds.class_fault_ids.assign(ids.begin(), ids.end());
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    ds.labels[r] = static_cast<int>(
        std::lower_bound(ds.class_fault_ids.begin(), ds.class_fault_ids.end(), labels[r]) -
        ds.class_fault_ids.begin());
  }
  ds.catalog = std::move(cat);
  ds.active_mask.assign(ds.catalog.size(), true);
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds) {
  if (ds.lag != 0 || ds.active_count() != ds.catalog.size()) {
    throw DataError("write_csv expects an un-lagged dataset over the full catalog");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < ds.catalog.size(); ++j) out << quote(ds.catalog[j].name) << ',';
  out << "run,fault\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.X.row(r)) out << v << ',';
    out << ds.runs[r] << ',' << ds.fault_ids[r] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Labelling

Dataset apply_onset(const Dataset& ds, std::size_t onset) {
  Dataset out = ds;
  std::map<int, std::size_t> position;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::size_t pos = position[ds.runs[r]]++;
    if (pos < onset) out.fault_ids[r] = 0;
  }
  // Rebuild class indices for the raw fault-id labelling.
  std::set<int> ids(out.fault_ids.begin(), out.fault_ids.end());
  out.class_fault_ids.assign(ids.begin(), ids.end());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    out.labels[r] = static_cast<int>(std::lower_bound(out.class_fault_ids.begin(),
                                                      out.class_fault_ids.end(),
                                                      out.fault_ids[r]) -
                                     out.class_fault_ids.begin());
  }
  return out;
}

Dataset label_for_detection(const Dataset& ds) {
  Dataset out = ds;
  out.class_fault_ids = {0, kAnyFault};
  for (std::size_t r = 0; r < ds.rows(); ++r) out.labels[r] = ds.fault_ids[r] == 0 ? 0 : 1;
  return out;
}

Dataset label_for_diagnosis(const Dataset& ds, const std::set<int>& excluded,
                            bool include_normal) {
  std::set<int> ids;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const int f = ds.fault_ids[r];
    if (excluded.count(f) || (f == 0 && !include_normal)) continue;
    ids.insert(f);
    keep.push_back(r);
  }
  if (ids.size() < 2) throw DataError("diagnosis needs at least two fault classes");
  Dataset out = subset_rows(ds, keep);
  out.class_fault_ids.assign(ids.begin(), ids.end());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    out.labels[r] = static_cast<int>(std::lower_bound(out.class_fault_ids.begin(),
                                                      out.class_fault_ids.end(),
                                                      out.fault_ids[r]) -
                                     out.class_fault_ids.begin());
  }
  return out;
}

Dataset align_classes(const Dataset& ds, const Dataset& reference) {
  const auto& classes = reference.class_fault_ids;
  const bool detection = classes.size() == 2 && classes[0] == 0 && classes[1] == kAnyFault;
  if (detection) return label_for_detection(ds);
  std::vector<std::size_t> keep;
  std::vector<int> labels;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto it = std::find(classes.begin(), classes.end(), ds.fault_ids[r]);
    if (it == classes.end()) continue;
    keep.push_back(r);
    labels.push_back(static_cast<int>(it - classes.begin()));
  }
  Dataset out = subset_rows(ds, keep);
  out.class_fault_ids = classes;
  out.labels = std::move(labels);
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

namespace {

Dataset scale_dataset(const Dataset& raw, const std::vector<ColumnScaling>& scaling,
                      const std::vector<bool>& mask) {
  if (raw.lag != 0) throw DataError("standardize before lag augmentation");
  if (raw.scaling.size() != 0) throw DataError("dataset is already standardized");
  if (mask.size() != raw.catalog.size() || scaling.size() != raw.catalog.size()) {
    throw DataError("scaling/mask length does not match the catalog");
  }
  const auto src_active = raw.active_indices();
  std::vector<std::size_t> cols;
  std::vector<std::size_t> vars;
  for (std::size_t j = 0; j < src_active.size(); ++j) {
    if (mask[src_active[j]]) {
      cols.push_back(j);
      vars.push_back(src_active[j]);
    }
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && !raw.active_mask[i]) {
      throw DataError("variable '" + raw.catalog[i].name + "' is not present in the data");
    }
  }
  Dataset out = raw;
  out.X = raw.X.select_cols(cols);
  for (std::size_t r = 0; r < out.X.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& s = scaling[vars[j]];
      out.X(r, j) = (out.X(r, j) - s.mean) / s.std;
    }
  }
  out.active_mask = mask;
  out.scaling = scaling;
  return out;
}

}  // namespace

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others) {
  if (train.rows() == 0) throw DataError("cannot standardize an empty training set");
  if (train.lag != 0) throw DataError("standardize before lag augmentation");
  StandardizeResult result;
  std::vector<ColumnScaling> scaling(train.catalog.size());
  std::vector<bool> mask = train.active_mask;
  const auto active = train.active_indices();
  const double n = static_cast<double>(train.rows());
  for (std::size_t j = 0; j < active.size(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) mean += train.X(r, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) {
      const double d = train.X(r, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    auto& s = scaling[active[j]];
    s.mean = mean;
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      mask[active[j]] = false;
      s.std = 1.0;
      std::string w = "variable '" + train.catalog[active[j]].name +
                      "' has zero variance in the training data; excluded";
      log::warn(w);
      result.warnings.push_back(std::move(w));
    } else {
      s.std = sd;
    }
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw DataError("every variable has zero variance");
  }
  result.train = scale_dataset(train, scaling, mask);
  for (const auto& o : others) {
    if (!(o.catalog == train.catalog)) throw DataError("datasets use different catalogs");
    result.others.push_back(scale_dataset(o, scaling, mask));
  }
  return result;
}

Dataset apply_scaling(const Dataset& raw, const std::vector<ColumnScaling>& scaling,
                      const std::vector<bool>& mask) {
  return scale_dataset(raw, scaling, mask);
}

// ---------------------------------------------------------------------------
// Lags, masks, splits

Dataset lag_augment(const Dataset& ds, std::size_t lag) {
  if (lag == 0) return ds;
  if (ds.lag != 0) throw DataError("dataset is already lag-augmented");
  if (lag >= ds.rows()) {
    throw DataError("lag " + std::to_string(lag) + " needs more than " + std::to_string(ds.rows()) +
                    " rows");
  }
  const std::size_t d = ds.X.cols();
  // Row n is kept when the l rows before it belong to the same run.
  std::vector<std::size_t> keep;
  std::size_t run_start = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (r > 0 && ds.runs[r] != ds.runs[r - 1]) run_start = r;
    if (r - run_start >= lag) keep.push_back(r);
  }
  if (keep.empty()) throw DataError("no run is longer than the lag " + std::to_string(lag));

  Dataset out = subset_rows(ds, keep);
  out.X = Matrix(keep.size(), (lag + 1) * d);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    auto dst = out.X.row(i);
    for (std::size_t k = 0; k <= lag; ++k) {
      auto src = ds.X.row(keep[i] - k);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
  }
  out.lag = lag;
  return out;
}

Dataset apply_mask(const Dataset& ds, const std::vector<bool>& mask) {
  if (mask.size() != ds.catalog.size()) {
    throw DataError("mask length " + std::to_string(mask.size()) + " != catalog size " +
                    std::to_string(ds.catalog.size()));
  }
  const auto active = ds.active_indices();
  std::vector<bool> next(mask.size(), false);
  std::vector<std::size_t> keep_pos;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (mask[active[j]]) {
      next[active[j]] = true;
      keep_pos.push_back(j);
    }
  }
  if (keep_pos.empty()) throw DataError("mask removes every variable");
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k <= ds.lag; ++k) {
    for (auto j : keep_pos) cols.push_back(k * active.size() + j);
  }
  Dataset out = ds;
  out.X = ds.X.select_cols(cols);
  out.active_mask = std::move(next);
  return out;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < ds.rows(); ++r) by_class[ds.labels[r]].push_back(r);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (auto& [cls, rows] : by_class) {
    if (rows.size() < 2) {
      throw DataError("class " + std::to_string(cls) + " has fewer than 2 samples to stratify");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, rows.size() - 1);
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  return {subset_rows(ds, train_rows), subset_rows(ds, val_rows)};
}

std::pair<Dataset, Dataset> split_by_origin(const Dataset& ds,
                                            const std::set<std::size_t>& val_origins) {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    (val_origins.count(ds.origin[r]) ? val_rows : train_rows).push_back(r);
  }
  return {subset_rows(ds, train_rows), subset_rows(ds, val_rows)};
}

}  // namespace xfdd
