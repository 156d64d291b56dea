#include "xfdd/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "xfdd/errors.hpp"

namespace xfdd {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write to '" + path + "' failed");
}

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

std::string ledger_csv(const std::vector<PruneIterationRecord>& ledger, std::size_t selected) {
  std::ostringstream os;
  os << "block,iteration,network,lag,architecture,n_retained,retained,val_accuracy,"
        "test_accuracy,next_lambda,lambda1,lambda2,lambda3,delta,selected\n";
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto& r = ledger[i];
    os << r.block << ',' << r.iteration << ',' << quoted(r.network) << ',' << r.lag << ','
       << r.architecture << ',' << r.retained.size() << ',' << quoted(join(r.retained, ";"))
       << ',' << format_number(r.val_accuracy) << ',' << format_number(r.test_accuracy) << ','
       << format_number(r.lambda) << ',' << format_number(r.loss.lambda1) << ','
       << format_number(r.loss.lambda2) << ',' << format_number(r.loss.lambda3) << ','
       << format_number(r.loss.delta) << ',' << (i == selected ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string relevance_csv(const RelevanceReport& report) {
  std::ostringstream os;
  os << "variable,mean_abs,mean_signed,normalized,rank,kept\n";
  const double mx = report.max_relevance();
  const std::set<std::size_t> cand(report.prune_candidates.begin(), report.prune_candidates.end());
  // Rank 1 is the most relevant; ties share the earlier catalog position.
  std::vector<std::size_t> order(report.names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_abs[a] > report.mean_abs[b];
  });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    os << quoted(report.names[i]) << ',' << format_number(report.mean_abs[i]) << ','
       << format_number(report.mean_signed[i]) << ','
       << format_number(mx > 0.0 ? report.mean_abs[i] / mx : 0.0) << ',' << rank[i] << ','
       << (cand.count(report.variables[i]) ? 0 : 1) << '\n';
  }
  return os.str();
}

std::string relevance_json(const RelevanceReport& report) {
  nlohmann::json vars = nlohmann::json::array();
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    vars.push_back({{"name", report.names[i]},
                    {"mean_abs", report.mean_abs[i]},
                    {"mean_signed", report.mean_signed[i]}});
  }
  std::vector<std::string> below;
  for (auto v : report.prune_candidates) {
    auto it = std::find(report.variables.begin(), report.variables.end(), v);
    if (it != report.variables.end()) below.push_back(report.names[it - report.variables.begin()]);
  }
  nlohmann::json doc{{"class", report.cls},
                     {"n_samples", report.n_samples},
                     {"epsilon", report.epsilon},
                     {"lambda", report.lambda},
                     {"threshold", report.threshold},
                     {"variables", vars},
                     {"below_threshold", below}};
  return doc.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\predicted";
  for (const auto& l : cm.labels) os << ',' << quoted(l);
  os << '\n';
  for (std::size_t i = 0; i < cm.labels.size(); ++i) {
    os << quoted(cm.labels[i]);
    for (auto c : cm.counts[i]) os << ',' << c;
    os << '\n';
  }
  return os.str();
}

std::string heatmap_csv(const Heatmap& heatmap) {
  std::ostringstream os;
  os << "fault";
  for (const auto& v : heatmap.variables) os << ',' << quoted(v);
  os << '\n';
  for (std::size_t i = 0; i < heatmap.faults.size(); ++i) {
    os << heatmap.faults[i];
    for (std::size_t j = 0; j < heatmap.variables.size(); ++j) {
      os << ',' << format_number(heatmap.values(i, j));
    }
    os << '\n';
  }
  return os.str();
}

std::string loss_trace_csv(const std::vector<LossTraceRow>& trace) {
  std::ostringstream os;
  os << "epoch,total,reconstruction,classification,l2,val_total\n";
  for (const auto& r : trace) {
    os << r.epoch << ',' << format_number(r.total) << ',' << format_number(r.recon) << ','
       << format_number(r.cls) << ',' << format_number(r.l2) << ','
       << format_number(r.val_total) << '\n';
  }
  return os.str();
}

std::string fdr_table_csv(const std::vector<DetectionColumn>& columns) {
  std::set<int> faults;
  for (const auto& c : columns) {
    for (int f : c.fault_ids) {
      if (f != 0) faults.insert(f);
    }
  }
  std::ostringstream os;
  os << "fault";
  for (const auto& c : columns) os << ',' << quoted(c.method);
  os << '\n';
  std::vector<double> sums(columns.size(), 0.0);
  std::vector<std::size_t> counts(columns.size(), 0);
  for (int f : faults) {
    os << f;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& c = columns[k];
      os << ',';
      if (std::find(c.fault_ids.begin(), c.fault_ids.end(), f) == c.fault_ids.end()) continue;
      const double rate = fault_detection_rate(c.flagged, c.fault_ids, f);
      sums[k] += rate;
      ++counts[k];
      os << fixed(rate, 2);
    }
    os << '\n';
  }
  os << "average";
  for (std::size_t k = 0; k < columns.size(); ++k) {
    os << ',';
    if (counts[k]) os << fixed(sums[k] / static_cast<double>(counts[k]), 2);
  }
  os << "\nFAR";
  for (const auto& c : columns) {
    os << ',';
    if (std::find(c.fault_ids.begin(), c.fault_ids.end(), 0) != c.fault_ids.end()) {
      os << fixed(false_alarm_rate(c.flagged, c.fault_ids), 2);
    }
  }
  os << '\n';
  return os.str();
}

std::string class_rates_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "class,samples,correct,rate\n";
  const auto rows = cm.row_sums();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cm.labels.size(); ++i) {
    if (rows[i] == 0) continue;
    const double rate = 100.0 * static_cast<double>(cm.counts[i][i]) / static_cast<double>(rows[i]);
    sum += rate;
    ++n;
    os << quoted(cm.labels[i]) << ',' << rows[i] << ',' << cm.counts[i][i] << ',' << fixed(rate, 2)
       << '\n';
  }
  os << "average,,," << (n ? fixed(sum / static_cast<double>(n), 2) : std::string()) << '\n';
  return os.str();
}

std::string heatmap_svg(const Heatmap& heatmap) {
  const int cell = 22;
  const int left = 70;
  const int top = 110;
  const int w = left + cell * static_cast<int>(heatmap.variables.size()) + 20;
  const int h = top + cell * static_cast<int>(heatmap.faults.size()) + 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t j = 0; j < heatmap.variables.size(); ++j) {
    const int x = left + cell * static_cast<int>(j) + cell / 2;
    os << "<text transform=\"translate(" << x << ',' << top - 6 << ") rotate(-60)\">"
       << xml_escape(heatmap.variables[j]) << "</text>\n";
  }
  for (std::size_t i = 0; i < heatmap.faults.size(); ++i) {
    const int y = top + cell * static_cast<int>(i);
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + cell * 2 / 3
       << "\" text-anchor=\"end\">fault " << heatmap.faults[i] << "</text>\n";
    for (std::size_t j = 0; j < heatmap.variables.size(); ++j) {
      const double v = std::clamp(heatmap.values(i, j), 0.0, 1.0);
      // White to dark red.
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      const int r = static_cast<int>(std::lround(255.0 - 80.0 * v));
      os << "<rect x=\"" << left + cell * static_cast<int>(j) << "\" y=\"" << y << "\" width=\""
         << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << r << ',' << g << ',' << g
         << ")\" stroke=\"#ccc\"><title>" << fixed(heatmap.values(i, j), 3) << "</title></rect>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string relevance_bar_svg(const RelevanceReport& report) {
  const int bar = 18;
  const int left = 120;
  const int width = 400;
  const int h = 20 + bar * static_cast<int>(report.names.size()) + 20;
  const double mx = report.max_relevance();
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 80
     << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const std::set<std::size_t> cand(report.prune_candidates.begin(), report.prune_candidates.end());
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    const int y = 20 + bar * static_cast<int>(i);
    const double frac = mx > 0.0 ? report.mean_abs[i] / mx : 0.0;
    const int len = static_cast<int>(std::lround(frac * width));
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + bar * 2 / 3 << "\" text-anchor=\"end\">"
       << xml_escape(report.names[i]) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << y + 2 << "\" width=\"" << len << "\" height=\""
       << bar - 4 << "\" fill=\"" << (cand.count(report.variables[i]) ? "#bbb" : "#3465a4")
       << "\"/>\n";
    os << "<text x=\"" << left + len + 4 << "\" y=\"" << y + bar * 2 / 3 << "\">"
       << fixed(frac, 3) << "</text>\n";
  }
  if (mx > 0.0 && report.lambda > 0.0) {
    const int x = left + static_cast<int>(std::lround(report.lambda * width));
    os << "<line x1=\"" << x << "\" y1=\"10\" x2=\"" << x << "\" y2=\"" << h - 10
       << "\" stroke=\"#c00\" stroke-dasharray=\"4,3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string dataset_manifest_json(const PreparedData& data, const std::vector<bool>& mask,
                                  std::size_t lag, std::uint64_t split_seed,
                                  const std::map<std::string, std::string>& sources) {
  nlohmann::json vars = nlohmann::json::array();
  const auto& catalog = data.train_full.catalog;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    vars.push_back({{"name", catalog[i].name},
                    {"mean", data.scaling[i].mean},
                    {"std", data.scaling[i].std},
                    {"standardized", static_cast<bool>(data.base_mask[i])},
                    {"active", static_cast<bool>(mask[i])}});
  }
  nlohmann::json doc{{"sources", sources},
                     {"lag", lag},
                     {"split_seed", split_seed},
                     {"validation_rows", data.val_origins.size()},
                     {"training_rows", data.train_full.rows()},
                     {"test_rows", data.test.rows()},
                     {"variables", vars},
                     {"warnings", data.warnings}};
  return doc.dump(2) + "\n";
}

}  // namespace xfdd
