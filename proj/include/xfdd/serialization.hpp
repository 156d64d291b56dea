#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/losses.hpp"
#include "xfdd/model.hpp"

namespace xfdd {

inline constexpr int kModelFormatVersion = 1;

enum class Mode { kDetect, kDiagnose };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// A trained model plus everything needed to feed it raw rows.
struct ModelBundle {
  Model model;
  Mode mode = Mode::kDetect;
  std::vector<std::string> variable_names;  // full catalog, in order
  std::vector<ColumnScaling> scaling;       // per catalog variable
  std::vector<bool> active_mask;            // per catalog variable
  std::size_t lag = 0;
  std::vector<int> class_fault_ids;
  CompositeLossConfig loss;
  std::uint64_t seed = 0;

  // Throws ConfigError when the pieces disagree.
  void check() const;
};

std::string to_json_string(const ModelBundle& bundle);
ModelBundle bundle_from_json_string(const std::string& text);

void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

// 64-bit FNV-1a; used for config hashes and file digests in run manifests.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);
std::string file_digest(const std::string& path);

}  // namespace xfdd
