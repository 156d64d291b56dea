#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/matrix.hpp"

namespace xfdd::synth {

// Linear Gaussian state-space core. The first half of the signal variables
// are linear read-outs y = C s + v; each one has a tanh-squashed descendant in
// the second half. Pure-noise variables are appended after the signals.
struct ProcessSpec {
  std::size_t state_dim = 4;
  Matrix transition;                  // state_dim x state_dim, spectral radius < 0.99
  Matrix output_map;                  // (d_signal / 2) x state_dim
  std::vector<double> process_noise;  // per state
  std::vector<double> signal_noise;   // per signal variable
  double descendant_gain = 1.0;
  std::size_t n_noise = 8;
  double noise_std = 1.0;
  std::size_t burn_in = 200;
  std::uint64_t seed = 0;

  std::size_t n_base() const { return output_map.rows(); }
  std::size_t n_signal() const { return 2 * output_map.rows(); }
  std::size_t n_variables() const { return n_signal() + n_noise; }

  // Throws ConfigError on shape problems, negative noise or an unstable
  // transition matrix.
  void validate() const;
};

enum class FaultKind { kStep, kRandomVariation, kSlowDrift, kStiction };

std::string to_string(FaultKind kind);
FaultKind fault_kind_from_string(const std::string& name);

// Magnitudes are in units of each target's nominal standard deviation.
//   step              additive bias of magnitude
//   random_variation  extra white noise with std magnitude
//   slow_drift        ramp reaching magnitude after drift_horizon samples
//   stiction          stick-slip: the reading holds until the true value has
//                     moved more than magnitude away, then slips past it by
//                     the same amount
struct FaultSpec {
  int id = 1;
  FaultKind kind = FaultKind::kStep;
  std::vector<std::size_t> targets;
  double magnitude = 5.0;
  std::size_t onset = 160;
  std::size_t drift_horizon = 480;
};

struct GroundTruth {
  // fault id -> signal variable indices the fault moves.
  std::map<int, std::set<std::size_t>> relevant;
  std::vector<std::size_t> signal_variables;
  std::vector<std::size_t> noise_variables;
};

struct GeneratedRun {
  Dataset data;  // raw (un-standardized), fault_ids 0 before onset
  GroundTruth truth;
};

VariableCatalog make_catalog(const ProcessSpec& spec);

// Per-signal-variable std of a long fault-free reference run.
std::vector<double> nominal_std(const ProcessSpec& spec);

// Simulates one run. `run_seed` selects the noise path; the same seed gives
// the same pre-onset rows whatever faults are passed.
GeneratedRun generate(const ProcessSpec& spec, std::size_t n_samples,
                      const std::vector<FaultSpec>& faults, std::uint64_t run_seed,
                      int run_id = 0);

GroundTruth ground_truth(const ProcessSpec& spec, const std::vector<FaultSpec>& faults);

struct Benchmark {
  ProcessSpec process;
  std::vector<FaultSpec> faults;
  Dataset train;  // normal run then one post-onset run per fault
  Dataset test;   // normal run then one run per fault with the test onset
  GroundTruth truth;
};

struct BenchmarkLayout {
  std::size_t normal_train = 500;
  std::size_t fault_train = 480;
  std::size_t test_length = 960;
  std::size_t test_onset = 160;
};

// Presets: "default" (8 signal + 8 noise, one fault per type), "small".
ProcessSpec preset_process(const std::string& name, std::uint64_t seed);
std::vector<FaultSpec> preset_faults(const std::string& name);
Benchmark make_benchmark(const std::string& preset, std::uint64_t seed,
                         const BenchmarkLayout& layout = {});

}  // namespace xfdd::synth
