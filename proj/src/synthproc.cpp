#include "xfdd/synthproc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "xfdd/errors.hpp"

namespace xfdd::synth {

void ProcessSpec::validate() const {
  if (state_dim == 0) throw ConfigError("state dimension must be >= 1");
  require_shape(transition, state_dim, state_dim, "transition matrix");
  if (output_map.rows() == 0 || output_map.cols() != state_dim) {
    throw ConfigError("output map must be (d_signal/2) x state_dim");
  }
  if (process_noise.size() != state_dim) throw ConfigError("process noise needs one std per state");
  if (signal_noise.size() != n_signal()) throw ConfigError("signal noise needs one std per signal");
  for (double s : process_noise) {
    if (!(s >= 0.0)) throw ConfigError("noise std must be nonnegative");
  }
  for (double s : signal_noise) {
    if (!(s >= 0.0)) throw ConfigError("noise std must be nonnegative");
  }
  if (!(noise_std > 0.0) && n_noise > 0) throw ConfigError("noise variable std must be positive");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(state_dim));
  for (std::size_t i = 0; i < state_dim; ++i) {
    for (std::size_t j = 0; j < state_dim; ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = transition(i, j);
    }
  }
  const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 0.99)) {
    throw ConfigError("transition matrix is not stable (spectral radius " + std::to_string(radius) +
                      ")");
  }
}

std::string to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::kStep: return "step";
    case FaultKind::kRandomVariation: return "random_variation";
    case FaultKind::kSlowDrift: return "slow_drift";
    case FaultKind::kStiction: return "stiction";
  }
  return "step";
}

FaultKind fault_kind_from_string(const std::string& name) {
  if (name == "step") return FaultKind::kStep;
  if (name == "random_variation") return FaultKind::kRandomVariation;
  if (name == "slow_drift") return FaultKind::kSlowDrift;
  if (name == "stiction") return FaultKind::kStiction;
  throw ConfigError("unknown fault type '" + name + "'");
}

VariableCatalog make_catalog(const ProcessSpec& spec) {
  std::vector<VariableInfo> vars;
  const std::size_t base = spec.n_base();
  for (std::size_t i = 0; i < spec.n_signal(); ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "sig%02zu", i + 1);
    std::string desc = i < base ? "linear read-out of the process state"
                                : "tanh channel of sig" + std::to_string(i - base + 1);
    vars.push_back({name, "-", desc, VariableKind::kMeasured});
  }
  for (std::size_t i = 0; i < spec.n_noise; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "noise%02zu", i + 1);
    vars.push_back({name, "-", "independent noise", VariableKind::kMeasured});
  }
  return VariableCatalog(std::move(vars));
}

namespace {

struct FaultRuntime {
  const FaultSpec* spec;
  std::vector<double> held;  // stiction state per target
  bool started = false;
};

// Core simulator. `scale` holds nominal stds (empty: faults ignored).
Matrix simulate(const ProcessSpec& spec, std::size_t n_samples, const std::vector<FaultSpec>& faults,
                const std::vector<double>& scale, std::uint64_t run_seed,
                std::vector<int>* fault_ids) {
  const std::size_t ns = spec.state_dim;
  const std::size_t nb = spec.n_base();
  const std::size_t nsig = spec.n_signal();
  // Separate streams so fault noise never shifts the nominal path.
  std::mt19937_64 rng_state(run_seed * 0x9E3779B97F4A7C15ULL + spec.seed);
  std::mt19937_64 rng_fault(run_seed * 0xC2B2AE3D27D4EB4FULL + spec.seed + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> s(ns);
  for (auto& v : s) v = gauss(rng_state);
  std::vector<double> next(ns);
  Matrix out(n_samples, spec.n_variables());
  if (fault_ids) fault_ids->assign(n_samples, 0);
  std::vector<FaultRuntime> runtime;
  for (const auto& f : faults) runtime.push_back({&f, std::vector<double>(f.targets.size(), 0.0)});

  std::vector<double> y(nsig);
  std::vector<double> noise_draws(spec.n_noise);
  for (std::size_t t = 0; t < spec.burn_in + n_samples; ++t) {
    for (std::size_t i = 0; i < ns; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ns; ++j) acc += spec.transition(i, j) * s[j];
      next[i] = acc + spec.process_noise[i] * gauss(rng_state);
    }
    s.swap(next);
    for (std::size_t i = 0; i < nb; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ns; ++j) acc += spec.output_map(i, j) * s[j];
      y[i] = acc + spec.signal_noise[i] * gauss(rng_state);
    }
    std::vector<double> desc_noise(nb);
    for (std::size_t i = 0; i < nb; ++i) desc_noise[i] = spec.signal_noise[nb + i] * gauss(rng_state);
    for (auto& v : noise_draws) v = spec.noise_std * gauss(rng_state);
    if (t < spec.burn_in) continue;
    const std::size_t k = t - spec.burn_in;

    // Faults act on their targets before descendants are formed.
    for (auto& rt : runtime) {
      const FaultSpec& f = *rt.spec;
      if (k < f.onset || scale.empty()) continue;
      if (fault_ids && (*fault_ids)[k] == 0) (*fault_ids)[k] = f.id;
      for (std::size_t q = 0; q < f.targets.size(); ++q) {
        const std::size_t v = f.targets[q];
        const double sd = scale[v];
        double& val = y[v];
        switch (f.kind) {
          case FaultKind::kStep:
            val += f.magnitude * sd;
            break;
          case FaultKind::kRandomVariation:
            val += f.magnitude * sd * gauss(rng_fault);
            break;
          case FaultKind::kSlowDrift:
            val += f.magnitude * sd * static_cast<double>(k - f.onset + 1) /
                   static_cast<double>(std::max<std::size_t>(f.drift_horizon, 1));
            break;
          case FaultKind::kStiction: {
            const double band = f.magnitude * sd;
            if (!rt.started) {
              rt.held[q] = val;
            } else if (std::abs(val - rt.held[q]) > band) {
              rt.held[q] = val + (val > rt.held[q] ? band : -band);
            }
            val = rt.held[q];
            break;
          }
        }
      }
      rt.started = true;
    }
    for (std::size_t i = 0; i < nb; ++i) {
      const double sd = scale.empty() ? 1.0 : scale[i];
      y[nb + i] = std::tanh(spec.descendant_gain * y[i] / sd) + desc_noise[i];
    }
    auto row = out.row(k);
    std::copy(y.begin(), y.end(), row.begin());
    std::copy(noise_draws.begin(), noise_draws.end(), row.begin() + static_cast<std::ptrdiff_t>(nsig));
  }
  return out;
}

}  // namespace

std::vector<double> nominal_std(const ProcessSpec& spec) {
  spec.validate();
  // Base-variable stds first; descendants are scaled by them.
  const std::size_t n_ref = 5000;
  Matrix ref = simulate(spec, n_ref, {}, {}, 0xABCDEFULL, nullptr);
  std::vector<double> base_sd(spec.n_signal(), 1.0);
  auto column_sd = [&](const Matrix& m, std::size_t j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, j);
    mean /= static_cast<double>(m.rows());
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, j) - mean) * (m(r, j) - mean);
    return std::sqrt(var / static_cast<double>(m.rows()));
  };
  for (std::size_t i = 0; i < spec.n_base(); ++i) base_sd[i] = column_sd(ref, i);
  ref = simulate(spec, n_ref, {}, base_sd, 0xABCDEFULL, nullptr);
  std::vector<double> sd(spec.n_signal());
  for (std::size_t i = 0; i < spec.n_signal(); ++i) sd[i] = column_sd(ref, i);
  for (std::size_t i = 0; i < spec.n_base(); ++i) sd[i] = base_sd[i];
  return sd;
}

GroundTruth ground_truth(const ProcessSpec& spec, const std::vector<FaultSpec>& faults) {
  GroundTruth gt;
  for (std::size_t i = 0; i < spec.n_signal(); ++i) gt.signal_variables.push_back(i);
  for (std::size_t i = 0; i < spec.n_noise; ++i) gt.noise_variables.push_back(spec.n_signal() + i);
  for (const auto& f : faults) {
    auto& set = gt.relevant[f.id];
    for (auto v : f.targets) {
      set.insert(v);
      if (v < spec.n_base()) set.insert(v + spec.n_base());
    }
  }
  return gt;
}

GeneratedRun generate(const ProcessSpec& spec, std::size_t n_samples,
                      const std::vector<FaultSpec>& faults, std::uint64_t run_seed, int run_id) {
  spec.validate();
  for (const auto& f : faults) {
    if (f.onset >= n_samples) throw ConfigError("fault onset must be before the end of the run");
    if (!(f.magnitude > 0.0)) throw ConfigError("fault magnitude must be positive");
    if (f.targets.empty()) throw ConfigError("fault needs at least one target");
    for (auto v : f.targets) {
      if (v >= spec.n_signal()) throw ConfigError("fault targets must be signal variables");
    }
  }
  const auto scale = nominal_std(spec);
  GeneratedRun run;
  std::vector<int> ids;
  Matrix x = simulate(spec, n_samples, faults, scale, run_seed, &ids);
  Dataset& ds = run.data;
  ds.X = std::move(x);
  ds.fault_ids = ids;
  ds.runs.assign(n_samples, run_id);
  ds.origin.resize(n_samples);
  std::iota(ds.origin.begin(), ds.origin.end(), std::size_t{0});
  std::set<int> classes(ids.begin(), ids.end());
  ds.class_fault_ids.assign(classes.begin(), classes.end());
  for (int f : ids) {
    ds.labels.push_back(static_cast<int>(
        std::lower_bound(ds.class_fault_ids.begin(), ds.class_fault_ids.end(), f) -
        ds.class_fault_ids.begin()));
  }
  ds.catalog = make_catalog(spec);
  ds.active_mask.assign(ds.catalog.size(), true);
  run.truth = ground_truth(spec, faults);
  return run;
}

ProcessSpec preset_process(const std::string& name, std::uint64_t seed) {
  ProcessSpec spec;
  spec.seed = seed;
  if (name == "default" || name == "small") {
    spec.state_dim = 4;
    spec.transition = Matrix{{0.90, 0.05, 0.00, 0.00},
                             {0.00, 0.85, 0.08, 0.00},
                             {0.00, 0.00, 0.80, 0.10},
                             {0.05, 0.00, 0.00, 0.75}};
    spec.output_map = Matrix{{1.0, 0.3, 0.0, 0.0},
                             {0.0, 1.0, 0.3, 0.0},
                             {0.0, 0.0, 1.0, 0.3},
                             {0.3, 0.0, 0.0, 1.0}};
    spec.process_noise.assign(4, 0.4);
    spec.signal_noise = {0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05};
    spec.descendant_gain = 0.8;
    spec.n_noise = name == "small" ? 4 : 8;
    spec.noise_std = 1.0;
    return spec;
  }
  throw ConfigError("unknown synthetic preset '" + name + "'");
}

std::vector<FaultSpec> preset_faults(const std::string& name) {
  if (name != "default" && name != "small") throw ConfigError("unknown synthetic preset '" + name + "'");
  return {
      {1, FaultKind::kStep, {0}, 5.0, 0, 480},
      {2, FaultKind::kRandomVariation, {1}, 4.0, 0, 480},
      {3, FaultKind::kSlowDrift, {2}, 6.0, 0, 480},
      {4, FaultKind::kStiction, {3}, 2.0, 0, 480},
  };
}

namespace {

Dataset concat(const std::vector<Dataset>& parts) {
  Dataset out = parts.front();
  std::size_t n = 0;
  for (const auto& p : parts) n += p.rows();
  std::vector<double> values;
  values.reserve(n * out.X.cols());
  out.labels.clear();
  out.fault_ids.clear();
  out.runs.clear();
  out.origin.clear();
  for (const auto& p : parts) {
    values.insert(values.end(), p.X.data().begin(), p.X.data().end());
    out.fault_ids.insert(out.fault_ids.end(), p.fault_ids.begin(), p.fault_ids.end());
    out.runs.insert(out.runs.end(), p.runs.begin(), p.runs.end());
  }
  out.X = Matrix(n, out.X.cols(), std::move(values));
  out.origin.resize(n);
  std::iota(out.origin.begin(), out.origin.end(), std::size_t{0});
  std::set<int> classes(out.fault_ids.begin(), out.fault_ids.end());
  out.class_fault_ids.assign(classes.begin(), classes.end());
  for (int f : out.fault_ids) {
    out.labels.push_back(static_cast<int>(
        std::lower_bound(out.class_fault_ids.begin(), out.class_fault_ids.end(), f) -
        out.class_fault_ids.begin()));
  }
  return out;
}

}  // namespace

Benchmark make_benchmark(const std::string& preset, std::uint64_t seed,
                         const BenchmarkLayout& layout) {
  Benchmark bench;
  bench.process = preset_process(preset, seed);
  bench.faults = preset_faults(preset);
  bench.truth = ground_truth(bench.process, bench.faults);

  const std::uint64_t base = seed * 1000;
  std::vector<Dataset> train_parts;
  std::vector<Dataset> test_parts;
  train_parts.push_back(generate(bench.process, layout.normal_train, {}, base + 1, 0).data);
  test_parts.push_back(generate(bench.process, layout.test_length, {}, base + 501, 100).data);
  int run = 1;
  for (const auto& f : bench.faults) {
    FaultSpec train_fault = f;
    train_fault.onset = 0;
    train_parts.push_back(
        generate(bench.process, layout.fault_train, {train_fault}, base + 1 + run, run).data);
    FaultSpec test_fault = f;
    test_fault.onset = layout.test_onset;
    test_parts.push_back(
        generate(bench.process, layout.test_length, {test_fault}, base + 501 + run, 100 + run).data);
    ++run;
  }
  bench.train = concat(train_parts);
  bench.test = concat(test_parts);
  return bench;
}

}  // namespace xfdd::synth
