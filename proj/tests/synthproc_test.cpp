#include <gtest/gtest.h>

#include <cmath>

#include "xfdd/errors.hpp"
#include "xfdd/synthproc.hpp"

namespace xfdd::synth {
namespace {

double column_mean(const Matrix& x, std::size_t j, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t r = from; r < to; ++r) s += x(r, j);
  return s / static_cast<double>(to - from);
}

double correlation(const Matrix& x, std::size_t a, std::size_t b) {
  const std::size_t n = x.rows();
  const double ma = column_mean(x, a, 0, n);
  const double mb = column_mean(x, b, 0, n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    sab += (x(r, a) - ma) * (x(r, b) - mb);
    saa += (x(r, a) - ma) * (x(r, a) - ma);
    sbb += (x(r, b) - mb) * (x(r, b) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(Generate, NoiselessRunSettlesAtFixedPoint) {
  ProcessSpec spec = preset_process("default", 1);
  std::fill(spec.process_noise.begin(), spec.process_noise.end(), 0.0);
  std::fill(spec.signal_noise.begin(), spec.signal_noise.end(), 0.0);
  spec.n_noise = 0;
  const auto a = generate(spec, 400, {}, 5).data;
  const auto b = generate(spec, 400, {}, 5).data;
  EXPECT_EQ(a.X, b.X);
  for (std::size_t j = 0; j < a.X.cols(); ++j) EXPECT_NEAR(a.X(399, j), 0.0, 1e-8);
}

TEST(Generate, DeterministicUnderSeedAndDistinctAcrossSeeds) {
  const auto spec = preset_process("default", 2);
  const auto a = generate(spec, 100, {}, 7).data;
  EXPECT_EQ(a.X, generate(spec, 100, {}, 7).data.X);
  EXPECT_NE(a.X, generate(spec, 100, {}, 8).data.X);
}

TEST(Generate, StepFaultShiftsTargetMeanByMagnitude) {
  const auto spec = preset_process("default", 3);
  const auto sd = nominal_std(spec);
  const std::size_t onset = 160;
  const std::size_t n = onset + 2000;
  FaultSpec step{1, FaultKind::kStep, {0}, 5.0, onset, 480};
  const auto faulty = generate(spec, n, {step}, 21).data;
  const auto clean = generate(spec, n, {}, 21).data;
  // Same seed path, so the difference isolates the fault.
  const double shift = column_mean(faulty.X, 0, onset, n) - column_mean(clean.X, 0, onset, n);
  EXPECT_NEAR(shift / sd[0], 5.0, 1e-9);
  // Independent runs: sample mean of the post-onset segment against a normal run.
  const auto other = generate(spec, n, {}, 99).data;
  const double raw_shift = column_mean(faulty.X, 0, onset, n) - column_mean(other.X, 0, onset, n);
  EXPECT_NEAR(raw_shift / sd[0], 5.0, 0.5);
}

TEST(Generate, PreOnsetRowsMatchNormalRun) {
  const auto spec = preset_process("default", 4);
  for (const auto& f : preset_faults("default")) {
    FaultSpec g = f;
    g.onset = 160;
    const auto faulty = generate(spec, 300, {g}, 33).data;
    const auto clean = generate(spec, 300, {}, 33).data;
    for (std::size_t r = 0; r < 160; ++r) {
      for (std::size_t j = 0; j < clean.X.cols(); ++j) ASSERT_EQ(faulty.X(r, j), clean.X(r, j));
      EXPECT_EQ(faulty.fault_ids[r], 0);
    }
    for (std::size_t r = 160; r < 300; ++r) EXPECT_EQ(faulty.fault_ids[r], g.id);
  }
}

TEST(Generate, NoiseColumnsUncorrelatedWithSignals) {
  const auto spec = preset_process("default", 5);
  const auto ds = generate(spec, 2000, {}, 44).data;
  for (std::size_t a = spec.n_signal(); a < spec.n_variables(); ++a) {
    for (std::size_t b = 0; b < spec.n_signal(); ++b) {
      EXPECT_LT(std::abs(correlation(ds.X, a, b)), 0.15) << a << " vs " << b;
    }
  }
}

TEST(Generate, DescendantsTrackTheirParents) {
  const auto spec = preset_process("default", 6);
  const auto ds = generate(spec, 2000, {}, 45).data;
  for (std::size_t i = 0; i < spec.n_base(); ++i) {
    EXPECT_GT(correlation(ds.X, i, i + spec.n_base()), 0.5);
  }
}

TEST(Generate, RejectsInvalidSpecs) {
  ProcessSpec spec = preset_process("default", 0);
  spec.transition(0, 0) = 1.2;
  EXPECT_THROW(generate(spec, 10, {}, 1), ConfigError);

  spec = preset_process("default", 0);
  spec.signal_noise.pop_back();
  EXPECT_THROW(spec.validate(), ConfigError);

  spec = preset_process("default", 0);
  FaultSpec late{1, FaultKind::kStep, {0}, 5.0, 10, 480};
  EXPECT_THROW(generate(spec, 10, {late}, 1), ConfigError);
  FaultSpec noise_target{1, FaultKind::kStep, {spec.n_signal()}, 5.0, 0, 480};
  EXPECT_THROW(generate(spec, 10, {noise_target}, 1), ConfigError);
  FaultSpec zero{1, FaultKind::kStep, {0}, 0.0, 0, 480};
  EXPECT_THROW(generate(spec, 10, {zero}, 1), ConfigError);
  EXPECT_THROW(preset_process("nope", 0), ConfigError);
  EXPECT_THROW(fault_kind_from_string("leak"), ConfigError);
}

TEST(GroundTruth, TargetsPlusDirectDescendants) {
  const auto spec = preset_process("default", 0);
  const auto gt = ground_truth(spec, preset_faults("default"));
  for (const auto& f : preset_faults("default")) {
    std::set<std::size_t> want;
    for (auto v : f.targets) {
      want.insert(v);
      want.insert(v + spec.n_base());
    }
    EXPECT_EQ(gt.relevant.at(f.id), want);
  }
  EXPECT_EQ(gt.signal_variables.size(), 8u);
  EXPECT_EQ(gt.noise_variables.size(), 8u);
  EXPECT_EQ(gt.noise_variables.front(), 8u);
}

TEST(Benchmark, DefaultPresetLayout) {
  const auto b = make_benchmark("default", 0);
  EXPECT_EQ(b.process.n_signal(), 8u);
  EXPECT_EQ(b.process.n_noise, 8u);
  ASSERT_EQ(b.faults.size(), 4u);
  std::set<FaultKind> kinds;
  for (const auto& f : b.faults) kinds.insert(f.kind);
  EXPECT_EQ(kinds.size(), 4u);

  EXPECT_EQ(b.train.rows(), 500u + 4 * 480u);
  EXPECT_EQ(b.train.X.cols(), 16u);
  EXPECT_EQ(b.test.rows(), 5 * 960u);
  std::map<int, std::size_t> train_counts;
  for (int f : b.train.fault_ids) ++train_counts[f];
  EXPECT_EQ(train_counts[0], 500u);
  for (int f = 1; f <= 4; ++f) EXPECT_EQ(train_counts[f], 480u);

  // Each faulty test run: 160 normal rows, then 800 faulty rows.
  std::map<int, std::size_t> test_counts;
  for (std::size_t r = 0; r < b.test.rows(); ++r) {
    const int run = b.test.runs[r];
    const std::size_t pos = r % 960;
    if (run == 100) {
      EXPECT_EQ(b.test.fault_ids[r], 0);
    } else {
      EXPECT_EQ(b.test.fault_ids[r], pos < 160 ? 0 : run - 100);
    }
    ++test_counts[b.test.fault_ids[r]];
  }
  EXPECT_EQ(test_counts[0], 960u + 4 * 160u);
  for (int f = 1; f <= 4; ++f) EXPECT_EQ(test_counts[f], 800u);
  EXPECT_EQ(b.train.catalog[0].name, "sig01");
  EXPECT_EQ(b.train.catalog[15].name, "noise08");
}

TEST(Benchmark, DeterministicInSeed) {
  const auto a = make_benchmark("small", 3);
  const auto b = make_benchmark("small", 3);
  EXPECT_EQ(a.train.X, b.train.X);
  EXPECT_EQ(a.test.X, b.test.X);
  EXPECT_NE(a.train.X, make_benchmark("small", 4).train.X);
}

}  // namespace
}  // namespace xfdd::synth
