#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "xfdd/errors.hpp"
#include "xfdd/metrics.hpp"
#include "xfdd/nn.hpp"
#include "xfdd/pipeline.hpp"
#include "xfdd/report.hpp"
#include "xfdd/synthproc.hpp"

namespace xfdd {
namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.mode = Mode::kDetect;
  cfg.architectures = {{6, 3}};
  cfg.loss_grid = {{0.1, 1.0, 0.0, 2.0}};
  cfg.lambda_schedule = {0.05};
  cfg.lags = {1};
  cfg.max_iterations = 4;
  cfg.val_fraction = 0.3;
  cfg.schedule.epochs = 40;
  cfg.schedule.batch_size = 64;
  cfg.schedule.learning_rate = 0.003;
  cfg.seed = 1;
  return cfg;
}

synth::Benchmark small_benchmark(std::uint64_t seed) {
  synth::BenchmarkLayout layout;
  layout.normal_train = 300;
  layout.fault_train = 200;
  layout.test_length = 400;
  layout.test_onset = 160;
  return synth::make_benchmark("small", seed, layout);
}

// One pipeline run shared by the read-only tests below.
class SmallRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bench_ = new synth::Benchmark(small_benchmark(2));
    result_ = new PipelineResult(run_pipeline(small_config(), bench_->train, bench_->test));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete bench_;
  }
  static synth::Benchmark* bench_;
  static PipelineResult* result_;
};

synth::Benchmark* SmallRun::bench_ = nullptr;
PipelineResult* SmallRun::result_ = nullptr;

TEST(PipelineConfig, JsonRoundTrip) {
  PipelineConfig cfg = small_config();
  cfg.excluded_faults = {3, 9};
  cfg.test_onset = 160;
  cfg.threads = 2;
  cfg.hidden_activation = ActivationKind::kLinear;
  const auto text = config_to_json_string(cfg);
  const auto back = config_from_json_string(text);
  EXPECT_EQ(config_to_json_string(back), text);
  EXPECT_EQ(back.architectures, cfg.architectures);
  EXPECT_EQ(back.loss_grid, cfg.loss_grid);
  EXPECT_EQ(back.test_onset, cfg.test_onset);
  EXPECT_EQ(back.excluded_faults, cfg.excluded_faults);
  EXPECT_EQ(back.schedule.epochs, cfg.schedule.epochs);
  EXPECT_EQ(back.hidden_activation, ActivationKind::kLinear);
}

TEST(PipelineConfig, DefaultsFillMissingKeys) {
  const auto cfg = config_from_json_string(R"({"mode": "diagnose"})");
  EXPECT_EQ(cfg.mode, Mode::kDiagnose);
  EXPECT_EQ(cfg.lambda_schedule, (std::vector<double>{0.01}));
  EXPECT_EQ(cfg.excluded_faults, (std::set<int>{3, 9, 15}));
}

TEST(PipelineConfig, RejectsBadDocuments) {
  EXPECT_THROW(config_from_json_string(R"({"mood": "detect"})"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"train": {"epochz": 3}})"), ConfigError);
  EXPECT_THROW(config_from_json_string("[1, 2"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"lambda_schedule": [1.0]})"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"lambda_schedule": []})"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"architectures": [[4, 0]]})"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"val_fraction": 1.5})"), ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"mode": "diagnose", "loss_grid": [{"delta": 3}]})"),
               ConfigError);
  EXPECT_THROW(config_from_json_string(R"({"mode": "classify"})"), ConfigError);
}

PruneIterationRecord rec(double val, std::size_t n_retained) {
  PruneIterationRecord r;
  r.val_accuracy = val;
  r.retained.assign(n_retained, "v");
  return r;
}

TEST(SelectBest, HighestValidationAccuracy) {
  EXPECT_EQ(select_best({rec(0.8, 10), rec(0.9, 8), rec(0.85, 6)}), 1u);
}

TEST(SelectBest, TiesPreferFewerInputsThenEarlier) {
  EXPECT_EQ(select_best({rec(0.9, 10), rec(0.9, 8), rec(0.9, 8)}), 1u);
  EXPECT_EQ(select_best({rec(0.9, 5), rec(0.9, 8)}), 0u);
  EXPECT_THROW(select_best({}), ConfigError);
}

TEST(Pipeline, AllInformativeVariablesAreAFixedPoint) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 400;
  const std::size_t d = 4;
  Matrix x(n, d);
  std::vector<int> faults(n);
  for (std::size_t r = 0; r < n; ++r) {
    faults[r] = r % 2 == 0 ? 0 : 1;
    for (std::size_t j = 0; j < d; ++j) x(r, j) = g(rng) + (faults[r] ? 2.5 : 0.0);
  }
  const Dataset raw = testing::make_dataset(x, faults);
  PipelineConfig cfg = small_config();
  cfg.architectures = {{4, 2}};
  cfg.loss_grid = {{0.1, 1.0, 0.0, 1.0}};
  cfg.lambda_schedule = {0.01};
  const auto data = prepare_data(cfg, raw, raw);
  const auto phase = run_static_phase(cfg, data);
  ASSERT_EQ(phase.records.size(), 1u);
  EXPECT_EQ(phase.final_mask, std::vector<bool>(d, true));
  EXPECT_GT(phase.records[0].val_accuracy, 0.85);
}

TEST_F(SmallRun, RetainedSetsAreNestedWithinEachBlock) {
  const auto& ledger = result_->ledger;
  ASSERT_FALSE(ledger.empty());
  EXPECT_EQ(ledger.front().block, "static");
  EXPECT_EQ(ledger.front().network, "DSAE");
  for (std::size_t i = 1; i < ledger.size(); ++i) {
    if (ledger[i].block != ledger[i - 1].block) continue;
    const auto& prev = ledger[i - 1].retained;
    for (const auto& name : ledger[i].retained) {
      EXPECT_NE(std::find(prev.begin(), prev.end(), name), prev.end()) << name;
    }
    EXPECT_LT(ledger[i].retained.size(), prev.size());
  }
}

TEST_F(SmallRun, DynamicPhaseStartsFromStaticMask) {
  const auto& ph = result_->dynamic_phase;
  ASSERT_FALSE(ph.records.empty());
  EXPECT_EQ(ph.records.front().mask, result_->static_phase.final_mask);
  EXPECT_EQ(ph.records.front().network, "DDSAE (lag 1)");
  EXPECT_EQ(ph.records.front().block, "lag1");
}

TEST_F(SmallRun, SelectedModelHasMaximumValidationAccuracy) {
  const auto& ledger = result_->ledger;
  const auto& best = ledger[result_->selected];
  for (const auto& r : ledger) EXPECT_LE(r.val_accuracy, best.val_accuracy);
  EXPECT_EQ(result_->bundle.lag, best.lag);
  EXPECT_EQ(result_->bundle.active_mask, best.mask);
  // The bundle reproduces the recorded accuracies on the selected splits.
  EXPECT_EQ(accuracy(result_->bundle.model, result_->selected_splits.val), best.val_accuracy);
  EXPECT_EQ(accuracy(result_->bundle.model, result_->selected_splits.test), best.test_accuracy);
}

TEST_F(SmallRun, BeatsTheMajorityRate) {
  const auto& test = result_->selected_splits.test;
  std::size_t normal = 0;
  for (int l : test.labels) normal += l == 0;
  const double majority =
      static_cast<double>(std::max(normal, test.rows() - normal)) / static_cast<double>(test.rows());
  EXPECT_GT(result_->ledger[result_->selected].test_accuracy, majority);
}

TEST_F(SmallRun, BundleViewMatchesSelectedTestSplit) {
  const auto view = bundle_view(result_->bundle, bench_->test);
  EXPECT_EQ(view.X, result_->selected_splits.test.X);
  EXPECT_EQ(view.labels, result_->selected_splits.test.labels);
}

TEST_F(SmallRun, OnlineReplayEqualsOfflineEvaluation) {
  const auto& b = result_->bundle;
  const auto& test = bench_->test;
  for (int run : {100, 101}) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < test.rows(); ++r) {
      if (test.runs[r] == run) rows.push_back(r);
    }
    const Matrix raw = test.X.select_rows(rows);
    const auto verdicts = score_online(b, raw);

    Dataset one = test;
    one.X = raw;
    one.labels.assign(rows.size(), 0);
    one.fault_ids.clear();
    one.runs.assign(rows.size(), run);
    for (auto r : rows) one.fault_ids.push_back(test.fault_ids[r]);
    one.origin.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) one.origin[i] = i;
    const auto view = bundle_view(b, one);
    const auto cache = forward(b.model, view.X);
    const auto preds = predict(b.model, view.X);

    ASSERT_EQ(verdicts.size(), rows.size());
    for (std::size_t i = 0; i < b.lag; ++i) {
      EXPECT_EQ(verdicts[i].status, Verdict::Status::kBuffering);
      EXPECT_FALSE(verdicts[i].alarm);
    }
    ASSERT_EQ(view.rows(), rows.size() - b.lag);
    std::vector<bool> offline_flag, online_flag;
    for (std::size_t i = 0; i < view.rows(); ++i) {
      const auto& v = verdicts[i + b.lag];
      ASSERT_EQ(v.status, Verdict::Status::kScored);
      EXPECT_EQ(v.cls, preds[i]);
      EXPECT_EQ(v.probability, cache.probs(i, static_cast<std::size_t>(preds[i])));
      offline_flag.push_back(b.class_fault_ids[preds[i]] != 0);
      online_flag.push_back(v.alarm);
    }
    EXPECT_EQ(online_flag, offline_flag);
    if (run == 100) {
      // Normal run: alarm rate equals the offline false alarm rate.
      EXPECT_DOUBLE_EQ(false_alarm_rate(online_flag, view.fault_ids),
                       false_alarm_rate(offline_flag, view.fault_ids));
    }
  }
}

TEST_F(SmallRun, AttributionCoversActiveVariablesOnAlarms) {
  const auto& test = bench_->test;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    if (test.runs[r] == 101) rows.push_back(r);
  }
  const auto verdicts = score_online(result_->bundle, test.X.select_rows(rows), true);
  std::size_t active = 0;
  for (bool m : result_->bundle.active_mask) active += m;
  for (const auto& v : verdicts) {
    EXPECT_EQ(v.attribution.size(), v.alarm ? active : 0u);
  }
}

TEST_F(SmallRun, ScorerRejectsWrongRowWidth) {
  OnlineScorer scorer(result_->bundle);
  const std::vector<double> row(3, 0.0);
  EXPECT_THROW(scorer.push(row), ShapeError);
}

// The first-alarm bound holds only for a detector without false alarms, so
// it is checked on a step fault far outside the normal range.
TEST(OnlineScorer, FirstAlarmComesAfterOnset) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t d = 3;
  auto make_run = [&](std::size_t n, std::size_t onset, int run) {
    Matrix x(n, d);
    std::vector<int> faults(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < d; ++j) x(r, j) = g(rng);
      if (r >= onset) {
        x(r, 0) += 10.0;
        faults[r] = 1;
      }
    }
    return testing::make_dataset(x, faults, std::vector<int>(n, run));
  };
  auto concat = [](Dataset a, const Dataset& b) {
    std::vector<double> v = a.X.data();
    v.insert(v.end(), b.X.data().begin(), b.X.data().end());
    a.X = Matrix(a.rows() + b.rows(), a.X.cols(), std::move(v));
    a.fault_ids.insert(a.fault_ids.end(), b.fault_ids.begin(), b.fault_ids.end());
    a.runs.insert(a.runs.end(), b.runs.begin(), b.runs.end());
    a.labels.insert(a.labels.end(), b.labels.begin(), b.labels.end());
    a.origin.resize(a.X.rows());
    for (std::size_t i = 0; i < a.origin.size(); ++i) a.origin[i] = i;
    return a;
  };
  const Dataset train = concat(make_run(400, 400, 0), make_run(400, 0, 1));
  const Dataset test = make_run(400, 160, 10);

  PipelineConfig cfg = small_config();
  cfg.architectures = {{3, 2}};
  cfg.lambda_schedule = {0.01};
  cfg.lags = {1};
  const auto data = prepare_data(cfg, train, test);
  const auto dyn = run_dynamic_phase(cfg, data, data.base_mask);
  ASSERT_FALSE(dyn.records.empty());
  const auto& rec = dyn.records[dyn.best];
  ModelBundle bundle;
  bundle.model = dyn.models[dyn.best];
  bundle.variable_names = train.catalog.names();
  bundle.scaling = data.scaling;
  bundle.active_mask = rec.mask;
  bundle.lag = rec.lag;
  bundle.class_fault_ids = data.reference.class_fault_ids;
  ASSERT_EQ(bundle.lag, 1u);

  const auto verdicts = score_online(bundle, test.X);
  EXPECT_EQ(verdicts[0].status, Verdict::Status::kBuffering);
  std::size_t first = verdicts.size();
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].alarm) {
      first = i;
      break;
    }
  }
  ASSERT_LT(first, verdicts.size()) << "step fault never raised an alarm";
  // Row numbers are 1-based; the fault enters after row 160.
  EXPECT_GE(first + 1, 161u);
  EXPECT_LE(first + 1, 165u);
}

TEST(Pipeline, RerunIsBitwiseIdenticalAndThreadIndependent) {
  const auto bench = small_benchmark(5);
  PipelineConfig cfg = small_config();
  cfg.architectures = {{6, 3}, {4}};
  cfg.schedule.epochs = 15;
  cfg.lags = {};
  cfg.max_iterations = 2;
  const auto a = run_pipeline(cfg, bench.train, bench.test);
  const auto b = run_pipeline(cfg, bench.train, bench.test);
  cfg.threads = 2;
  const auto c = run_pipeline(cfg, bench.train, bench.test);
  EXPECT_EQ(ledger_csv(a.ledger, a.selected), ledger_csv(b.ledger, b.selected));
  EXPECT_EQ(to_json_string(a.bundle), to_json_string(b.bundle));
  EXPECT_EQ(ledger_csv(a.ledger, a.selected), ledger_csv(c.ledger, c.selected));
  EXPECT_EQ(to_json_string(a.bundle), to_json_string(c.bundle));
}

TEST(Pipeline, OversizedLagIsSkipped) {
  const auto bench = small_benchmark(6);
  PipelineConfig cfg = small_config();
  cfg.schedule.epochs = 5;
  cfg.max_iterations = 1;
  cfg.lags = {5000};
  const auto res = run_pipeline(cfg, bench.train, bench.test);
  EXPECT_TRUE(res.dynamic_phase.records.empty());
  EXPECT_EQ(res.ledger.size(), res.static_phase.records.size());
}

TEST(Pipeline, MismatchedCatalogsRaise) {
  const auto bench = small_benchmark(7);
  Dataset test = bench.test;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < test.X.cols(); ++j) names.push_back("w" + std::to_string(j));
  test.catalog = VariableCatalog::from_names(names);
  EXPECT_THROW(prepare_data(small_config(), bench.train, test), DataError);
}

}  // namespace
}  // namespace xfdd
