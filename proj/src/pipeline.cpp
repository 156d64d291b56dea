#include "xfdd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "json.hpp"
#include "xfdd/errors.hpp"
#include "xfdd/log.hpp"
#include "xfdd/nn.hpp"

namespace xfdd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  if (architectures.empty()) throw ConfigError("config needs at least one architecture");
  for (const auto& a : architectures) {
    if (a.empty()) throw ConfigError("architecture with no encoder layer");
    for (auto w : a) {
      if (w == 0) throw ConfigError("architecture width 0");
    }
  }
  if (loss_grid.empty()) throw ConfigError("config needs at least one loss setting");
  for (const auto& l : loss_grid) {
    l.validate();
    if (mode == Mode::kDiagnose && l.delta != 1.0) {
      throw ConfigError("delta only applies to detection");
    }
  }
  if (lambda_schedule.empty()) throw ConfigError("config needs at least one prune threshold");
  for (double l : lambda_schedule) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("prune thresholds must be in (0, 1)");
  }
  if (patience == 0) throw ConfigError("patience must be >= 1");
  if (max_iterations == 0) throw ConfigError("max_iterations must be >= 1");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must be in (0, 1)");
  if (!(schedule.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

namespace {

const std::set<std::string> kConfigKeys = {
    "mode", "architectures", "loss_grid", "lambda_schedule", "lags", "patience",
    "accuracy_tolerance", "max_iterations", "epsilon", "val_fraction", "train",
    "hidden_activation", "reconstruction_activation", "excluded_faults", "include_normal",
    "test_onset", "seed", "threads", "pca_components", "dpca_lag", "dpca_components"};
const std::set<std::string> kLossKeys = {"lambda1", "lambda2", "lambda3", "delta"};
const std::set<std::string> kTrainKeys = {"epochs", "batch_size", "learning_rate"};

void reject_unknown(const json& obj, const std::set<std::string>& keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!keys.count(key)) throw ConfigError("unknown " + where + " key '" + key + "'");
  }
}

}  // namespace

PipelineConfig config_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  reject_unknown(doc, kConfigKeys, "config");
  PipelineConfig cfg;
  try {
    if (doc.contains("mode")) cfg.mode = mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("architectures")) {
      cfg.architectures = doc["architectures"].get<std::vector<std::vector<std::size_t>>>();
    }
    if (doc.contains("loss_grid")) {
      cfg.loss_grid.clear();
      for (const auto& l : doc["loss_grid"]) {
        reject_unknown(l, kLossKeys, "loss_grid");
        CompositeLossConfig c;
        c.lambda1 = l.value("lambda1", c.lambda1);
        c.lambda2 = l.value("lambda2", c.lambda2);
        c.lambda3 = l.value("lambda3", c.lambda3);
        c.delta = l.value("delta", c.delta);
        cfg.loss_grid.push_back(c);
      }
    }
    if (doc.contains("lambda_schedule")) {
      cfg.lambda_schedule = doc["lambda_schedule"].get<std::vector<double>>();
    }
    if (doc.contains("lags")) cfg.lags = doc["lags"].get<std::vector<std::size_t>>();
    cfg.patience = doc.value("patience", cfg.patience);
    cfg.accuracy_tolerance = doc.value("accuracy_tolerance", cfg.accuracy_tolerance);
    cfg.max_iterations = doc.value("max_iterations", cfg.max_iterations);
    cfg.epsilon = doc.value("epsilon", cfg.epsilon);
    cfg.val_fraction = doc.value("val_fraction", cfg.val_fraction);
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      reject_unknown(t, kTrainKeys, "train");
      cfg.schedule.epochs = t.value("epochs", cfg.schedule.epochs);
      cfg.schedule.batch_size = t.value("batch_size", cfg.schedule.batch_size);
      cfg.schedule.learning_rate = t.value("learning_rate", cfg.schedule.learning_rate);
    }
    if (doc.contains("hidden_activation")) {
      cfg.hidden_activation = activation_from_string(doc["hidden_activation"].get<std::string>());
    }
    if (doc.contains("reconstruction_activation")) {
      cfg.reconstruction_activation =
          activation_from_string(doc["reconstruction_activation"].get<std::string>());
    }
    if (doc.contains("excluded_faults")) {
      cfg.excluded_faults = doc["excluded_faults"].get<std::set<int>>();
    }
    cfg.include_normal = doc.value("include_normal", cfg.include_normal);
    if (doc.contains("test_onset") && !doc["test_onset"].is_null()) {
      cfg.test_onset = doc["test_onset"].get<std::size_t>();
    }
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.threads = doc.value("threads", cfg.threads);
    cfg.pca_components = doc.value("pca_components", cfg.pca_components);
    cfg.dpca_lag = doc.value("dpca_lag", cfg.dpca_lag);
    cfg.dpca_components = doc.value("dpca_components", cfg.dpca_components);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json_string(const PipelineConfig& cfg) {
  json losses = json::array();
  for (const auto& l : cfg.loss_grid) {
    losses.push_back({{"lambda1", l.lambda1}, {"lambda2", l.lambda2}, {"lambda3", l.lambda3},
                      {"delta", l.delta}});
  }
  json doc{{"mode", to_string(cfg.mode)},
           {"architectures", cfg.architectures},
           {"loss_grid", losses},
           {"lambda_schedule", cfg.lambda_schedule},
           {"lags", cfg.lags},
           {"patience", cfg.patience},
           {"accuracy_tolerance", cfg.accuracy_tolerance},
           {"max_iterations", cfg.max_iterations},
           {"epsilon", cfg.epsilon},
           {"val_fraction", cfg.val_fraction},
           {"train", {{"epochs", cfg.schedule.epochs},
                      {"batch_size", cfg.schedule.batch_size},
                      {"learning_rate", cfg.schedule.learning_rate}}},
           {"hidden_activation", to_string(cfg.hidden_activation)},
           {"reconstruction_activation", to_string(cfg.reconstruction_activation)},
           {"excluded_faults", cfg.excluded_faults},
           {"include_normal", cfg.include_normal},
           {"test_onset", cfg.test_onset ? json(*cfg.test_onset) : json(nullptr)},
           {"seed", cfg.seed},
           {"threads", cfg.threads},
           {"pca_components", cfg.pca_components},
           {"dpca_lag", cfg.dpca_lag},
           {"dpca_components", cfg.dpca_components}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Data preparation

namespace {

Dataset label(const PipelineConfig& cfg, const Dataset& ds) {
  if (cfg.mode == Mode::kDetect) return label_for_detection(ds);
  return label_for_diagnosis(ds, cfg.excluded_faults, cfg.include_normal);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  // splitmix64 over the combined words.
  std::uint64_t x = a;
  for (std::uint64_t w : {b, c, d}) {
    x ^= w + 0x9E3779B97F4A7C15ULL + (x << 6) + (x >> 2);
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    x ^= x >> 31;
  }
  return x;
}

}  // namespace

PreparedData prepare_data(const PipelineConfig& cfg, const Dataset& raw_train,
                          const Dataset& raw_test) {
  cfg.validate();
  raw_train.check();
  raw_test.check();
  if (!(raw_train.catalog == raw_test.catalog)) {
    throw DataError("training and test data use different variables");
  }
  Dataset test = cfg.test_onset ? apply_onset(raw_test, *cfg.test_onset) : raw_test;

  PreparedData out;
  out.reference = label(cfg, raw_train);
  auto [tr, va] = split_train_val(out.reference, cfg.val_fraction, cfg.seed);
  out.val_origins.insert(va.origin.begin(), va.origin.end());

  // Scaling is fitted on training-split rows only.
  auto fitted = standardize(tr, {raw_train, test});
  out.scaling = fitted.train.scaling;
  out.base_mask = fitted.train.active_mask;
  out.warnings = fitted.warnings;
  out.train_full = std::move(fitted.others[0]);
  out.test = std::move(fitted.others[1]);
  return out;
}

Splits materialize(const PipelineConfig& cfg, const PreparedData& data,
                   const std::vector<bool>& mask, std::size_t lag) {
  Dataset full = lag_augment(apply_mask(data.train_full, mask), lag);
  Dataset test = lag_augment(apply_mask(data.test, mask), lag);
  Splits s;
  auto [tr, va] = split_by_origin(align_classes(full, data.reference), data.val_origins);
  s.train = std::move(tr);
  s.val = std::move(va);
  s.test = align_classes(test, data.reference);
  if (s.train.rows() == 0 || s.val.rows() == 0) {
    throw DataError("lag " + std::to_string(lag) + " leaves no training or validation rows");
  }
  (void)cfg;
  return s;
}

// ---------------------------------------------------------------------------
// Prune/retrain loop

std::size_t select_best(const std::vector<PruneIterationRecord>& records) {
  if (records.empty()) throw ConfigError("empty ledger");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = records[best];
    if (a.val_accuracy > b.val_accuracy ||
        (a.val_accuracy == b.val_accuracy && a.retained.size() < b.retained.size())) {
      best = i;
    }
  }
  return best;
}

namespace {

struct Candidate {
  std::size_t arch = 0;
  std::size_t loss = 0;
};

struct CandidateOutcome {
  TrainResult trained;
  double val_accuracy = 0.0;
};

std::vector<CandidateOutcome> train_candidates(const PipelineConfig& cfg, const Splits& splits,
                                               std::uint64_t salt, std::size_t iteration) {
  std::vector<Candidate> cands;
  for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
    for (std::size_t l = 0; l < cfg.loss_grid.size(); ++l) cands.push_back({a, l});
  }
  std::vector<CandidateOutcome> results(cands.size());
  std::vector<std::exception_ptr> errors(cands.size());
  const std::size_t m = splits.train.num_classes();

  auto run_one = [&](std::size_t i) {
    try {
      const auto& c = cands[i];
      NetworkSpec spec = NetworkSpec::mirrored(splits.train.X.cols(), cfg.architectures[c.arch], m,
                                               mix_seed(cfg.seed, salt, iteration, 2 * i));
      spec.hidden_activation = cfg.hidden_activation;
      spec.reconstruction_activation = cfg.reconstruction_activation;
      TrainSchedule schedule = cfg.schedule;
      schedule.seed = mix_seed(cfg.seed, salt, iteration, 2 * i + 1);
      results[i].trained =
          train(init_model(spec), splits.train, &splits.val, cfg.loss_grid[c.loss], schedule);
      results[i].val_accuracy = accuracy(results[i].trained.model, splits.val);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t threads = std::min(cfg.threads, cands.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < cands.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < cands.size(); i += threads) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<std::string> retained_names(const Dataset& ds) {
  std::vector<std::string> out;
  for (auto v : ds.active_indices()) out.push_back(ds.catalog[v].name);
  return out;
}

// One prune/retrain block at a fixed lag, appended to `phase`.
void run_block(const PipelineConfig& cfg, const PreparedData& data, std::vector<bool> mask,
               std::size_t lag, PhaseResult& phase) {
  const std::string block = lag == 0 ? "static" : "lag" + std::to_string(lag);
  const std::uint64_t salt = 1000 + lag;
  std::size_t lambda_idx = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t drops = 0;

  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    const Splits splits = materialize(cfg, data, mask, lag);
    auto outcomes = train_candidates(cfg, splits, salt, iter);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
      if (outcomes[i].val_accuracy > outcomes[pick].val_accuracy) pick = i;
    }
    const std::size_t n_loss = cfg.loss_grid.size();
    const Model& model = outcomes[pick].trained.model;

    PruneIterationRecord rec;
    rec.block = block;
    rec.iteration = iter;
    rec.lag = lag;
    const std::string base = lag == 0 ? "DSAE" : "DDSAE";
    rec.network = (iter == 1 ? "" : "x") + base + (lag == 0 ? "" : " (lag " + std::to_string(lag) + ")");
    rec.architecture = model.spec.architecture_string();
    rec.retained = retained_names(splits.train);
    rec.mask = splits.train.active_mask;
    rec.val_accuracy = outcomes[pick].val_accuracy;
    rec.test_accuracy = splits.test.rows() ? accuracy(model, splits.test) : 0.0;
    rec.loss = cfg.loss_grid[pick % n_loss];

    RelevanceReport report = overall_relevance(model, splits.val, {cfg.epsilon, cfg.lambda_schedule[
        std::min(lambda_idx, cfg.lambda_schedule.size() - 1)]});

    log::info(block + " iteration " + std::to_string(iter) + ": " + rec.architecture +
              " val " + std::to_string(rec.val_accuracy) + " test " +
              std::to_string(rec.test_accuracy));

    phase.records.push_back(rec);
    phase.models.push_back(model);
    phase.relevance.push_back(report);
    phase.traces.push_back(outcomes[pick].trained.trace);

    if (rec.val_accuracy < best_val - cfg.accuracy_tolerance) {
      if (++drops >= cfg.patience) break;
    } else {
      drops = 0;
    }
    best_val = std::max(best_val, rec.val_accuracy);

    std::vector<bool> next;
    while (lambda_idx < cfg.lambda_schedule.size()) {
      next = prune_mask(report, cfg.lambda_schedule[lambda_idx], mask.size());
      if (next != mask) break;
      ++lambda_idx;
    }
    if (lambda_idx == cfg.lambda_schedule.size()) break;
    phase.records.back().lambda = cfg.lambda_schedule[lambda_idx];
    mask = std::move(next);
  }
}

}  // namespace

PhaseResult run_static_phase(const PipelineConfig& cfg, const PreparedData& data) {
  PhaseResult phase;
  run_block(cfg, data, data.base_mask, 0, phase);
  phase.best = select_best(phase.records);
  phase.final_mask = phase.records[phase.best].mask;
  return phase;
}

PhaseResult run_dynamic_phase(const PipelineConfig& cfg, const PreparedData& data,
                              const std::vector<bool>& mask) {
  PhaseResult phase;
  for (std::size_t lag : cfg.lags) {
    try {
      run_block(cfg, data, mask, lag, phase);
    } catch (const DataError& e) {
      log::warn("skipping lag " + std::to_string(lag) + ": " + e.what());
    }
  }
  if (!phase.records.empty()) {
    phase.best = select_best(phase.records);
    phase.final_mask = phase.records[phase.best].mask;
  }
  return phase;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Dataset& raw_train,
                            const Dataset& raw_test) {
  PipelineResult res;
  res.data = prepare_data(cfg, raw_train, raw_test);
  res.static_phase = run_static_phase(cfg, res.data);
  res.dynamic_phase = run_dynamic_phase(cfg, res.data, res.static_phase.final_mask);

  res.ledger = res.static_phase.records;
  res.ledger.insert(res.ledger.end(), res.dynamic_phase.records.begin(),
                    res.dynamic_phase.records.end());
  res.selected = select_best(res.ledger);

  const bool from_static = res.selected < res.static_phase.records.size();
  const PhaseResult& phase = from_static ? res.static_phase : res.dynamic_phase;
  const std::size_t idx = from_static ? res.selected : res.selected - res.static_phase.records.size();
  const auto& rec = phase.records[idx];

  ModelBundle& b = res.bundle;
  b.model = phase.models[idx];
  b.mode = cfg.mode;
  b.variable_names = raw_train.catalog.names();
  b.scaling = res.data.scaling;
  b.active_mask = rec.mask;
  b.lag = rec.lag;
  b.class_fault_ids = res.data.reference.class_fault_ids;
  b.loss = rec.loss;
  b.seed = cfg.seed;
  b.check();
  res.selected_splits = materialize(cfg, res.data, rec.mask, rec.lag);
  res.selected_trace = phase.traces[idx];
  return res;
}

// ---------------------------------------------------------------------------
// Online scoring

Dataset bundle_view(const ModelBundle& bundle, const Dataset& raw) {
  bundle.check();
  if (raw.catalog.names() != bundle.variable_names) {
    throw DataError("data columns do not match the model's variables");
  }
  Dataset reference;
  reference.class_fault_ids = bundle.class_fault_ids;
  Dataset scaled = apply_scaling(raw, bundle.scaling, bundle.active_mask);
  return align_classes(lag_augment(scaled, bundle.lag), reference);
}

OnlineScorer::OnlineScorer(ModelBundle bundle, bool attribute, double epsilon)
    : bundle_(std::move(bundle)), attribute_(attribute), epsilon_(epsilon) {
  bundle_.check();
  for (std::size_t i = 0; i < bundle_.active_mask.size(); ++i) {
    if (bundle_.active_mask[i]) active_.push_back(i);
  }
}

Verdict OnlineScorer::push(std::span<const double> raw_row) {
  if (raw_row.size() != bundle_.variable_names.size()) {
    throw ShapeError("row has " + std::to_string(raw_row.size()) + " values, model expects " +
                     std::to_string(bundle_.variable_names.size()));
  }
  std::vector<double> z(active_.size());
  for (std::size_t j = 0; j < active_.size(); ++j) {
    const auto& s = bundle_.scaling[active_[j]];
    z[j] = (raw_row[active_[j]] - s.mean) / s.std;
  }
  history_.push_back(std::move(z));
  if (history_.size() > bundle_.lag + 1) history_.erase(history_.begin());

  Verdict v;
  if (history_.size() < bundle_.lag + 1) return v;

  std::vector<double> x;
  x.reserve(bundle_.model.spec.input_dim);
  for (std::size_t k = 0; k <= bundle_.lag; ++k) {
    const auto& h = history_[history_.size() - 1 - k];
    x.insert(x.end(), h.begin(), h.end());
  }
  const Matrix batch(1, x.size(), x);
  const ForwardCache cache = forward(bundle_.model, batch);
  auto p = cache.logits.row(0);
  const auto cls = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  v.status = Verdict::Status::kScored;
  v.cls = static_cast<int>(cls);
  v.fault_id = bundle_.class_fault_ids[cls];
  v.probability = cache.probs(0, cls);
  v.alarm = v.fault_id != 0;
  if (attribute_ && v.alarm) {
    const auto rel = relevance_sample(bundle_.model, x, v.cls, epsilon_);
    const std::size_t d = active_.size();
    v.attribution.assign(d, 0.0);
    for (std::size_t k = 0; k <= bundle_.lag; ++k) {
      for (std::size_t j = 0; j < d; ++j) v.attribution[j] += std::abs(rel.values[k * d + j]);
    }
  }
  return v;
}

std::vector<Verdict> score_online(const ModelBundle& bundle, const Matrix& raw_rows,
                                  bool attribute) {
  OnlineScorer scorer(bundle, attribute);
  std::vector<Verdict> out;
  out.reserve(raw_rows.rows());
  for (std::size_t r = 0; r < raw_rows.rows(); ++r) out.push_back(scorer.push(raw_rows.row(r)));
  return out;
}

}  // namespace xfdd
