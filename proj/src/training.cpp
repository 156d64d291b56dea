#include "xfdd/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "xfdd/errors.hpp"
#include "xfdd/nn.hpp"

namespace xfdd {

LossBreakdown evaluate_loss(const Model& model, const Dataset& ds, const CompositeLossConfig& cfg) {
  const ForwardCache cache = forward(model, ds.X);
  const Matrix y = one_hot(ds.labels, model.spec.num_classes);
  return composite_loss(model, ds.X, cache, y, cfg);
}

double accuracy(const Model& model, const Dataset& ds) {
  if (ds.rows() == 0) return 0.0;
  const auto pred = predict(model, ds.X);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < pred.size(); ++r) hit += pred[r] == ds.labels[r];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

TrainResult train(const Model& initial, const Dataset& train_set, const Dataset* val_set,
                  const CompositeLossConfig& cfg, const TrainSchedule& schedule) {
  cfg.validate();
  if (train_set.X.cols() != initial.spec.input_dim) {
    throw ShapeError("training data has " + std::to_string(train_set.X.cols()) +
                     " columns, model expects " + std::to_string(initial.spec.input_dim));
  }
  if (train_set.rows() == 0) throw DataError("empty training set");
  if (!(schedule.learning_rate > 0)) throw ConfigError("learning rate must be positive");

  const Dataset& select_on = val_set != nullptr && val_set->rows() > 0 ? *val_set : train_set;
  TrainResult result;
  result.model = initial;
  result.best_val_loss = evaluate_loss(initial, select_on, cfg).total;
  if (!std::isfinite(result.best_val_loss)) throw DivergenceError("initial loss is not finite");

  Model model = initial;
  OptimizerState state = OptimizerState::for_model(model, schedule.learning_rate);
  std::mt19937_64 rng(schedule.seed);
  const std::size_t n = train_set.rows();
  const std::size_t batch = schedule.batch_size == 0 ? n : std::min(schedule.batch_size, n);
  const Matrix y_all = one_hot(train_set.labels, initial.spec.num_classes);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    LossTraceRow row;
    row.epoch = epoch;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = train_set.X.select_rows(idx);
      const Matrix yb = y_all.select_rows(idx);
      const ForwardCache cache = forward(model, xb);
      const LossBreakdown loss = composite_loss(model, xb, cache, yb, cfg);
      if (!std::isfinite(loss.total)) {
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
      }
      const double w = static_cast<double>(stop - start) / static_cast<double>(n);
      row.total += w * loss.total;
      row.recon += w * loss.recon;
      row.cls += w * loss.cls;
      row.l2 += w * loss.l2;
      adam_step(model, backward(model, cache, yb, cfg), state);
    }
    row.val_total = evaluate_loss(model, select_on, cfg).total;
    if (!std::isfinite(row.val_total)) {
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    if (row.val_total < result.best_val_loss) {
      result.best_val_loss = row.val_total;
      result.best_epoch = epoch;
      result.model = model;
    }
    result.trace.push_back(row);
  }
  return result;
}

}  // namespace xfdd
