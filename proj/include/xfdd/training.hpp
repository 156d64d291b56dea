#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xfdd/data.hpp"
#include "xfdd/losses.hpp"
#include "xfdd/model.hpp"

namespace xfdd {

struct TrainSchedule {
  std::size_t epochs = 100;
  // 0 means full batch.
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// One row per epoch; train_* are batch-size weighted means over the epoch.
struct LossTraceRow {
  std::size_t epoch = 0;
  double total = 0.0;
  double recon = 0.0;
  double cls = 0.0;
  double l2 = 0.0;
  double val_total = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<LossTraceRow> trace;
  // 0 when no epoch improved on the initial model.
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

// Minibatch adaptive-moment training on the composite loss. Returns the
// parameters with the lowest validation composite loss seen (the initial
// model counts as epoch 0). Without a validation set the full training loss
// is used. Throws DivergenceError on a non-finite loss or gradient.
TrainResult train(const Model& initial, const Dataset& train_set, const Dataset* val_set,
                  const CompositeLossConfig& cfg, const TrainSchedule& schedule);

// Composite loss of the whole dataset in one pass.
LossBreakdown evaluate_loss(const Model& model, const Dataset& ds, const CompositeLossConfig& cfg);

double accuracy(const Model& model, const Dataset& ds);

}  // namespace xfdd
