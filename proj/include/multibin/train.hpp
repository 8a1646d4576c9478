#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "multibin/adam.hpp"
#include "multibin/encoding.hpp"
#include "multibin/net.hpp"

namespace multibin {

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double lr = 5e-4;
  double lr_decay = 0.1;             // multiplier applied every lr_decay_every epochs
  std::size_t lr_decay_every = 10;
  double l2 = 0.0;
  uint64_t shuffle_seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;       // 1-based
  double lr = 0.0;
  double train_loss = 0.0;     // summed data loss over the epoch
  double l2_penalty = 0.0;     // penalty at end of epoch
  double val_mae = 0.0;        // NaN when no validation metric is supplied
};

using TrainLog = std::vector<EpochRecord>;

// Metric evaluated on the current parameters after each epoch (the harness
// passes test-set MAE). Keeps this module independent of inference code.
using ValMetric = std::function<double(const MultiHeadNetwork&)>;

// Seeded-shuffle mini-batch training on the summed loss (cross entropy for
// softmax modes, squared error for direct regression). Learning rate decays
// by cfg.lr_decay every cfg.lr_decay_every epochs. Throws numeric_error with
// epoch/batch/loss diagnostics as soon as a batch loss is non-finite.
TrainLog train(MultiHeadNetwork& net, const EncodedBatch& data,
               const TrainConfig& cfg, const ValMetric& val_metric = nullptr);

}  // namespace multibin
