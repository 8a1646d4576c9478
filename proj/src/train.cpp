#include "multibin/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "multibin/errors.hpp"
#include "multibin/rng.hpp"

namespace multibin {

TrainLog train(MultiHeadNetwork& net, const EncodedBatch& data,
               const TrainConfig& cfg, const ValMetric& val_metric) {
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.lr_decay_every == 0) throw std::invalid_argument("train: lr_decay_every must be >= 1");

  TrainLog log;
  if (cfg.epochs == 0 || data.sample_count() == 0) return log;

  AdamState opt = make_adam(net, cfg.lr);
  Rng shuffle_rng(cfg.shuffle_seed);
  const std::size_t n = data.sample_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::size_t decay_steps = (epoch - 1) / cfg.lr_decay_every;
    const double lr_epoch =
        cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(decay_steps));
    opt.lr = lr_epoch;

    // Fisher-Yates with the project Rng so runs replay bit-exactly
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_below(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(start + cfg.batch_size, n);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const EncodedBatch mini = gather(data, idx);
      const ForwardState fs = forward(net, mini.features);
      const double loss = net.mode == NetMode::direct_regression
                              ? mse_loss(fs, mini.targets)
                              : cross_entropy_loss(fs, mini);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss " << loss << " at epoch " << epoch
            << ", batch " << batch_index;
        throw numeric_error(msg.str());
      }
      epoch_loss += loss;
      const Gradients grads = backward(net, fs, mini, cfg.l2);
      adam_step(net, grads, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_epoch;
    rec.train_loss = epoch_loss;
    rec.l2_penalty = l2_penalty(net, cfg.l2);
    rec.val_mae = val_metric ? val_metric(net) : std::numeric_limits<double>::quiet_NaN();
    log.push_back(rec);
  }
  return log;
}

}  // namespace multibin
