#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "multibin/binning.hpp"
#include "multibin/checkpoint.hpp"
#include "multibin/net.hpp"
#include "multibin/synthdata.hpp"
#include "multibin/train.hpp"

namespace multibin {

enum class Arm { direct, rvc, equal_width, randomized, explicit_sets };
enum class InferMode { expected, map };
enum class TaskKind { rotated, scalar };
enum class BinMeanMode { midpoint, empirical };

Arm arm_from_name(const std::string& name);
std::string arm_name(Arm arm);
InferMode infer_from_name(const std::string& name);
TaskKind task_from_name(const std::string& name);
BinMeanMode bin_means_from_name(const std::string& name);

struct ExperimentConfig {
  TaskKind task = TaskKind::rotated;
  Arm arm = Arm::equal_width;
  std::size_t k = 0;  // 0 = per-task default (rotated: one bin per degree; scalar: 32)
  std::size_t l = 16;
  std::size_t m = 8;
  uint64_t seed = 1;
  std::size_t trials = 3;

  std::vector<std::size_t> trunk_widths = {64, 64};
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double lr = 5e-4;
  double lr_decay = 0.1;
  std::size_t lr_decay_every = 10;
  double l2 = 0.0;

  InferMode infer = InferMode::expected;
  BinMeanMode bin_means = BinMeanMode::midpoint;
  std::size_t threads = 1;

  // task knobs
  std::size_t image_size = 16;
  int angle_lo = -45;
  int angle_hi = 45;
  std::string scalar_fn_name = "sine";
  double noise_sd = 0.05;
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;

  std::string ensemble_file;  // explicit arm only
  std::string out_dir;        // empty = no files written
};

// Per-trial seeds are derived from the master seed by a fixed counter scheme
// (see README); storing them makes every trial independently replayable.
struct TrialSeeds {
  uint64_t init = 0;
  uint64_t shuffle = 0;
  uint64_t bins = 0;
};

struct TrialResult {
  TrialSeeds seeds;
  double mae = 0.0;
  double accuracy = 0.0;  // NaN unless MAP inference ran
  double ensemble_sq_err = 0.0;
  double mean_individual_sq_err = 0.0;
  double ambiguity = 0.0;
  double final_train_loss = 0.0;
  double wall_s = 0.0;  // reported in the JSON sidecar only
  TrainLog log;
};

struct RunResult {
  ExperimentConfig config;
  std::string build_id;
  std::vector<TrialResult> trials;
  double mae_mean = 0.0;
  double mae_sd = 0.0;
  double accuracy_mean = 0.0;  // NaN unless MAP inference ran
  double accuracy_sd = 0.0;
};

// Validates the config (throws config_error), generates the task data,
// builds the arm's ensemble, trains config.trials networks with derived
// seeds, evaluates test metrics, and - when config.out_dir is set - writes
// run.csv plus a run.json sidecar. Trials may execute on config.threads
// workers; outputs are identical regardless of parallelism. When
// capture_first is non-null it receives trial 0's trained net and ensemble.
RunResult run(const ExperimentConfig& config, Checkpoint* capture_first = nullptr);

struct SweepCell {
  std::size_t l = 0;
  std::size_t m = 0;
  bool ok = false;
  std::string error;
  double mae_mean = 0.0;
  double mae_sd = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major over (l, m)
  // per L value: true when mean MAE decreases at every step up in M
  std::vector<std::pair<std::size_t, bool>> mae_decreases_with_m;
};

// One run per (L, M) cell; cell failures are recorded and the sweep
// continues. Writes sweep.csv / sweep.json under config.out_dir when set.
SweepResult sweep(const ExperimentConfig& config,
                  const std::vector<std::size_t>& l_values,
                  const std::vector<std::size_t>& m_values);

double mean_absolute_error(const std::vector<double>& predictions,
                           const std::vector<double>& targets);
double exact_match_accuracy(const std::vector<std::size_t>& predicted,
                            const std::vector<std::size_t>& actual);

// Bin representatives resolved once per trial: member means drive the
// expected-value path, base means turn MAP class picks into point values.
// Empirical mode averages the training targets per bin (midpoint fallback
// for empty bins).
struct InferencePlan {
  InferMode mode = InferMode::expected;
  std::vector<std::vector<double>> member_means;
  std::vector<double> base_means;
};

InferencePlan make_inference_plan(const DiscretizationEnsemble& ens, InferMode mode,
                                  BinMeanMode bin_means,
                                  const std::vector<double>& train_targets);

// Point predictions for a trained net on a feature matrix, through the
// plan's inference path (forward runs in mini-batches to bound memory).
// Direct-regression nets return their linear output regardless of the plan.
std::vector<double> predict(const MultiHeadNetwork& net, const Matrix& features,
                            const DiscretizationEnsemble& ens,
                            const InferencePlan& plan);

// MAP base-class picks from the overlap-marginalized posterior; used for the
// accuracy metric on ordinal tasks.
std::vector<std::size_t> predict_classes(const MultiHeadNetwork& net,
                                         const Matrix& features,
                                         const DiscretizationEnsemble& ens);

// Shared helpers for the ledger files.
std::string format_double(double v);  // shortest round-trip decimal (17 sig digits)
std::string build_id();

// Per-task support/base resolution used by run(); exposed for the CLI eval
// path and tests.
Interval task_support(const ExperimentConfig& config);
std::size_t default_k(const ExperimentConfig& config);
Dataset generate_task_data(const ExperimentConfig& config);
DiscretizationEnsemble build_ensemble(const ExperimentConfig& config,
                                      const Discretization& base, uint64_t bins_seed);
TrialSeeds derive_trial_seeds(uint64_t master_seed, std::size_t trial);

}  // namespace multibin
