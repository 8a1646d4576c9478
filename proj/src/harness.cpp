#include "multibin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "multibin/errors.hpp"
#include "multibin/inference.hpp"
#include "multibin/rng.hpp"

#ifndef MULTIBIN_BUILD_ID
#define MULTIBIN_BUILD_ID "unknown"
#endif

namespace multibin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kEvalBatch = 256;

struct Summary {
  double mean = kNaN;
  double sd = kNaN;
};

// mean and sample standard deviation (n-1), in trial order
Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) {
    s.sd = 0.0;
    return s;
  }
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  return s;
}

void run_indexed(std::size_t count, std::size_t threads,
                 const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers = std::min(threads, count);
  pool.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Arm arm_from_name(const std::string& name) {
  if (name == "direct") return Arm::direct;
  if (name == "rvc") return Arm::rvc;
  if (name == "equal-width") return Arm::equal_width;
  if (name == "randomized") return Arm::randomized;
  if (name == "explicit") return Arm::explicit_sets;
  throw config_error("unknown arm '" + name +
                     "' (direct|rvc|equal-width|randomized|explicit)");
}

std::string arm_name(Arm arm) {
  switch (arm) {
    case Arm::direct: return "direct";
    case Arm::rvc: return "rvc";
    case Arm::equal_width: return "equal-width";
    case Arm::randomized: return "randomized";
    case Arm::explicit_sets: return "explicit";
  }
  return "?";
}

InferMode infer_from_name(const std::string& name) {
  if (name == "expected") return InferMode::expected;
  if (name == "map") return InferMode::map;
  throw config_error("unknown inference mode '" + name + "' (expected|map)");
}

TaskKind task_from_name(const std::string& name) {
  if (name == "rotated") return TaskKind::rotated;
  if (name == "scalar") return TaskKind::scalar;
  throw config_error("unknown task '" + name + "' (rotated|scalar)");
}

BinMeanMode bin_means_from_name(const std::string& name) {
  if (name == "midpoint") return BinMeanMode::midpoint;
  if (name == "empirical") return BinMeanMode::empirical;
  throw config_error("unknown bin-means mode '" + name + "' (midpoint|empirical)");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string build_id() { return MULTIBIN_BUILD_ID; }

Interval task_support(const ExperimentConfig& config) {
  if (config.task == TaskKind::rotated) {
    RotatedPatternTask task;
    task.angle_lo = config.angle_lo;
    task.angle_hi = config.angle_hi;
    return task.support();
  }
  return ScalarTask{}.support();
}

std::size_t default_k(const ExperimentConfig& config) {
  if (config.k != 0) return config.k;
  if (config.task == TaskKind::rotated)
    return static_cast<std::size_t>(static_cast<long>(config.angle_hi) -
                                    static_cast<long>(config.angle_lo) + 1);
  return 32;
}

Dataset generate_task_data(const ExperimentConfig& config) {
  if (config.task == TaskKind::rotated) {
    RotatedPatternTask task;
    task.image_size = config.image_size;
    task.angle_lo = config.angle_lo;
    task.angle_hi = config.angle_hi;
    task.n_train = config.n_train;
    task.n_test = config.n_test;
    task.seed = config.seed;
    return generate_rotated(task);
  }
  ScalarTask task;
  task.fn = scalar_fn_from_name(config.scalar_fn_name);
  task.noise_sd = config.noise_sd;
  task.n_train = config.n_train;
  task.n_test = config.n_test;
  task.seed = config.seed;
  return generate_scalar(task);
}

TrialSeeds derive_trial_seeds(uint64_t master_seed, std::size_t trial) {
  const uint64_t base = derive_seed(master_seed, 0x100 + trial);
  TrialSeeds seeds;
  seeds.init = derive_seed(base, 1);
  seeds.shuffle = derive_seed(base, 2);
  seeds.bins = derive_seed(base, 3);
  return seeds;
}

DiscretizationEnsemble build_ensemble(const ExperimentConfig& config,
                                      const Discretization& base, uint64_t bins_seed) {
  switch (config.arm) {
    case Arm::direct: {
      DiscretizationEnsemble ens;
      ens.base = base;
      ens.support = base.support;
      return ens;  // no members; the net has a single linear output
    }
    case Arm::rvc:
      // exactly the equal-width construction at L = K, M = 1, which
      // reproduces the base partition
      return equal_width_overlapping(base, base.size(), 1);
    case Arm::equal_width:
      return equal_width_overlapping(base, config.l, config.m);
    case Arm::randomized:
      return randomized_bins(base, config.l, config.m, bins_seed);
    case Arm::explicit_sets:
      return explicit_ensemble(base, load_ensemble_sets(config.ensemble_file));
  }
  throw config_error("unknown arm");
}

namespace {

void validate(const ExperimentConfig& config) {
  const std::size_t k = default_k(config);
  if (k == 0) throw config_error("K must be >= 1");
  if (config.trials == 0) throw config_error("trials must be >= 1");
  if (config.batch_size == 0) throw config_error("batch-size must be >= 1");
  if (config.lr <= 0.0) throw config_error("lr must be > 0");
  if (config.lr_decay <= 0.0) throw config_error("lr-decay must be > 0");
  if (config.lr_decay_every == 0) throw config_error("lr-decay-every must be >= 1");
  if (config.l2 < 0.0) throw config_error("l2 must be >= 0");
  if (config.threads == 0) throw config_error("threads must be >= 1");
  if (config.trunk_widths.empty()) throw config_error("trunk must have at least one layer");
  for (std::size_t w : config.trunk_widths)
    if (w == 0) throw config_error("trunk widths must be >= 1");

  switch (config.arm) {
    case Arm::direct:
    case Arm::rvc:
      break;  // no L/M constraints
    case Arm::equal_width:
      if (config.l == 0 || config.m == 0) throw config_error("equal-width needs L >= 1 and M >= 1");
      break;
    case Arm::randomized:
      if (config.l == 0) throw config_error("randomized needs L >= 1");
      if (config.l >= k)
        throw config_error("randomized needs L < K (got L=" + std::to_string(config.l) +
                           ", K=" + std::to_string(k) + ")");
      if (config.m == 0) throw config_error("randomized needs M >= 1");
      break;
    case Arm::explicit_sets:
      if (config.ensemble_file.empty())
        throw config_error("explicit arm needs --ensemble-file");
      break;
  }
  if (config.arm == Arm::direct && config.infer == InferMode::map)
    throw config_error("direct regression has no posterior; --infer map is not applicable");
  if (config.task == TaskKind::rotated) {
    if (config.image_size < 8) throw config_error("image-size must be >= 8");
    if (config.angle_hi < config.angle_lo) throw config_error("empty angle range");
  } else {
    scalar_fn_from_name(config.scalar_fn_name);  // throws on bad name
    if (config.noise_sd < 0.0) throw config_error("noise-sd must be >= 0");
  }
  if (config.n_train == 0) throw config_error("n-train must be >= 1");
  if (config.n_test == 0) throw config_error("n-test must be >= 1");
}

struct TrialContext {
  const ExperimentConfig& config;
  const Dataset& data;
  const Discretization& base;
  Matrix test_features;
  std::vector<double> train_targets;
  std::vector<double> test_targets;
  std::vector<std::size_t> test_classes;  // base-class labels of test targets
};

std::vector<double> predict_impl(const MultiHeadNetwork& net, const Matrix& features,
                                 const InferencePlan& plan,
                                 const OverlapMatrices* overlaps) {
  std::vector<double> preds;
  preds.reserve(features.rows());
  for (std::size_t start = 0; start < features.rows(); start += kEvalBatch) {
    const std::size_t stop = std::min(start + kEvalBatch, features.rows());
    Matrix chunk(stop - start, features.cols());
    for (std::size_t i = start; i < stop; ++i)
      std::copy(features.row(i), features.row(i) + features.cols(), chunk.row(i - start));
    const ForwardState fs = forward(net, chunk);
    if (net.mode == NetMode::direct_regression) {
      for (double v : direct_outputs(fs)) preds.push_back(v);
    } else if (plan.mode == InferMode::expected) {
      const Matrix per_head = expected_values(fs, plan.member_means);
      for (double v : ensemble_average(per_head)) preds.push_back(v);
    } else {
      const Matrix marginal = marginal_posterior(fs, *overlaps);
      for (std::size_t k : map_estimate(marginal)) preds.push_back(plan.base_means[k]);
    }
  }
  return preds;
}

TrialResult run_trial(const TrialContext& ctx, std::size_t trial,
                      Checkpoint* capture) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig& config = ctx.config;

  TrialResult result;
  result.seeds = derive_trial_seeds(config.seed, trial);
  result.accuracy = kNaN;
  result.ensemble_sq_err = kNaN;
  result.mean_individual_sq_err = kNaN;
  result.ambiguity = kNaN;

  const DiscretizationEnsemble ens = build_ensemble(config, ctx.base, result.seeds.bins);
  const NetMode mode = config.arm == Arm::direct  ? NetMode::direct_regression
                       : config.arm == Arm::rvc   ? NetMode::rvc_single_head
                                                  : NetMode::label_diversity;
  MultiHeadNetwork net =
      mode == NetMode::direct_regression
          ? make_network(ctx.data.train[0].features.size(), config.trunk_widths,
                         std::vector<std::size_t>{1}, mode, result.seeds.init)
          : make_network(ctx.data.train[0].features.size(), config.trunk_widths, ens,
                         mode, result.seeds.init);

  const EncodedBatch train_batch = encode_batch(ctx.data.train, ens);
  const InferencePlan plan =
      make_inference_plan(ens, config.infer, config.bin_means, ctx.train_targets);
  OverlapMatrices overlaps;
  if (mode != NetMode::direct_regression && config.infer == InferMode::map)
    overlaps = overlap_matrices(ens);

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.lr = config.lr;
  tc.lr_decay = config.lr_decay;
  tc.lr_decay_every = config.lr_decay_every;
  tc.l2 = config.l2;
  tc.shuffle_seed = result.seeds.shuffle;

  const ValMetric val = [&](const MultiHeadNetwork& current) {
    return mean_absolute_error(
        predict_impl(current, ctx.test_features, plan, &overlaps), ctx.test_targets);
  };
  result.log = train(net, train_batch, tc, val);
  result.final_train_loss = result.log.empty() ? kNaN : result.log.back().train_loss;

  const std::vector<double> preds =
      predict_impl(net, ctx.test_features, plan, &overlaps);
  result.mae = mean_absolute_error(preds, ctx.test_targets);

  if (mode != NetMode::direct_regression) {
    // expected-value decomposition over the test set (summed cheaply in
    // eval-sized chunks)
    double ens_sum = 0.0, ind_sum = 0.0, amb_sum = 0.0;
    std::size_t n_total = 0;
    for (std::size_t start = 0; start < ctx.test_features.rows(); start += kEvalBatch) {
      const std::size_t stop = std::min(start + kEvalBatch, ctx.test_features.rows());
      Matrix chunk(stop - start, ctx.test_features.cols());
      std::vector<double> t_chunk(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        std::copy(ctx.test_features.row(i), ctx.test_features.row(i) + ctx.test_features.cols(),
                  chunk.row(i - start));
        t_chunk[i - start] = ctx.test_targets[i];
      }
      const ForwardState fs = forward(net, chunk);
      const Matrix per_head = expected_values(fs, plan.member_means);
      const DecompositionReport rep = ambiguity_decomposition(per_head, t_chunk);
      for (std::size_t i = 0; i < rep.ambiguity.size(); ++i) {
        ens_sum += rep.ensemble_sq_err[i];
        ind_sum += rep.mean_individual_sq_err[i];
        amb_sum += rep.ambiguity[i];
      }
      n_total += rep.ambiguity.size();
    }
    result.ensemble_sq_err = ens_sum / static_cast<double>(n_total);
    result.mean_individual_sq_err = ind_sum / static_cast<double>(n_total);
    result.ambiguity = amb_sum / static_cast<double>(n_total);

    if (config.infer == InferMode::map) {
      const std::vector<std::size_t> picked =
          predict_classes(net, ctx.test_features, ens);
      result.accuracy = exact_match_accuracy(picked, ctx.test_classes);
    }
  }

  if (capture && trial == 0) {
    capture->net = net;
    capture->ensemble = ens;
  }
  result.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::string run_csv(const RunResult& r) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  std::string csv =
      "trial,init_seed,shuffle_seed,bins_seed,mae,accuracy,ensemble_sq_err,"
      "mean_individual_sq_err,ambiguity,final_train_loss\n";
  std::vector<double> mae, acc, ens, ind, amb, loss;
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const TrialResult& t = r.trials[i];
    csv += std::to_string(i) + ',' + std::to_string(t.seeds.init) + ',' +
           std::to_string(t.seeds.shuffle) + ',' + std::to_string(t.seeds.bins) + ',' +
           cell(t.mae) + ',' + cell(t.accuracy) + ',' + cell(t.ensemble_sq_err) + ',' +
           cell(t.mean_individual_sq_err) + ',' + cell(t.ambiguity) + ',' +
           cell(t.final_train_loss) + '\n';
    mae.push_back(t.mae);
    acc.push_back(t.accuracy);
    ens.push_back(t.ensemble_sq_err);
    ind.push_back(t.mean_individual_sq_err);
    amb.push_back(t.ambiguity);
    loss.push_back(t.final_train_loss);
  }
  auto row = [&](const char* label, auto pick) {
    std::string line = label;
    line += ",,,,";
    line += pick(summarize(mae)) + ',' + pick(summarize(acc)) + ',' +
            pick(summarize(ens)) + ',' + pick(summarize(ind)) + ',' +
            pick(summarize(amb)) + ',' + pick(summarize(loss)) + '\n';
    return line;
  };
  csv += row("mean", [&](const Summary& s) { return cell(s.mean); });
  csv += row("sd", [&](const Summary& s) { return cell(s.sd); });
  return csv;
}

nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["task"] = c.task == TaskKind::rotated ? "rotated" : "scalar";
  j["arm"] = arm_name(c.arm);
  j["k"] = default_k(c);
  j["l"] = c.l;
  j["m"] = c.m;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["trunk"] = c.trunk_widths;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["lr_decay_every"] = c.lr_decay_every;
  j["l2"] = c.l2;
  j["infer"] = c.infer == InferMode::expected ? "expected" : "map";
  j["bin_means"] = c.bin_means == BinMeanMode::midpoint ? "midpoint" : "empirical";
  j["threads"] = c.threads;
  j["image_size"] = c.image_size;
  j["angle_lo"] = c.angle_lo;
  j["angle_hi"] = c.angle_hi;
  j["scalar_fn"] = c.scalar_fn_name;
  j["noise_sd"] = c.noise_sd;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  if (!c.ensemble_file.empty()) j["ensemble_file"] = c.ensemble_file;
  return j;
}

nlohmann::json run_json(const RunResult& r) {
  nlohmann::json j;
  j["config"] = config_json(r.config);
  j["build_id"] = r.build_id;
  j["timestamp_utc"] = timestamp_utc();
  j["summary"] = {{"mae_mean", r.mae_mean},
                  {"mae_sd", r.mae_sd},
                  {"accuracy_mean", r.accuracy_mean},
                  {"accuracy_sd", r.accuracy_sd}};
  j["trials"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const TrialResult& t = r.trials[i];
    nlohmann::json tj;
    tj["trial"] = i;
    tj["seeds"] = {{"init", t.seeds.init}, {"shuffle", t.seeds.shuffle}, {"bins", t.seeds.bins}};
    tj["mae"] = t.mae;
    tj["accuracy"] = t.accuracy;
    tj["ensemble_sq_err"] = t.ensemble_sq_err;
    tj["mean_individual_sq_err"] = t.mean_individual_sq_err;
    tj["ambiguity"] = t.ambiguity;
    tj["final_train_loss"] = t.final_train_loss;
    tj["wall_s"] = t.wall_s;
    nlohmann::json loss_curve = nlohmann::json::array();
    nlohmann::json val_curve = nlohmann::json::array();
    nlohmann::json lr_curve = nlohmann::json::array();
    for (const EpochRecord& rec : t.log) {
      loss_curve.push_back(rec.train_loss);
      val_curve.push_back(rec.val_mae);
      lr_curve.push_back(rec.lr);
    }
    tj["loss_curve"] = std::move(loss_curve);
    tj["val_mae_curve"] = std::move(val_curve);
    tj["lr_curve"] = std::move(lr_curve);
    j["trials"].push_back(std::move(tj));
  }
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

InferencePlan make_inference_plan(const DiscretizationEnsemble& ens, InferMode mode,
                                  BinMeanMode bin_means,
                                  const std::vector<double>& train_targets) {
  InferencePlan plan;
  plan.mode = mode;
  if (bin_means == BinMeanMode::midpoint) {
    plan.member_means = member_means(ens);
    plan.base_means.resize(ens.base.size());
    for (std::size_t k = 0; k < ens.base.size(); ++k)
      plan.base_means[k] = bin_mean(ens.base, k);
  } else {
    plan.member_means = empirical_member_means(ens, train_targets);
    DiscretizationEnsemble base_only;
    base_only.base = ens.base;
    base_only.support = ens.support;
    base_only.members = {ens.base};
    plan.base_means = empirical_member_means(base_only, train_targets)[0];
  }
  return plan;
}

std::vector<double> predict(const MultiHeadNetwork& net, const Matrix& features,
                            const DiscretizationEnsemble& ens,
                            const InferencePlan& plan) {
  OverlapMatrices overlaps;
  if (net.mode != NetMode::direct_regression && plan.mode == InferMode::map)
    overlaps = overlap_matrices(ens);
  return predict_impl(net, features, plan, &overlaps);
}

std::vector<std::size_t> predict_classes(const MultiHeadNetwork& net,
                                         const Matrix& features,
                                         const DiscretizationEnsemble& ens) {
  const OverlapMatrices overlaps = overlap_matrices(ens);
  std::vector<std::size_t> out;
  out.reserve(features.rows());
  for (std::size_t start = 0; start < features.rows(); start += kEvalBatch) {
    const std::size_t stop = std::min(start + kEvalBatch, features.rows());
    Matrix chunk(stop - start, features.cols());
    for (std::size_t i = start; i < stop; ++i)
      std::copy(features.row(i), features.row(i) + features.cols(), chunk.row(i - start));
    const ForwardState fs = forward(net, chunk);
    for (std::size_t k : map_estimate(marginal_posterior(fs, overlaps))) out.push_back(k);
  }
  return out;
}

double mean_absolute_error(const std::vector<double>& predictions,
                           const std::vector<double>& targets) {
  if (predictions.empty() || predictions.size() != targets.size())
    throw std::invalid_argument("mean_absolute_error: empty or mismatched inputs");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    sum += std::fabs(predictions[i] - targets[i]);
  return sum / static_cast<double>(predictions.size());
}

double exact_match_accuracy(const std::vector<std::size_t>& predicted,
                            const std::vector<std::size_t>& actual) {
  if (predicted.empty() || predicted.size() != actual.size())
    throw std::invalid_argument("exact_match_accuracy: empty or mismatched inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == actual[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

RunResult run(const ExperimentConfig& config, Checkpoint* capture_first) {
  validate(config);
  const Dataset data = generate_task_data(config);
  const Discretization base = equal_width_base(task_support(config), default_k(config));

  TrialContext ctx{config, data, base, Matrix(), {}, {}, {}};
  ctx.test_features = Matrix(data.test.size(), data.test[0].features.size());
  ctx.test_targets.resize(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    std::copy(data.test[i].features.begin(), data.test[i].features.end(),
              ctx.test_features.row(i));
    ctx.test_targets[i] = data.test[i].target;
  }
  ctx.train_targets.resize(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i)
    ctx.train_targets[i] = data.train[i].target;
  if (config.infer == InferMode::map) {
    ctx.test_classes.resize(data.test.size());
    for (std::size_t i = 0; i < data.test.size(); ++i)
      ctx.test_classes[i] = locate(base, data.test[i].target);
  }

  RunResult result;
  result.config = config;
  result.build_id = build_id();
  result.trials.resize(config.trials);
  run_indexed(config.trials, config.threads,
              [&](std::size_t i) { result.trials[i] = run_trial(ctx, i, capture_first); });

  std::vector<double> mae, acc;
  for (const TrialResult& t : result.trials) {
    mae.push_back(t.mae);
    acc.push_back(t.accuracy);
  }
  const Summary mae_summary = summarize(mae);
  const Summary acc_summary = summarize(acc);
  result.mae_mean = mae_summary.mean;
  result.mae_sd = mae_summary.sd;
  result.accuracy_mean = acc_summary.mean;
  result.accuracy_sd = acc_summary.sd;

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_file(config.out_dir + "/run.csv", run_csv(result));
    write_file(config.out_dir + "/run.json", run_json(result).dump(2) + "\n");
  }
  return result;
}

SweepResult sweep(const ExperimentConfig& config,
                  const std::vector<std::size_t>& l_values,
                  const std::vector<std::size_t>& m_values) {
  if (l_values.empty() || m_values.empty())
    throw config_error("sweep needs non-empty L and M grids");

  SweepResult result;
  for (std::size_t l : l_values) {
    for (std::size_t m : m_values) {
      SweepCell cell;
      cell.l = l;
      cell.m = m;
      ExperimentConfig cell_config = config;
      cell_config.l = l;
      cell_config.m = m;
      if (!config.out_dir.empty())
        cell_config.out_dir =
            config.out_dir + "/L" + std::to_string(l) + "_M" + std::to_string(m);
      try {
        const RunResult r = run(cell_config);
        cell.ok = true;
        cell.mae_mean = r.mae_mean;
        cell.mae_sd = r.mae_sd;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        cell.mae_mean = kNaN;
        cell.mae_sd = kNaN;
      }
      result.cells.push_back(std::move(cell));
    }
  }

  // directional summary: does mean MAE drop at every step up in M?
  for (std::size_t li = 0; li < l_values.size(); ++li) {
    bool decreasing = true;
    for (std::size_t mi = 0; mi + 1 < m_values.size(); ++mi) {
      const SweepCell& a = result.cells[li * m_values.size() + mi];
      const SweepCell& b = result.cells[li * m_values.size() + mi + 1];
      if (!a.ok || !b.ok || !(b.mae_mean < a.mae_mean)) {
        decreasing = false;
        break;
      }
    }
    result.mae_decreases_with_m.emplace_back(l_values[li], decreasing);
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::string csv = "l,m,trials,mae_mean,mae_sd,status\n";
    for (const SweepCell& cell : result.cells) {
      csv += std::to_string(cell.l) + ',' + std::to_string(cell.m) + ',' +
             std::to_string(config.trials) + ',' +
             (cell.ok ? format_double(cell.mae_mean) : "") + ',' +
             (cell.ok ? format_double(cell.mae_sd) : "") + ',' +
             (cell.ok ? "ok" : "error") + '\n';
    }
    write_file(config.out_dir + "/sweep.csv", csv);

    nlohmann::json j;
    j["config"] = config_json(config);
    j["build_id"] = build_id();
    j["timestamp_utc"] = timestamp_utc();
    j["l_values"] = l_values;
    j["m_values"] = m_values;
    j["cells"] = nlohmann::json::array();
    for (const SweepCell& cell : result.cells) {
      nlohmann::json cj = {{"l", cell.l},       {"m", cell.m},
                           {"ok", cell.ok},     {"mae_mean", cell.mae_mean},
                           {"mae_sd", cell.mae_sd}};
      if (!cell.ok) cj["error"] = cell.error;
      j["cells"].push_back(std::move(cj));
    }
    j["mae_decreases_with_m"] = nlohmann::json::array();
    for (const auto& [l, dec] : result.mae_decreases_with_m)
      j["mae_decreases_with_m"].push_back({{"l", l}, {"decreasing", dec}});
    write_file(config.out_dir + "/sweep.json", j.dump(2) + "\n");
  }
  return result;
}

}  // namespace multibin
