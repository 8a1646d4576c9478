// Command-line experiment runner: trains and evaluates the direct / rvc /
// equal-width / randomized / explicit arms on the bundled synthetic tasks,
// sweeps (L, M) grids, dumps per-sample error decompositions, and verifies
// analytic gradients against finite differences.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multibin/checkpoint.hpp"
#include "multibin/errors.hpp"
#include "multibin/gencheck.hpp"
#include "multibin/harness.hpp"
#include "multibin/inference.hpp"

namespace {

using namespace multibin;

struct CommonOpts {
  ExperimentConfig cfg;
  std::string task = "rotated";
  std::string arm = "equal-width";
  std::string infer = "expected";
  std::string bin_means = "midpoint";
};

void add_task_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--task", o.task, "Task: rotated|scalar")->capture_default_str();
  cmd->add_option("--seed", o.cfg.seed, "Master seed")->capture_default_str();
  cmd->add_option("--image-size", o.cfg.image_size, "Rotated task: pixels per side")
      ->capture_default_str();
  cmd->add_option("--angle-lo", o.cfg.angle_lo, "Rotated task: lowest angle (deg)")
      ->capture_default_str();
  cmd->add_option("--angle-hi", o.cfg.angle_hi, "Rotated task: highest angle (deg)")
      ->capture_default_str();
  cmd->add_option("--fn", o.cfg.scalar_fn_name, "Scalar task: sine|cubic|tanh")
      ->capture_default_str();
  cmd->add_option("--noise-sd", o.cfg.noise_sd, "Scalar task: target noise sd")
      ->capture_default_str();
  cmd->add_option("--n-train", o.cfg.n_train, "Training samples")->capture_default_str();
  cmd->add_option("--n-test", o.cfg.n_test, "Test samples")->capture_default_str();
}

void add_model_options(CLI::App* cmd, CommonOpts& o, bool scalar_lm = true) {
  cmd->add_option("--arm", o.arm, "Method arm: direct|rvc|equal-width|randomized|explicit")
      ->capture_default_str();
  cmd->add_option("--k", o.cfg.k, "Base class count (0 = task default)")
      ->capture_default_str();
  if (scalar_lm) {
    cmd->add_option("--l", o.cfg.l, "Bins per discretization")->capture_default_str();
    cmd->add_option("--m", o.cfg.m, "Number of discretizations / heads")
        ->capture_default_str();
  }
  cmd->add_option("--trunk", o.cfg.trunk_widths, "Trunk layer widths")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--trials", o.cfg.trials, "Trials per run")->capture_default_str();
  cmd->add_option("--epochs", o.cfg.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o.cfg.batch_size, "Mini-batch size")
      ->capture_default_str();
  cmd->add_option("--lr", o.cfg.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--lr-decay", o.cfg.lr_decay, "LR decay factor")->capture_default_str();
  cmd->add_option("--lr-decay-every", o.cfg.lr_decay_every, "Epochs between LR decays")
      ->capture_default_str();
  cmd->add_option("--l2", o.cfg.l2, "L2 regularization coefficient")->capture_default_str();
  cmd->add_option("--infer", o.infer, "Inference: expected|map")->capture_default_str();
  cmd->add_option("--bin-means", o.bin_means, "Bin representatives: midpoint|empirical")
      ->capture_default_str();
  cmd->add_option("--ensemble-file", o.cfg.ensemble_file,
                  "Explicit member sets file (see README for the grammar)");
  cmd->add_option("--threads", o.cfg.threads, "Worker threads for trials")
      ->capture_default_str();
  cmd->add_option("--out", o.cfg.out_dir, "Output directory for CSV/JSON ledgers");
}

ExperimentConfig resolve(CommonOpts& o) {
  o.cfg.task = task_from_name(o.task);
  o.cfg.arm = arm_from_name(o.arm);
  o.cfg.infer = infer_from_name(o.infer);
  o.cfg.bin_means = bin_means_from_name(o.bin_means);
  return o.cfg;
}

void print_run_summary(const RunResult& r) {
  std::printf("arm=%s task=%s K=%zu trials=%zu\n", arm_name(r.config.arm).c_str(),
              r.config.task == TaskKind::rotated ? "rotated" : "scalar",
              default_k(r.config), r.config.trials);
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const TrialResult& t = r.trials[i];
    std::printf("  trial %zu: mae=%.6g", i, t.mae);
    if (!std::isnan(t.accuracy)) std::printf(" accuracy=%.6g", t.accuracy);
    if (!std::isnan(t.ambiguity))
      std::printf(" ambiguity=%.6g", t.ambiguity);
    std::printf(" (%.1fs)\n", t.wall_s);
  }
  std::printf("mae mean=%.6g sd=%.6g", r.mae_mean, r.mae_sd);
  if (!std::isnan(r.accuracy_mean))
    std::printf("  accuracy mean=%.6g sd=%.6g", r.accuracy_mean, r.accuracy_sd);
  std::printf("\n");
  if (!r.config.out_dir.empty())
    std::printf("wrote %s/run.csv and run.json\n", r.config.out_dir.c_str());
}

int cmd_train(CommonOpts& o, const std::string& save_model,
              const std::string& dump_data) {
  ExperimentConfig cfg = resolve(o);
  if (!save_model.empty() && cfg.trials != 1)
    throw config_error("--save-model requires --trials 1");
  if (!dump_data.empty()) dump_dataset(dump_data, generate_task_data(cfg));

  Checkpoint captured;
  const RunResult r = run(cfg, save_model.empty() ? nullptr : &captured);
  print_run_summary(r);
  if (!save_model.empty()) {
    save_checkpoint(save_model, captured.net, captured.ensemble);
    std::printf("saved model to %s\n", save_model.c_str());
  }
  return 0;
}

int cmd_eval(CommonOpts& o, const std::string& model_path) {
  ExperimentConfig cfg = resolve(o);
  const Checkpoint ckpt = load_checkpoint(model_path);
  const Dataset data = generate_task_data(cfg);
  if (data.test.empty()) throw config_error("eval: empty test split");
  if (data.test[0].features.size() != ckpt.net.input_dim())
    throw config_error("eval: task feature width does not match the checkpoint");

  Matrix features(data.test.size(), data.test[0].features.size());
  std::vector<double> targets(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    std::copy(data.test[i].features.begin(), data.test[i].features.end(), features.row(i));
    targets[i] = data.test[i].target;
  }
  std::vector<double> train_targets(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i)
    train_targets[i] = data.train[i].target;

  if (ckpt.net.mode != NetMode::direct_regression && ckpt.ensemble.members.empty())
    throw config_error("eval: checkpoint has softmax heads but no ensemble");
  if (ckpt.net.mode == NetMode::direct_regression && cfg.infer == InferMode::map)
    throw config_error("eval: --infer map is not applicable to a direct-regression model");

  const InferencePlan plan =
      make_inference_plan(ckpt.ensemble, cfg.infer, cfg.bin_means, train_targets);
  const std::vector<double> preds = predict(ckpt.net, features, ckpt.ensemble, plan);
  const double mae = mean_absolute_error(preds, targets);
  std::printf("test mae=%.6g", mae);
  if (cfg.infer == InferMode::map && ckpt.net.mode != NetMode::direct_regression) {
    std::vector<std::size_t> actual(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      actual[i] = locate(ckpt.ensemble.base, targets[i]);
    const double acc =
        exact_match_accuracy(predict_classes(ckpt.net, features, ckpt.ensemble), actual);
    std::printf(" accuracy=%.6g", acc);
  }
  std::printf("\n");
  return 0;
}

int cmd_decompose(CommonOpts& o, const std::string& model_path) {
  ExperimentConfig cfg = resolve(o);
  if (cfg.arm == Arm::direct)
    throw config_error("decompose needs a multi-head arm (no per-head estimates in direct)");

  Checkpoint ckpt;
  if (!model_path.empty()) {
    ckpt = load_checkpoint(model_path);
    if (ckpt.net.mode == NetMode::direct_regression)
      throw config_error("decompose: checkpoint is a direct-regression model");
  } else {
    ExperimentConfig one = cfg;
    one.trials = 1;
    one.out_dir.clear();
    run(one, &ckpt);
  }

  const Dataset data = generate_task_data(cfg);
  Matrix features(data.test.size(), data.test[0].features.size());
  std::vector<double> targets(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    std::copy(data.test[i].features.begin(), data.test[i].features.end(), features.row(i));
    targets[i] = data.test[i].target;
  }
  std::vector<double> train_targets(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i)
    train_targets[i] = data.train[i].target;

  const InferencePlan plan =
      make_inference_plan(ckpt.ensemble, InferMode::expected, cfg.bin_means, train_targets);
  const ForwardState fs = forward(ckpt.net, features);
  const Matrix per_head = expected_values(fs, plan.member_means);
  const std::vector<double> ens_avg = ensemble_average(per_head);
  const DecompositionReport rep = ambiguity_decomposition(per_head, targets);

  std::string csv =
      "sample,target,ensemble_pred,ensemble_sq_err,mean_individual_sq_err,ambiguity\n";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    csv += std::to_string(i) + ',' + format_double(targets[i]) + ',' +
           format_double(ens_avg[i]) + ',' + format_double(rep.ensemble_sq_err[i]) + ',' +
           format_double(rep.mean_individual_sq_err[i]) + ',' +
           format_double(rep.ambiguity[i]) + '\n';
  }
  if (cfg.out_dir.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/decompose.csv", std::ios::binary);
    out << csv;
    std::printf("wrote %s/decompose.csv (%zu samples)\n", cfg.out_dir.c_str(),
                targets.size());
  }
  return 0;
}

int cmd_sweep(CommonOpts& o, const std::vector<std::size_t>& l_values,
              const std::vector<std::size_t>& m_values, bool monotonicity) {
  const ExperimentConfig cfg = resolve(o);
  const SweepResult result = sweep(cfg, l_values, m_values);
  for (const SweepCell& cell : result.cells) {
    if (cell.ok)
      std::printf("L=%zu M=%zu: mae mean=%.6g sd=%.6g\n", cell.l, cell.m, cell.mae_mean,
                  cell.mae_sd);
    else
      std::printf("L=%zu M=%zu: ERROR %s\n", cell.l, cell.m, cell.error.c_str());
  }
  if (monotonicity) {
    for (const auto& [l, dec] : result.mae_decreases_with_m)
      std::printf("L=%zu: mae %s with increasing M\n", l,
                  dec ? "decreases monotonically" : "does not decrease monotonically");
  }
  if (!cfg.out_dir.empty())
    std::printf("wrote %s/sweep.csv and sweep.json\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_gencheck(std::size_t cases, uint64_t seed) {
  const GradCheckReport report = run_gradient_checks(cases, seed);
  for (std::size_t i = 0; i < report.cases.size(); ++i) {
    const GradCheckCase& c = report.cases[i];
    std::printf("config %zu (%s): %zu params, max rel err %.3g [%s]\n", i,
                c.description.c_str(), c.parameter_count, c.max_rel_err,
                c.pass ? "ok" : "FAIL");
  }
  std::printf("gradient check %s (tolerance %.1g, eps %.1g)\n",
              report.all_pass ? "PASSED" : "FAILED", report.tolerance, report.epsilon);
  if (!report.all_pass) throw numeric_error("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multibin: regression via diverse target discretizations"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, sweep_opts, dec_opts;
  std::string save_model, dump_data, eval_model, dec_model;
  std::vector<std::size_t> l_values, m_values;
  bool monotonicity = false;
  std::size_t gencheck_cases = 12;
  uint64_t gencheck_seed = 2024;

  CLI::App* train_cmd = app.add_subcommand("train", "Train and evaluate one configuration");
  add_task_options(train_cmd, train_opts);
  add_model_options(train_cmd, train_opts);
  train_cmd->add_option("--save-model", save_model,
                        "Write the trained model checkpoint (requires --trials 1)");
  train_cmd->add_option("--dump-data", dump_data, "Dump the generated dataset (binary)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model checkpoint");
  add_task_options(eval_cmd, eval_opts);
  eval_cmd->add_option("--model", eval_model, "Checkpoint path")->required();
  eval_cmd->add_option("--infer", eval_opts.infer, "Inference: expected|map")
      ->capture_default_str();
  eval_cmd->add_option("--bin-means", eval_opts.bin_means,
                       "Bin representatives: midpoint|empirical")
      ->capture_default_str();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a (L, M) grid");
  add_task_options(sweep_cmd, sweep_opts);
  add_model_options(sweep_cmd, sweep_opts, /*scalar_lm=*/false);
  sweep_cmd->add_option("--l", l_values, "L values (comma separated)")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--m", m_values, "M values (comma separated)")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_flag("--monotonicity", monotonicity,
                      "Report whether MAE decreases with M at each L");

  CLI::App* dec_cmd =
      app.add_subcommand("decompose", "Per-test-sample ensemble error decomposition");
  add_task_options(dec_cmd, dec_opts);
  add_model_options(dec_cmd, dec_opts);
  dec_cmd->add_option("--model", dec_model, "Checkpoint path (skips training)");

  CLI::App* gen_cmd =
      app.add_subcommand("gencheck", "Verify analytic gradients against finite differences");
  gen_cmd->add_option("--cases", gencheck_cases, "Number of random configurations")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gencheck_seed, "Configuration seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts, save_model, dump_data);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, eval_model);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, l_values, m_values, monotonicity);
    if (dec_cmd->parsed()) return cmd_decompose(dec_opts, dec_model);
    if (gen_cmd->parsed()) return cmd_gencheck(gencheck_cases, gencheck_seed);
  } catch (const multibin::numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {  // includes config_error
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
