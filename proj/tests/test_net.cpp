#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "multibin/checkpoint.hpp"
#include "multibin/errors.hpp"
#include "multibin/gencheck.hpp"
#include "multibin/net.hpp"
#include "multibin/rng.hpp"
#include "multibin/train.hpp"

using namespace multibin;

namespace {

DiscretizationEnsemble small_ensemble(std::size_t k, std::size_t l, std::size_t m) {
  return equal_width_overlapping(equal_width_base({0.0, 10.0}, k), l, m);
}

EncodedBatch toy_batch(const DiscretizationEnsemble& ens, const std::vector<double>& targets,
                       std::size_t input_dim, uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> samples;
  for (double t : targets) {
    Sample s;
    s.features.resize(input_dim);
    for (double& f : s.features) f = rng.next_normal();
    s.target = t;
    samples.push_back(std::move(s));
  }
  return encode_batch(samples, ens);
}

void zero_params(MultiHeadNetwork& net) {
  for (DenseLayer& layer : net.trunk) {
    layer.weights.fill(0.0);
    for (double& b : layer.biases) b = 0.0;
  }
  for (DenseLayer& head : net.heads) {
    head.weights.fill(0.0);
    for (double& b : head.biases) b = 0.0;
  }
}

bool same_params(const MultiHeadNetwork& a, const MultiHeadNetwork& b) {
  for (std::size_t i = 0; i < a.trunk.size(); ++i)
    if (!(a.trunk[i].weights == b.trunk[i].weights) ||
        a.trunk[i].biases != b.trunk[i].biases)
      return false;
  for (std::size_t i = 0; i < a.heads.size(); ++i)
    if (!(a.heads[i].weights == b.heads[i].weights) ||
        a.heads[i].biases != b.heads[i].biases)
      return false;
  return true;
}

}  // namespace

TEST_CASE("zero logits give a uniform posterior") {
  const DiscretizationEnsemble ens = small_ensemble(3, 3, 1);
  MultiHeadNetwork net = make_network(2, {4}, ens, NetMode::label_diversity, 1);
  zero_params(net);
  Matrix x(1, 2);
  x(0, 0) = 0.3;
  x(0, 1) = -0.7;
  const ForwardState fs = forward(net, x);
  REQUIRE(fs.head_probs.size() == 1);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(fs.head_probs[0](0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("direct regression emits a raw scalar, no softmax") {
  MultiHeadNetwork net = make_network(2, {4}, {1}, NetMode::direct_regression, 1);
  Matrix x(3, 2, 0.5);
  const ForwardState fs = forward(net, x);
  CHECK(fs.head_probs.empty());
  CHECK(direct_outputs(fs).size() == 3);
}

TEST_CASE("identity linear layer passes the input through") {
  DenseLayer layer;
  layer.weights = Matrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i) layer.weights(i, i) = 1.0;
  layer.biases.assign(3, 0.0);
  layer.activation = Activation::linear;
  MultiHeadNetwork net;
  net.mode = NetMode::direct_regression;
  net.trunk.push_back(layer);
  DenseLayer out;
  out.weights = Matrix(1, 3);
  out.weights(0, 1) = 1.0;
  out.biases.assign(1, 0.0);
  net.heads.push_back(out);

  Matrix x(1, 3);
  x(0, 0) = 0.25;
  x(0, 1) = -1.5;
  x(0, 2) = 2.0;
  const ForwardState fs = forward(net, x);
  CHECK(fs.trunk_act[0](0, 0) == 0.25);
  CHECK(fs.trunk_act[0](0, 1) == -1.5);
  CHECK(fs.trunk_act[0](0, 2) == 2.0);
}

TEST_CASE("softmax stays normalized under huge logits") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {}, ens, NetMode::label_diversity, 5);
  for (auto& w : net.heads) {
    for (std::size_t i = 0; i < w.weights.size(); ++i) w.weights.data()[i] *= 500.0;
  }
  Matrix x(1, 2);
  x(0, 0) = 30.0;
  x(0, 1) = -40.0;
  const ForwardState fs = forward(net, x);
  double sum = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    const double p = fs.head_probs[0](0, j);
    CHECK(std::isfinite(p));
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform predictions cost N * M * ln L") {
  // three members of exactly five bins each
  const Discretization base = equal_width_base({0.0, 10.0}, 15);
  const std::vector<IndexRange> ranges = {{0, 2}, {3, 5}, {6, 8}, {9, 11}, {12, 14}};
  const DiscretizationEnsemble ens = explicit_ensemble(base, {ranges, ranges, ranges});
  const std::size_t l = 5, m = 3, n = 4;
  MultiHeadNetwork net = make_network(2, {6}, ens, NetMode::label_diversity, 1);
  zero_params(net);
  const EncodedBatch batch = toy_batch(ens, {0.5, 3.0, 7.2, 9.9}, 2, 3);
  const ForwardState fs = forward(net, batch.features);
  CHECK(cross_entropy_loss(fs, batch) ==
        doctest::Approx(double(n) * double(m) * std::log(double(l))).epsilon(1e-12));
}

TEST_CASE("perfect one-hot predictions cost zero") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  const EncodedBatch batch = toy_batch(ens, {1.5}, 2, 4);
  ForwardState fs;
  fs.input = batch.features;
  Matrix probs(1, 4, 0.0);
  probs(0, std::size_t(batch.labels[0][0])) = 1.0;
  fs.head_probs.push_back(probs);
  fs.head_logits.push_back(Matrix(1, 4, 0.0));
  CHECK(cross_entropy_loss(fs, batch) == 0.0);
}

TEST_CASE("single-head loss equals a plain classifier loss") {
  const Discretization base = equal_width_base({0.0, 10.0}, 8);
  const DiscretizationEnsemble ens = equal_width_overlapping(base, 8, 1);
  MultiHeadNetwork net = make_network(3, {8}, ens, NetMode::rvc_single_head, 17);
  const EncodedBatch batch = toy_batch(ens, {0.4, 4.2, 9.6, 7.7, 5.5}, 3, 6);
  const ForwardState fs = forward(net, batch.features);

  double oracle = 0.0;
  for (std::size_t i = 0; i < batch.sample_count(); ++i)
    oracle -= std::log(fs.head_probs[0](i, std::size_t(batch.labels[0][i])));
  CHECK(cross_entropy_loss(fs, batch) == oracle);
}

TEST_CASE("saturated correct class has zero head gradient") {
  const DiscretizationEnsemble ens = small_ensemble(3, 3, 1);
  MultiHeadNetwork net = make_network(2, {}, ens, NetMode::label_diversity, 2);
  zero_params(net);
  net.heads[0].biases[0] = 500.0;  // p(class 0) == 1 exactly after exp underflow
  std::vector<Sample> samples(1);
  samples[0].features = {0.1, 0.2};
  samples[0].target = 0.5;  // class 0
  const EncodedBatch batch = encode_batch(samples, ens);
  const ForwardState fs = forward(net, batch.features);
  CHECK(fs.head_probs[0](0, 0) == 1.0);
  const Gradients grads = backward(net, fs, batch);
  // p - q vanishes on the saturated correct class (other rows keep the
  // denormal-scale mass the softmax left there)
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(grads.heads[0].weights(0, j) == 0.0);
  CHECK(grads.heads[0].biases[0] == 0.0);
}

TEST_CASE("finite differences confirm the analytic gradient") {
  const GradCheckReport report = run_gradient_checks(10, 515, 1e-5, 1e-4);
  REQUIRE(report.cases.size() == 10);
  for (const GradCheckCase& c : report.cases) {
    INFO(c.description, " max rel err ", c.max_rel_err);
    CHECK(c.pass);
  }
  CHECK(report.all_pass);
}

TEST_CASE("duplicated head doubles the trunk gradient exactly") {
  const DiscretizationEnsemble ens1 = small_ensemble(6, 6, 1);
  DiscretizationEnsemble ens2 = ens1;
  ens2.members.push_back(ens2.members[0]);

  MultiHeadNetwork net1 = make_network(3, {5}, ens1, NetMode::label_diversity, 9);
  MultiHeadNetwork net2 = net1;
  net2.heads.push_back(net2.heads[0]);

  const EncodedBatch batch1 = toy_batch(ens1, {1.0, 4.5, 8.0}, 3, 10);
  EncodedBatch batch2 = batch1;
  batch2.labels.push_back(batch2.labels[0]);
  batch2.ensemble = &ens2;

  const ForwardState fs1 = forward(net1, batch1.features);
  const ForwardState fs2 = forward(net2, batch2.features);
  const Gradients g1 = backward(net1, fs1, batch1);
  const Gradients g2 = backward(net2, fs2, batch2);

  for (std::size_t i = 0; i < g1.trunk[0].weights.size(); ++i)
    CHECK(g2.trunk[0].weights.data()[i] == 2.0 * g1.trunk[0].weights.data()[i]);
  for (std::size_t i = 0; i < g1.trunk[0].biases.size(); ++i)
    CHECK(g2.trunk[0].biases[i] == 2.0 * g1.trunk[0].biases[i]);
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {3}, ens, NetMode::label_diversity, 11);
  const MultiHeadNetwork before = net;
  AdamState opt = make_adam(net, 1e-3);
  Gradients grads;
  grads.trunk.resize(1);
  grads.trunk[0].weights = Matrix(3, 2, 0.0);
  grads.trunk[0].biases.assign(3, 0.0);
  grads.heads.resize(1);
  grads.heads[0].weights = Matrix(4, 3, 0.0);
  grads.heads[0].biases.assign(4, 0.0);
  adam_step(net, grads, opt);
  CHECK(same_params(net, before));
}

TEST_CASE("first adam step moves against the gradient by about lr") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {3}, ens, NetMode::label_diversity, 12);
  const double w0 = net.trunk[0].weights(0, 0);
  AdamState opt = make_adam(net, 1e-3);
  Gradients grads;
  grads.trunk.resize(1);
  grads.trunk[0].weights = Matrix(3, 2, 0.0);
  grads.trunk[0].weights(0, 0) = 0.37;
  grads.trunk[0].biases.assign(3, 0.0);
  grads.heads.resize(1);
  grads.heads[0].weights = Matrix(4, 3, 0.0);
  grads.heads[0].biases.assign(4, 0.0);
  adam_step(net, grads, opt);
  const double delta = net.trunk[0].weights(0, 0) - w0;
  CHECK(delta < 0.0);
  CHECK(std::fabs(std::fabs(delta) - 1e-3) <= 1e-7);
}

TEST_CASE("training is bitwise deterministic across reruns") {
  const DiscretizationEnsemble ens = small_ensemble(8, 4, 2);
  const EncodedBatch data =
      toy_batch(ens, {0.5, 2.0, 3.5, 5.0, 6.5, 8.0, 9.5, 1.0, 4.0, 7.0}, 4, 20);
  TrainConfig cfg;
  cfg.epochs = 30;  // 4 batches per epoch -> 120 optimizer steps
  cfg.batch_size = 3;
  cfg.lr = 1e-3;
  cfg.shuffle_seed = 77;

  MultiHeadNetwork net_a = make_network(4, {6}, ens, NetMode::label_diversity, 42);
  MultiHeadNetwork net_b = make_network(4, {6}, ens, NetMode::label_diversity, 42);
  const TrainLog log_a = train(net_a, data, cfg);
  const TrainLog log_b = train(net_b, data, cfg);

  CHECK(same_params(net_a, net_b));
  REQUIRE(log_a.size() == log_b.size());
  for (std::size_t e = 0; e < log_a.size(); ++e) {
    CHECK(log_a[e].train_loss == log_b[e].train_loss);
    CHECK(log_a[e].lr == log_b[e].lr);
  }
}

TEST_CASE("zero epochs returns the initial net and an empty log") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {3}, ens, NetMode::label_diversity, 30);
  const MultiHeadNetwork before = net;
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainLog log = train(net, toy_batch(ens, {1.0, 5.0}, 2, 31), cfg);
  CHECK(log.empty());
  CHECK(same_params(net, before));
}

TEST_CASE("learning rate decays on schedule") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {3}, ens, NetMode::label_diversity, 32);
  TrainConfig cfg;
  cfg.epochs = 21;
  cfg.lr = 1e-3;
  cfg.lr_decay = 0.1;
  cfg.lr_decay_every = 10;
  const TrainLog log = train(net, toy_batch(ens, {1.0, 5.0, 9.0}, 2, 33), cfg);
  REQUIRE(log.size() == 21);
  CHECK(log[0].lr == doctest::Approx(1e-3));
  CHECK(log[9].lr == doctest::Approx(1e-3));
  CHECK(log[10].lr == doctest::Approx(1e-4));
  CHECK(log[19].lr == doctest::Approx(1e-4));
  CHECK(log[20].lr == doctest::Approx(1e-5));
}

TEST_CASE("direct regression trains on squared error") {
  // y = 2 x0 - 1, easily fit by the linear path through the relu trunk
  std::vector<Sample> samples;
  Rng rng(50);
  for (int i = 0; i < 64; ++i) {
    const double x = rng.next_range(-1.0, 1.0);
    samples.push_back({{x}, 2.0 * x - 1.0});
  }
  DiscretizationEnsemble none;
  none.base = equal_width_base({-4.0, 4.0}, 4);
  none.support = none.base.support;
  const EncodedBatch data = encode_batch(samples, none);

  MultiHeadNetwork net = make_network(1, {16}, {1}, NetMode::direct_regression, 51);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.lr = 5e-3;
  cfg.shuffle_seed = 52;
  const TrainLog log = train(net, data, cfg);
  CHECK(log.back().train_loss < 0.05 * log.front().train_loss);
}

TEST_CASE("divergence aborts with epoch and batch diagnostics") {
  std::vector<Sample> samples;
  for (int i = 0; i < 8; ++i) samples.push_back({{double(i)}, double(i)});
  DiscretizationEnsemble none;
  none.base = equal_width_base({-10.0, 10.0}, 4);
  none.support = none.base.support;
  const EncodedBatch data = encode_batch(samples, none);
  MultiHeadNetwork net = make_network(1, {4}, {1}, NetMode::direct_regression, 60);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.lr = 1e80;  // guaranteed overflow once the step lands
  try {
    train(net, data, cfg);
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("validation metric is recorded per epoch") {
  const DiscretizationEnsemble ens = small_ensemble(4, 4, 1);
  MultiHeadNetwork net = make_network(2, {3}, ens, NetMode::label_diversity, 70);
  TrainConfig cfg;
  cfg.epochs = 3;
  int calls = 0;
  const TrainLog log = train(net, toy_batch(ens, {1.0, 5.0, 9.0}, 2, 71), cfg,
                             [&](const MultiHeadNetwork&) { return double(++calls); });
  REQUIRE(log.size() == 3);
  CHECK(log[0].val_mae == 1.0);
  CHECK(log[2].val_mae == 3.0);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const DiscretizationEnsemble ens =
      randomized_bins(equal_width_base({-45.0, 46.0}, 91), 16, 4, 17);
  MultiHeadNetwork net = make_network(6, {8, 5}, ens, NetMode::label_diversity, 80);
  // train a little so parameters are not just the init pattern
  const EncodedBatch data = toy_batch(ens, {0.0, -30.0, 12.0, 44.0, 45.0}, 6, 81);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  train(net, data, cfg);

  const std::string path = (std::filesystem::temp_directory_path() / "mb_ckpt.bin").string();
  save_checkpoint(path, net, ens);
  const Checkpoint loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(loaded.net.mode == net.mode);
  CHECK(same_params(loaded.net, net));
  REQUIRE(loaded.ensemble.members.size() == ens.members.size());
  CHECK(loaded.ensemble.base.boundaries() == ens.base.boundaries());
  for (std::size_t m = 0; m < ens.members.size(); ++m)
    CHECK(loaded.ensemble.members[m].boundaries() == ens.members[m].boundaries());

  CHECK_THROWS(load_checkpoint("/nonexistent/path/file.bin"));
}

TEST_CASE("label-diversity nets mirror the ensemble shape") {
  const DiscretizationEnsemble ens =
      randomized_bins(equal_width_base({0.0, 20.0}, 20), 6, 5, 3);
  const MultiHeadNetwork net = make_network(4, {8}, ens, NetMode::label_diversity, 90);
  REQUIRE(net.head_count() == ens.head_count());
  for (std::size_t m = 0; m < net.head_count(); ++m)
    CHECK(net.heads[m].out_dim() == ens.members[m].size());
  CHECK_THROWS_AS(make_network(4, {0}, ens, NetMode::label_diversity, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward(net, Matrix(2, 3)), std::invalid_argument);
}
