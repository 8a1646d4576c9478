#pragma once

#include <cstdint>
#include <vector>

#include "multibin/binning.hpp"
#include "multibin/encoding.hpp"
#include "multibin/matrix.hpp"

namespace multibin {

enum class Activation { relu, linear };

struct DenseLayer {
  Matrix weights;               // out x in
  std::vector<double> biases;   // out
  Activation activation = Activation::linear;

  std::size_t out_dim() const { return weights.rows(); }
  std::size_t in_dim() const { return weights.cols(); }
};

// Which loss/output the heads carry. rvc_single_head is label diversity with
// a single head over the base partition; direct_regression is one linear
// output trained on squared error.
enum class NetMode { label_diversity, rvc_single_head, direct_regression };

// Shared dense trunk feeding either M softmax heads (one per discretization)
// or a single linear regression output.
struct MultiHeadNetwork {
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> heads;
  NetMode mode = NetMode::label_diversity;

  std::size_t input_dim() const {
    return trunk.empty() ? heads.front().in_dim() : trunk.front().in_dim();
  }
  std::size_t head_count() const { return heads.size(); }
};

// Everything forward() computes, kept for the backward pass: per-layer
// pre-activations and activations plus per-head softmax posteriors
// (head_probs stays empty in direct-regression mode).
struct ForwardState {
  Matrix input;
  std::vector<Matrix> trunk_pre;   // Z per trunk layer
  std::vector<Matrix> trunk_act;   // act(Z) per trunk layer
  std::vector<Matrix> head_logits; // per head: N x L_m
  std::vector<Matrix> head_probs;  // per head: N x L_m, rows sum to 1

  std::size_t sample_count() const { return input.rows(); }
};

struct LayerGrads {
  Matrix weights;
  std::vector<double> biases;
};

struct Gradients {
  std::vector<LayerGrads> trunk;
  std::vector<LayerGrads> heads;
};

// Seeded He-uniform initialization (bound sqrt(6/fan_in), biases zero).
// head_widths is one entry per softmax head; for direct regression pass a
// single width-1 head and NetMode::direct_regression.
MultiHeadNetwork make_network(std::size_t input_dim,
                              const std::vector<std::size_t>& trunk_widths,
                              const std::vector<std::size_t>& head_widths,
                              NetMode mode, uint64_t init_seed);

// Convenience: head widths taken from the ensemble members.
MultiHeadNetwork make_network(std::size_t input_dim,
                              const std::vector<std::size_t>& trunk_widths,
                              const DiscretizationEnsemble& ensemble,
                              NetMode mode, uint64_t init_seed);

// Batched forward pass. Softmax uses max-subtraction so large logits cannot
// overflow. Throws on feature-width mismatch.
ForwardState forward(const MultiHeadNetwork& net, const Matrix& features);

// Summed negative log-likelihood over samples and heads:
//   E = -sum_n sum_m log p(bin containing t_n | x_n).
// Sum, not mean, over the mini-batch; stated learning rates assume this.
double cross_entropy_loss(const ForwardState& fs, const EncodedBatch& batch);

// Summed squared error for direct regression: sum_n (y_n - t_n)^2.
double mse_loss(const ForwardState& fs, const std::vector<double>& targets);

// 0.5 * lambda * sum of squared weights (biases excluded). Reported
// separately from the data loss.
double l2_penalty(const MultiHeadNetwork& net, double lambda);

// Exact analytic gradient of the total loss (data term + L2 penalty). The
// per-head softmax cross-entropy gradient is (p - q) on the logits; head
// contributions sum into the shared trunk.
Gradients backward(const MultiHeadNetwork& net, const ForwardState& fs,
                   const EncodedBatch& batch, double l2_lambda = 0.0);

// Predictions of a direct-regression net (the single linear output).
std::vector<double> direct_outputs(const ForwardState& fs);

}  // namespace multibin
