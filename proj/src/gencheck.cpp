#include "multibin/gencheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "multibin/binning.hpp"
#include "multibin/encoding.hpp"
#include "multibin/net.hpp"
#include "multibin/rng.hpp"

namespace multibin {

namespace {

struct CheckSetup {
  MultiHeadNetwork net;
  EncodedBatch batch;
  DiscretizationEnsemble ensemble;
  double l2 = 0.0;
  std::string description;
};

std::vector<double*> collect_params(MultiHeadNetwork& net) {
  std::vector<double*> params;
  auto add = [&](DenseLayer& layer) {
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      params.push_back(layer.weights.data() + i);
    for (double& b : layer.biases) params.push_back(&b);
  };
  for (DenseLayer& layer : net.trunk) add(layer);
  for (DenseLayer& head : net.heads) add(head);
  return params;
}

std::vector<double> collect_grads(const Gradients& grads) {
  std::vector<double> flat;
  auto add = [&](const LayerGrads& g) {
    for (std::size_t i = 0; i < g.weights.size(); ++i) flat.push_back(g.weights.data()[i]);
    for (double b : g.biases) flat.push_back(b);
  };
  for (const LayerGrads& g : grads.trunk) add(g);
  for (const LayerGrads& g : grads.heads) add(g);
  return flat;
}

double total_loss(const MultiHeadNetwork& net, const EncodedBatch& batch, double l2) {
  const ForwardState fs = forward(net, batch.features);
  const double data = net.mode == NetMode::direct_regression
                          ? mse_loss(fs, batch.targets)
                          : cross_entropy_loss(fs, batch);
  return data + l2_penalty(net, l2);
}

CheckSetup make_candidate(std::size_t index, uint64_t candidate_seed) {
  Rng rng(candidate_seed);
  CheckSetup setup;

  const std::size_t k = 4 + rng.next_below(6);           // 4..9 base bins
  const std::size_t input_dim = 2 + rng.next_below(4);   // 2..5
  const std::size_t depth = index % 3;                   // 0..2 trunk layers
  std::vector<std::size_t> trunk(depth);
  for (std::size_t& w : trunk) w = 3 + rng.next_below(4);  // 3..6
  const std::size_t batch_n = 1 + rng.next_below(4);       // 1..4
  setup.l2 = (index % 2) ? 1e-3 : 0.0;

  const Interval support{-2.0, 3.0};
  const Discretization base = equal_width_base(support, k);

  NetMode mode = NetMode::label_diversity;
  std::ostringstream desc;
  switch (index % 5) {
    case 0: {
      const std::size_t m = 1 + rng.next_below(3);
      const std::size_t l = 1 + rng.next_below(k / m);
      setup.ensemble = equal_width_overlapping(base, l, m);
      desc << "equal-width L=" << l << " M=" << m;
      break;
    }
    case 1: {
      const std::size_t l = 1 + rng.next_below(k - 1);  // < k
      const std::size_t m = 1 + rng.next_below(3);
      setup.ensemble = randomized_bins(base, l, m, rng.next_u64());
      desc << "randomized L=" << l << " M=" << m;
      break;
    }
    case 2: {
      // two explicit members with random contiguous splits
      std::vector<std::vector<IndexRange>> sets;
      for (int member = 0; member < 2; ++member) {
        std::vector<IndexRange> ranges;
        std::size_t start = 0;
        while (start < k) {
          const std::size_t stop =
              std::min(k - 1, start + rng.next_below(3));
          ranges.push_back({start, stop});
          start = stop + 1;
        }
        sets.push_back(std::move(ranges));
      }
      setup.ensemble = explicit_ensemble(base, sets);
      desc << "explicit M=2";
      break;
    }
    case 3: {
      setup.ensemble = equal_width_overlapping(base, k, 1);
      mode = NetMode::rvc_single_head;
      desc << "rvc K=" << k;
      break;
    }
    case 4: {
      setup.ensemble.base = base;
      setup.ensemble.support = support;
      mode = NetMode::direct_regression;
      desc << "direct";
      break;
    }
  }
  desc << ", trunk depth " << depth << ", batch " << batch_n << ", l2 " << setup.l2;
  setup.description = desc.str();

  setup.net = mode == NetMode::direct_regression
                  ? make_network(input_dim, trunk, std::vector<std::size_t>{1}, mode,
                                 rng.next_u64())
                  : make_network(input_dim, trunk, setup.ensemble, mode, rng.next_u64());

  std::vector<Sample> samples(batch_n);
  for (Sample& s : samples) {
    s.features.resize(input_dim);
    for (double& f : s.features) f = rng.next_normal();
    s.target = rng.next_range(support.lo, support.hi);
  }
  setup.batch = encode_batch(samples, setup.ensemble);
  return setup;
}

// Central differences are only meaningful away from the relu kink: a
// pre-activation within the probe radius makes the two-sided difference
// straddle the slope jump and report an O(1) mismatch. Redraw such configs.
double min_abs_preactivation(const MultiHeadNetwork& net, const Matrix& features) {
  const ForwardState fs = forward(net, features);
  double min_abs = std::numeric_limits<double>::infinity();
  for (std::size_t li = 0; li < fs.trunk_pre.size(); ++li) {
    if (net.trunk[li].activation != Activation::relu) continue;
    const Matrix& z = fs.trunk_pre[li];
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j)
        min_abs = std::min(min_abs, std::fabs(z(i, j)));
  }
  return min_abs;
}

CheckSetup make_setup(std::size_t index, uint64_t seed) {
  constexpr double kKinkClearance = 1e-3;
  CheckSetup setup = make_candidate(index, derive_seed(seed, index));
  for (std::size_t attempt = 1; attempt <= 32; ++attempt) {
    setup.batch.ensemble = &setup.ensemble;
    if (min_abs_preactivation(setup.net, setup.batch.features) > kKinkClearance) break;
    setup = make_candidate(index, derive_seed(seed, index + 1000 * attempt));
  }
  return setup;
}

}  // namespace

GradCheckReport run_gradient_checks(std::size_t n_cases, uint64_t seed,
                                    double epsilon, double tolerance) {
  GradCheckReport report;
  report.epsilon = epsilon;
  report.tolerance = tolerance;
  report.all_pass = true;

  for (std::size_t index = 0; index < n_cases; ++index) {
    CheckSetup setup = make_setup(index, seed);
    setup.batch.ensemble = &setup.ensemble;

    const ForwardState fs = forward(setup.net, setup.batch.features);
    const Gradients grads = backward(setup.net, fs, setup.batch, setup.l2);
    const std::vector<double> analytic = collect_grads(grads);
    std::vector<double*> params = collect_params(setup.net);

    GradCheckCase result;
    result.description = setup.description;
    result.parameter_count = params.size();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double original = *params[i];
      *params[i] = original + epsilon;
      const double up = total_loss(setup.net, setup.batch, setup.l2);
      *params[i] = original - epsilon;
      const double down = total_loss(setup.net, setup.batch, setup.l2);
      *params[i] = original;
      const double fd = (up - down) / (2.0 * epsilon);
      const double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(fd)});
      result.max_rel_err = std::max(result.max_rel_err,
                                    std::fabs(analytic[i] - fd) / denom);
    }
    result.pass = result.max_rel_err < tolerance;
    report.all_pass = report.all_pass && result.pass;
    report.cases.push_back(std::move(result));
  }
  return report;
}

}  // namespace multibin
