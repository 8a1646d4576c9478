#include "multibin/net.hpp"

#include <cmath>
#include <stdexcept>

#include "multibin/rng.hpp"

namespace multibin {

namespace {

DenseLayer init_layer(std::size_t out, std::size_t in, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.weights = Matrix(out, in);
  layer.biases.assign(out, 0.0);
  layer.activation = act;
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  for (std::size_t i = 0; i < out; ++i)
    for (std::size_t j = 0; j < in; ++j)
      layer.weights(i, j) = rng.next_range(-bound, bound);
  return layer;
}

// Z = X * W^T + b
Matrix affine(const Matrix& x, const DenseLayer& layer) {
  const std::size_t n = x.rows(), in = layer.in_dim(), out = layer.out_dim();
  Matrix z(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = layer.biases[o];
      const double* w = layer.weights.row(o);
      for (std::size_t j = 0; j < in; ++j) acc += w[j] * xi[j];
      zi[o] = acc;
    }
  }
  return z;
}

Matrix apply_activation(const Matrix& z, Activation act) {
  if (act == Activation::linear) return z;
  Matrix a = z;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (row[j] < 0.0) row[j] = 0.0;
  }
  return a;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double* zi = z.row(i);
    double* pi = p.row(i);
    double zmax = zi[0];
    for (std::size_t j = 1; j < z.cols(); ++j) zmax = std::max(zmax, zi[j]);
    double norm = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      pi[j] = std::exp(zi[j] - zmax);
      norm += pi[j];
    }
    for (std::size_t j = 0; j < z.cols(); ++j) pi[j] /= norm;
  }
  return p;
}

}  // namespace

MultiHeadNetwork make_network(std::size_t input_dim,
                              const std::vector<std::size_t>& trunk_widths,
                              const std::vector<std::size_t>& head_widths,
                              NetMode mode, uint64_t init_seed) {
  if (head_widths.empty())
    throw std::invalid_argument("make_network: at least one head required");
  if (mode == NetMode::direct_regression &&
      (head_widths.size() != 1))
    throw std::invalid_argument("make_network: direct regression uses exactly one head");

  Rng rng(init_seed);
  MultiHeadNetwork net;
  net.mode = mode;
  std::size_t prev = input_dim;
  for (std::size_t w : trunk_widths) {
    if (w == 0) throw std::invalid_argument("make_network: zero trunk width");
    net.trunk.push_back(init_layer(w, prev, Activation::relu, rng));
    prev = w;
  }
  for (std::size_t w : head_widths) {
    if (w == 0) throw std::invalid_argument("make_network: zero head width");
    net.heads.push_back(init_layer(w, prev, Activation::linear, rng));
  }
  return net;
}

MultiHeadNetwork make_network(std::size_t input_dim,
                              const std::vector<std::size_t>& trunk_widths,
                              const DiscretizationEnsemble& ensemble,
                              NetMode mode, uint64_t init_seed) {
  std::vector<std::size_t> widths;
  widths.reserve(ensemble.head_count());
  for (const Discretization& member : ensemble.members) widths.push_back(member.size());
  return make_network(input_dim, trunk_widths, widths, mode, init_seed);
}

ForwardState forward(const MultiHeadNetwork& net, const Matrix& features) {
  if (features.cols() != net.input_dim())
    throw std::invalid_argument("forward: feature width does not match network input");

  ForwardState fs;
  fs.input = features;
  const Matrix* activations = &fs.input;
  for (const DenseLayer& layer : net.trunk) {
    fs.trunk_pre.push_back(affine(*activations, layer));
    fs.trunk_act.push_back(apply_activation(fs.trunk_pre.back(), layer.activation));
    activations = &fs.trunk_act.back();
  }
  for (const DenseLayer& head : net.heads) {
    fs.head_logits.push_back(affine(*activations, head));
    if (net.mode != NetMode::direct_regression)
      fs.head_probs.push_back(softmax_rows(fs.head_logits.back()));
  }
  return fs;
}

double cross_entropy_loss(const ForwardState& fs, const EncodedBatch& batch) {
  if (fs.head_probs.size() != batch.labels.size())
    throw std::invalid_argument("cross_entropy_loss: head count does not match labels");
  const std::size_t n = fs.sample_count();
  if (n != batch.sample_count())
    throw std::invalid_argument("cross_entropy_loss: sample count mismatch");

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = 0; m < fs.head_probs.size(); ++m)
      total -= std::log(fs.head_probs[m](i, static_cast<std::size_t>(batch.labels[m][i])));
  return total;
}

double mse_loss(const ForwardState& fs, const std::vector<double>& targets) {
  if (fs.head_logits.size() != 1 || fs.head_logits[0].cols() != 1)
    throw std::invalid_argument("mse_loss: expects a single width-1 output");
  if (fs.sample_count() != targets.size())
    throw std::invalid_argument("mse_loss: sample count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = fs.head_logits[0](i, 0) - targets[i];
    total += r * r;
  }
  return total;
}

double l2_penalty(const MultiHeadNetwork& net, double lambda) {
  if (lambda == 0.0) return 0.0;
  double sq = 0.0;
  auto add = [&](const DenseLayer& layer) {
    const double* w = layer.weights.data();
    for (std::size_t i = 0; i < layer.weights.size(); ++i) sq += w[i] * w[i];
  };
  for (const DenseLayer& layer : net.trunk) add(layer);
  for (const DenseLayer& head : net.heads) add(head);
  return 0.5 * lambda * sq;
}

std::vector<double> direct_outputs(const ForwardState& fs) {
  if (fs.head_logits.size() != 1 || fs.head_logits[0].cols() != 1)
    throw std::invalid_argument("direct_outputs: expects a single width-1 output");
  std::vector<double> out(fs.sample_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fs.head_logits[0](i, 0);
  return out;
}

Gradients backward(const MultiHeadNetwork& net, const ForwardState& fs,
                   const EncodedBatch& batch, double l2_lambda) {
  const std::size_t n = fs.sample_count();
  const Matrix& last_act = net.trunk.empty() ? fs.input : fs.trunk_act.back();

  Gradients grads;
  grads.trunk.resize(net.trunk.size());
  grads.heads.resize(net.heads.size());

  // d(loss)/d(trunk output), summed over heads
  Matrix d_trunk_out(last_act.rows(), last_act.cols());

  for (std::size_t m = 0; m < net.heads.size(); ++m) {
    const DenseLayer& head = net.heads[m];
    Matrix d_logits(n, head.out_dim());
    if (net.mode == NetMode::direct_regression) {
      for (std::size_t i = 0; i < n; ++i)
        d_logits(i, 0) = 2.0 * (fs.head_logits[m](i, 0) - batch.targets[i]);
    } else {
      // softmax + cross entropy: d/dz = p - q
      d_logits = fs.head_probs[m];
      for (std::size_t i = 0; i < n; ++i)
        d_logits(i, static_cast<std::size_t>(batch.labels[m][i])) -= 1.0;
    }

    LayerGrads& hg = grads.heads[m];
    hg.weights = Matrix(head.out_dim(), head.in_dim());
    hg.biases.assign(head.out_dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* dz = d_logits.row(i);
      const double* a = last_act.row(i);
      for (std::size_t o = 0; o < head.out_dim(); ++o) {
        double* wrow = hg.weights.row(o);
        for (std::size_t j = 0; j < head.in_dim(); ++j) wrow[j] += dz[o] * a[j];
        hg.biases[o] += dz[o];
      }
    }
    // accumulate this head's full contribution first, then fold it into the
    // shared trunk gradient; identical heads therefore add identical terms
    Matrix head_contrib(last_act.rows(), last_act.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const double* dz = d_logits.row(i);
      double* dout = head_contrib.row(i);
      for (std::size_t o = 0; o < head.out_dim(); ++o) {
        const double* wrow = head.weights.row(o);
        for (std::size_t j = 0; j < head.in_dim(); ++j) dout[j] += dz[o] * wrow[j];
      }
    }
    for (std::size_t i = 0; i < d_trunk_out.size(); ++i)
      d_trunk_out.data()[i] += head_contrib.data()[i];
  }

  // back through the trunk; d_grad holds d(loss)/d(layer output) on entry to
  // each iteration and becomes d(loss)/d(pre-activation) once masked
  Matrix d_grad = std::move(d_trunk_out);
  for (std::size_t li = net.trunk.size(); li-- > 0;) {
    const DenseLayer& layer = net.trunk[li];
    const Matrix& pre = fs.trunk_pre[li];
    const Matrix& below = li == 0 ? fs.input : fs.trunk_act[li - 1];

    if (layer.activation == Activation::relu) {
      for (std::size_t i = 0; i < n; ++i) {
        double* dp = d_grad.row(i);
        const double* z = pre.row(i);
        for (std::size_t j = 0; j < layer.out_dim(); ++j)
          if (z[j] <= 0.0) dp[j] = 0.0;
      }
    }

    LayerGrads& lg = grads.trunk[li];
    lg.weights = Matrix(layer.out_dim(), layer.in_dim());
    lg.biases.assign(layer.out_dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* dp = d_grad.row(i);
      const double* a = below.row(i);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        double* wrow = lg.weights.row(o);
        for (std::size_t j = 0; j < layer.in_dim(); ++j) wrow[j] += dp[o] * a[j];
        lg.biases[o] += dp[o];
      }
    }

    if (li > 0) {
      Matrix d_below(n, layer.in_dim());
      for (std::size_t i = 0; i < n; ++i) {
        const double* dp = d_grad.row(i);
        double* da = d_below.row(i);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
          const double* wrow = layer.weights.row(o);
          for (std::size_t j = 0; j < layer.in_dim(); ++j) da[j] += dp[o] * wrow[j];
        }
      }
      d_grad = std::move(d_below);
    }
  }

  if (l2_lambda != 0.0) {
    auto decay = [&](LayerGrads& g, const DenseLayer& layer) {
      double* gw = g.weights.data();
      const double* w = layer.weights.data();
      for (std::size_t i = 0; i < layer.weights.size(); ++i) gw[i] += l2_lambda * w[i];
    };
    for (std::size_t i = 0; i < net.trunk.size(); ++i) decay(grads.trunk[i], net.trunk[i]);
    for (std::size_t i = 0; i < net.heads.size(); ++i) decay(grads.heads[i], net.heads[i]);
  }

  return grads;
}

}  // namespace multibin
