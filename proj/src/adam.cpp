#include "multibin/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace multibin {

namespace {

AdamState::Moments make_moments(const DenseLayer& layer) {
  AdamState::Moments m;
  m.m_weights = Matrix(layer.weights.rows(), layer.weights.cols());
  m.v_weights = Matrix(layer.weights.rows(), layer.weights.cols());
  m.m_biases.assign(layer.biases.size(), 0.0);
  m.v_biases.assign(layer.biases.size(), 0.0);
  return m;
}

void update_tensor(double* theta, const double* grad, double* m, double* v,
                   std::size_t count, const AdamState& s, double m_corr,
                   double v_corr) {
  for (std::size_t i = 0; i < count; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
    theta[i] -= s.lr * (m[i] / m_corr) / (std::sqrt(v[i] / v_corr) + s.epsilon);
  }
}

}  // namespace

AdamState make_adam(const MultiHeadNetwork& net, double lr) {
  AdamState state;
  state.lr = lr;
  for (const DenseLayer& layer : net.trunk) state.trunk.push_back(make_moments(layer));
  for (const DenseLayer& head : net.heads) state.heads.push_back(make_moments(head));
  return state;
}

void adam_step(MultiHeadNetwork& net, const Gradients& grads, AdamState& state) {
  if (grads.trunk.size() != net.trunk.size() || grads.heads.size() != net.heads.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");

  state.step_count += 1;
  const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

  auto update_layer = [&](DenseLayer& layer, const LayerGrads& g, AdamState::Moments& mo) {
    if (g.weights.rows() != layer.weights.rows() || g.weights.cols() != layer.weights.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    update_tensor(layer.weights.data(), g.weights.data(), mo.m_weights.data(),
                  mo.v_weights.data(), layer.weights.size(), state, m_corr, v_corr);
    update_tensor(layer.biases.data(), g.biases.data(), mo.m_biases.data(),
                  mo.v_biases.data(), layer.biases.size(), state, m_corr, v_corr);
  };

  for (std::size_t i = 0; i < net.trunk.size(); ++i)
    update_layer(net.trunk[i], grads.trunk[i], state.trunk[i]);
  for (std::size_t i = 0; i < net.heads.size(); ++i)
    update_layer(net.heads[i], grads.heads[i], state.heads[i]);
}

}  // namespace multibin
