#pragma once

#include <cstdint>
#include <vector>

#include "multibin/net.hpp"

namespace multibin {

// Adaptive-moment optimizer state. Moment buffers mirror the parameter
// shapes; `lr` is mutable so a schedule can adjust it between steps.
struct AdamState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t step_count = 0;

  struct Moments {
    Matrix m_weights, v_weights;
    std::vector<double> m_biases, v_biases;
  };
  std::vector<Moments> trunk;
  std::vector<Moments> heads;
};

AdamState make_adam(const MultiHeadNetwork& net, double lr);

// One bias-corrected update:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(MultiHeadNetwork& net, const Gradients& grads, AdamState& state);

}  // namespace multibin
