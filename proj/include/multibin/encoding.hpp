#pragma once

#include <cstddef>
#include <vector>

#include "multibin/binning.hpp"
#include "multibin/matrix.hpp"

namespace multibin {

// One training/test example: a feature vector and a scalar target.
struct Sample {
  std::vector<double> features;
  double target = 0.0;
};

// A batch of samples with per-head class labels. Labels are stored as bin
// indices; the one-hot form only ever materializes inside the loss gradient.
// `ensemble` is non-owning: the caller keeps the ensemble alive for the
// lifetime of the batch.
struct EncodedBatch {
  Matrix features;                       // N x p
  std::vector<std::vector<int>> labels;  // [head][sample] -> bin index
  std::vector<double> targets;           // raw targets, N
  const DiscretizationEnsemble* ensemble = nullptr;

  std::size_t sample_count() const { return targets.size(); }
};

// Per-head row-stochastic matrices O^m with O^m[l][k] = p(base bin k | member
// bin l), computed from interval overlaps only; independent of any input.
struct OverlapMatrices {
  std::vector<Matrix> per_head;  // each L_m x K
};

// labels[m][n] = locate(member m, target of sample n). Throws
// std::out_of_range naming the sample index when a target falls outside the
// support. Feature widths must agree across samples.
EncodedBatch encode_batch(const std::vector<Sample>& samples,
                          const DiscretizationEnsemble& ensemble);

// Row-gathers a subset of an encoded batch (used for mini-batching).
EncodedBatch gather(const EncodedBatch& batch, const std::vector<std::size_t>& idx);

OverlapMatrices overlap_matrices(const DiscretizationEnsemble& ensemble);

}  // namespace multibin
