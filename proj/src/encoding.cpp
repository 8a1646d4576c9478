#include "multibin/encoding.hpp"

#include <sstream>
#include <stdexcept>

namespace multibin {

EncodedBatch encode_batch(const std::vector<Sample>& samples,
                          const DiscretizationEnsemble& ensemble) {
  EncodedBatch batch;
  batch.ensemble = &ensemble;
  const std::size_t n = samples.size();
  const std::size_t p = n ? samples[0].features.size() : 0;
  batch.features = Matrix(n, p);
  batch.targets.resize(n);
  batch.labels.assign(ensemble.head_count(), std::vector<int>(n));

  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].features.size() != p)
      throw std::invalid_argument("encode_batch: ragged feature widths");
    for (std::size_t j = 0; j < p; ++j) batch.features(i, j) = samples[i].features[j];
    batch.targets[i] = samples[i].target;
    for (std::size_t m = 0; m < ensemble.head_count(); ++m) {
      try {
        batch.labels[m][i] = static_cast<int>(locate(ensemble.members[m], samples[i].target));
      } catch (const std::out_of_range& e) {
        std::ostringstream msg;
        msg << "encode_batch: sample " << i << ": " << e.what();
        throw std::out_of_range(msg.str());
      }
    }
  }
  return batch;
}

EncodedBatch gather(const EncodedBatch& batch, const std::vector<std::size_t>& idx) {
  EncodedBatch out;
  out.ensemble = batch.ensemble;
  out.features = Matrix(idx.size(), batch.features.cols());
  out.targets.resize(idx.size());
  out.labels.assign(batch.labels.size(), std::vector<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t src = idx[i];
    for (std::size_t j = 0; j < batch.features.cols(); ++j)
      out.features(i, j) = batch.features(src, j);
    out.targets[i] = batch.targets[src];
    for (std::size_t m = 0; m < batch.labels.size(); ++m)
      out.labels[m][i] = batch.labels[m][src];
  }
  return out;
}

OverlapMatrices overlap_matrices(const DiscretizationEnsemble& ensemble) {
  OverlapMatrices out;
  const std::size_t k = ensemble.base.size();
  out.per_head.reserve(ensemble.head_count());
  for (const Discretization& member : ensemble.members) {
    Matrix o(member.size(), k);
    for (std::size_t l = 0; l < member.size(); ++l)
      for (std::size_t kk = 0; kk < k; ++kk)
        o(l, kk) = overlap_ratio(member.bins[l], ensemble.base.bins[kk]);
    out.per_head.push_back(std::move(o));
  }
  return out;
}

}  // namespace multibin
