#include "multibin/inference.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "multibin/errors.hpp"

namespace multibin {

std::vector<std::vector<double>> member_means(const DiscretizationEnsemble& ens) {
  std::vector<std::vector<double>> means(ens.head_count());
  for (std::size_t m = 0; m < ens.head_count(); ++m) {
    means[m].resize(ens.members[m].size());
    for (std::size_t l = 0; l < ens.members[m].size(); ++l)
      means[m][l] = bin_mean(ens.members[m], l);
  }
  return means;
}

std::vector<std::vector<double>> empirical_member_means(
    const DiscretizationEnsemble& ens, const std::vector<double>& train_targets) {
  std::vector<std::vector<double>> means = member_means(ens);
  for (std::size_t m = 0; m < ens.head_count(); ++m) {
    std::vector<double> sum(ens.members[m].size(), 0.0);
    std::vector<std::size_t> count(ens.members[m].size(), 0);
    for (double t : train_targets) {
      const std::size_t l = locate(ens.members[m], t);
      sum[l] += t;
      count[l] += 1;
    }
    for (std::size_t l = 0; l < sum.size(); ++l)
      if (count[l] > 0) means[m][l] = sum[l] / static_cast<double>(count[l]);
  }
  return means;
}

Matrix expected_values(const ForwardState& fs,
                       const std::vector<std::vector<double>>& means) {
  if (fs.head_probs.size() != means.size())
    throw std::invalid_argument("expected_values: head count mismatch");
  const std::size_t n = fs.sample_count();
  Matrix per_head(means.size(), n);
  for (std::size_t m = 0; m < means.size(); ++m) {
    const Matrix& p = fs.head_probs[m];
    if (p.cols() != means[m].size())
      throw std::invalid_argument("expected_values: head width does not match member bins");
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* pi = p.row(i);
      for (std::size_t l = 0; l < means[m].size(); ++l) acc += means[m][l] * pi[l];
      per_head(m, i) = acc;
    }
  }
  return per_head;
}

Matrix expected_values(const ForwardState& fs, const DiscretizationEnsemble& ens) {
  return expected_values(fs, member_means(ens));
}

std::vector<double> ensemble_average(const Matrix& per_head,
                                     const std::vector<double>& weights) {
  const std::size_t m = per_head.rows();
  if (m == 0) throw std::invalid_argument("ensemble_average: empty head set");
  if (!weights.empty() && weights.size() != m)
    throw std::invalid_argument("ensemble_average: weight count mismatch");

  std::vector<double> out(per_head.cols(), 0.0);
  double wsum = 0.0;
  for (std::size_t h = 0; h < m; ++h) {
    const double w = weights.empty() ? 1.0 : weights[h];
    wsum += w;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * per_head(h, i);
  }
  if (wsum == 0.0) throw std::invalid_argument("ensemble_average: zero total weight");
  for (double& v : out) v /= wsum;
  return out;
}

PredictionSet make_prediction_set(const ForwardState& fs,
                                  const std::vector<std::vector<double>>& means) {
  PredictionSet ps;
  ps.per_head = expected_values(fs, means);
  ps.ensemble = ensemble_average(ps.per_head);
  return ps;
}

DecompositionReport ambiguity_decomposition(const Matrix& per_head,
                                            const std::vector<double>& targets) {
  const std::size_t m = per_head.rows();
  const std::size_t n = per_head.cols();
  if (m == 0) throw std::invalid_argument("ambiguity_decomposition: empty head set");
  if (n != targets.size())
    throw std::invalid_argument("ambiguity_decomposition: sample count mismatch");

  DecompositionReport rep;
  rep.ensemble_sq_err.resize(n);
  rep.mean_individual_sq_err.resize(n);
  rep.ambiguity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ybar = 0.0;
    for (std::size_t h = 0; h < m; ++h) ybar += per_head(h, i);
    ybar /= static_cast<double>(m);

    double ind = 0.0, amb = 0.0;
    for (std::size_t h = 0; h < m; ++h) {
      const double e = per_head(h, i) - targets[i];
      const double a = per_head(h, i) - ybar;
      ind += e * e;
      amb += a * a;
    }
    rep.ensemble_sq_err[i] = (ybar - targets[i]) * (ybar - targets[i]);
    rep.mean_individual_sq_err[i] = ind / static_cast<double>(m);
    rep.ambiguity[i] = amb / static_cast<double>(m);
  }
  return rep;
}

Matrix marginal_posterior(const ForwardState& fs, const OverlapMatrices& overlaps) {
  const std::size_t m = fs.head_probs.size();
  if (m == 0 || overlaps.per_head.size() != m)
    throw std::invalid_argument("marginal_posterior: head count mismatch");
  const std::size_t n = fs.sample_count();
  const std::size_t k = overlaps.per_head[0].cols();

  Matrix marginal(n, k);
  for (std::size_t h = 0; h < m; ++h) {
    const Matrix& o = overlaps.per_head[h];
    const Matrix& p = fs.head_probs[h];
    if (p.cols() != o.rows())
      throw std::invalid_argument("marginal_posterior: head width does not match overlap rows");
    for (std::size_t i = 0; i < n; ++i) {
      const double* pi = p.row(i);
      double* mi = marginal.row(i);
      for (std::size_t l = 0; l < o.rows(); ++l) {
        const double pl = pi[l];
        const double* ol = o.row(l);
        for (std::size_t kk = 0; kk < k; ++kk) mi[kk] += pl * ol[kk];
      }
    }
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    double* mi = marginal.row(i);
    for (std::size_t kk = 0; kk < k; ++kk) {
      mi[kk] *= inv_m;
      sum += mi[kk];
    }
    if (std::fabs(sum - 1.0) > 1e-6) {
      std::ostringstream msg;
      msg << "marginal_posterior: row " << i << " sums to " << sum
          << " (outside 1 +/- 1e-6)";
      throw numeric_error(msg.str());
    }
  }
  return marginal;
}

std::vector<std::size_t> map_estimate(const Matrix& marginal) {
  std::vector<std::size_t> out(marginal.rows());
  for (std::size_t i = 0; i < marginal.rows(); ++i) {
    const double* row = marginal.row(i);
    std::size_t best = 0;
    for (std::size_t kk = 1; kk < marginal.cols(); ++kk)
      if (row[kk] > row[best]) best = kk;
    out[i] = best;
  }
  return out;
}

}  // namespace multibin
