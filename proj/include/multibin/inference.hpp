#pragma once

#include <vector>

#include "multibin/binning.hpp"
#include "multibin/encoding.hpp"
#include "multibin/net.hpp"

namespace multibin {

// Per-head point estimates and their uniform ensemble average.
struct PredictionSet {
  Matrix per_head;               // M x N
  std::vector<double> ensemble;  // N
};

// Per-sample terms of the squared-error split
//   (ybar - t)^2 = mean_m (yhat_m - t)^2 - mean_m (yhat_m - ybar)^2.
// The identity is algebra, so ensemble_sq_err == mean_individual_sq_err -
// ambiguity up to rounding, and ambiguity is a variance, hence >= 0.
struct DecompositionReport {
  std::vector<double> ensemble_sq_err;
  std::vector<double> mean_individual_sq_err;
  std::vector<double> ambiguity;
};

// Representative value per bin and member: midpoints, or means of the
// training targets that fall in each bin (empty bins fall back to the
// midpoint).
std::vector<std::vector<double>> member_means(const DiscretizationEnsemble& ens);
std::vector<std::vector<double>> empirical_member_means(
    const DiscretizationEnsemble& ens, const std::vector<double>& train_targets);

// yhat[m][n] = sum_l means[m][l] * p(bin l of member m | x_n).
Matrix expected_values(const ForwardState& fs, const DiscretizationEnsemble& ens);
Matrix expected_values(const ForwardState& fs,
                       const std::vector<std::vector<double>>& means);

// Uniform mean over heads per sample. Non-uniform weights are an extension
// hook: when given, the result is sum(w_m * yhat_m) / sum(w_m).
std::vector<double> ensemble_average(const Matrix& per_head,
                                     const std::vector<double>& weights = {});

PredictionSet make_prediction_set(const ForwardState& fs,
                                  const std::vector<std::vector<double>>& means);

DecompositionReport ambiguity_decomposition(const Matrix& per_head,
                                            const std::vector<double>& targets);

// p(base bin k | x_n) = (1/M) sum_m sum_l O^m[l][k] p(member bin l | x_n).
// Rows are checked to sum to 1 within 1e-6; a violation throws numeric_error
// rather than silently renormalizing.
Matrix marginal_posterior(const ForwardState& fs, const OverlapMatrices& overlaps);

// Per-sample argmax over base classes; ties break toward the lowest index.
std::vector<std::size_t> map_estimate(const Matrix& marginal);

}  // namespace multibin
