#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "multibin/encoding.hpp"

using namespace multibin;

namespace {

DiscretizationEnsemble ages_ensemble() {
  return equal_width_overlapping(equal_width_base({21.0, 61.0}, 40), 8, 5);
}

Sample make_sample(double target) {
  Sample s;
  s.features = {target * 0.1, 1.0};
  s.target = target;
  return s;
}

}  // namespace

TEST_CASE("encode_batch places 27.3 per the age sets") {
  const DiscretizationEnsemble ens = ages_ensemble();
  const EncodedBatch batch = encode_batch({make_sample(27.3)}, ens);
  REQUIRE(batch.labels.size() == 5);
  CHECK(batch.labels[0][0] == 1);  // member 1: [26, 31)
  CHECK(batch.labels[1][0] == 2);  // member 2: [27, 32)
  CHECK(batch.targets[0] == 27.3);
  CHECK(batch.features(0, 1) == 1.0);
}

TEST_CASE("single-head base ensemble reduces to direct lookup") {
  const Discretization base = equal_width_base({0.0, 10.0}, 10);
  const DiscretizationEnsemble ens = equal_width_overlapping(base, 10, 1);
  std::vector<Sample> samples;
  for (double t : {0.0, 3.3, 9.99, 10.0}) samples.push_back(make_sample(t));
  const EncodedBatch batch = encode_batch(samples, ens);
  REQUIRE(batch.labels.size() == 1);
  for (std::size_t i = 0; i < samples.size(); ++i)
    CHECK(batch.labels[0][i] == int(locate(base, samples[i].target)));
}

TEST_CASE("encode_batch keeps sample order") {
  const DiscretizationEnsemble ens = ages_ensemble();
  const std::vector<double> targets = {59.0, 21.0, 40.5, 33.0};
  std::vector<Sample> samples;
  for (double t : targets) samples.push_back(make_sample(t));
  const EncodedBatch batch = encode_batch(samples, ens);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    CHECK(batch.targets[i] == targets[i]);
    for (std::size_t m = 0; m < ens.head_count(); ++m)
      CHECK(batch.labels[m][i] == int(locate(ens.members[m], targets[i])));
  }
}

TEST_CASE("encode_batch of nothing is empty") {
  const EncodedBatch batch = encode_batch({}, ages_ensemble());
  CHECK(batch.sample_count() == 0);
  CHECK(batch.features.rows() == 0);
  REQUIRE(batch.labels.size() == 5);
  CHECK(batch.labels[0].empty());
}

TEST_CASE("encode_batch names the offending sample") {
  const DiscretizationEnsemble ens = ages_ensemble();
  try {
    encode_batch({make_sample(30.0), make_sample(99.0)}, ens);
    FAIL("expected out_of_range");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
  }
}

TEST_CASE("encode_batch rejects ragged features") {
  Sample a = make_sample(25.0);
  Sample b = make_sample(26.0);
  b.features.push_back(0.0);
  CHECK_THROWS_AS(encode_batch({a, b}, ages_ensemble()), std::invalid_argument);
}

TEST_CASE("gather keeps rows aligned") {
  const DiscretizationEnsemble ens = ages_ensemble();
  std::vector<Sample> samples;
  for (double t : {21.0, 30.0, 45.0, 60.0}) samples.push_back(make_sample(t));
  const EncodedBatch batch = encode_batch(samples, ens);
  const EncodedBatch sub = gather(batch, {3, 1});
  REQUIRE(sub.sample_count() == 2);
  CHECK(sub.targets[0] == 60.0);
  CHECK(sub.targets[1] == 30.0);
  CHECK(sub.labels[2][0] == batch.labels[2][3]);
  CHECK(sub.features(0, 0) == batch.features(3, 0));
}

TEST_CASE("overlap matrix of the base against itself is the identity") {
  const Discretization base = equal_width_base({0.0, 10.0}, 10);
  const OverlapMatrices o = overlap_matrices(equal_width_overlapping(base, 10, 1));
  REQUIRE(o.per_head.size() == 1);
  const Matrix& m = o.per_head[0];
  for (std::size_t l = 0; l < m.rows(); ++l)
    for (std::size_t k = 0; k < m.cols(); ++k)
      CHECK(m(l, k) == doctest::Approx(l == k ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("a bin spanning five equal base bins splits uniformly") {
  const Discretization base = equal_width_base({21.0, 61.0}, 40);
  const DiscretizationEnsemble ens = equal_width_overlapping(base, 8, 5);
  const OverlapMatrices o = overlap_matrices(ens);
  // member 1 bin 0 covers base bins 0..4
  for (std::size_t k = 0; k < 5; ++k)
    CHECK(o.per_head[0](0, k) == doctest::Approx(0.2).epsilon(1e-12));
  for (std::size_t k = 5; k < 40; ++k) CHECK(o.per_head[0](0, k) == 0.0);
  // member 2 bin 0 is [21, 22), exactly base bin 0
  CHECK(o.per_head[1](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 1; k < 40; ++k) CHECK(o.per_head[1](0, k) == 0.0);
}

TEST_CASE("overlap matrix rows are probability vectors") {
  const Discretization base = equal_width_base({-45.0, 46.0}, 91);
  for (uint64_t seed : {1u, 2u, 3u}) {
    const OverlapMatrices o = overlap_matrices(randomized_bins(base, 16, 6, seed));
    for (const Matrix& m : o.per_head) {
      for (std::size_t l = 0; l < m.rows(); ++l) {
        double sum = 0.0;
        for (std::size_t k = 0; k < m.cols(); ++k) {
          CHECK(m(l, k) >= 0.0);
          CHECK(m(l, k) <= 1.0);
          sum += m(l, k);
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
      }
    }
  }
}
