#include <gtest/gtest.h>

#include "hmmop/analytic.hpp"
#include "hmmop/omission.hpp"
#include "support.hpp"

using namespace hmmop;
using hmmop::testing::random_stochastic;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Direct series sum_{m >= 0} of the thinned chain's first-return law under the
// seen/missing Markov process, truncated once terms are negligible.
Matrix markov_limit_series(const Matrix& T, double p, double e) {
  const auto n = T.rows();
  const double stay_seen = p + e, leave_missing = p - e, stay_missing = 1 - p + e;
  Matrix out = stay_seen * T;
  Matrix power = T * T;  // T^{m+1}
  double w = (1 - stay_seen) * leave_missing;
  for (int m = 1; m < 4000 && w > 1e-300; ++m) {
    out += w * power;
    power = power * T;
    w *= stay_missing;
  }
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) /= out.row(i).sum();
  return out;
}

}  // namespace

TEST(OmitTransform, MatchesTruncatedSeries) {
  Rng rng = make_rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix T = random_stochastic(5, rng);
    for (double p : {0.3, 0.5, 0.8}) {
      EXPECT_LT(max_abs(omit_transform(T, p) - omit_transform_truncated(T, p, 200)), 1e-10);
    }
  }
}

TEST(OmitTransform, KeepAllIsIdentityMap) {
  Rng rng = make_rng(2);
  const Matrix T = random_stochastic(4, rng);
  EXPECT_LT(max_abs(omit_transform(T, 1.0) - T), 1e-14);
}

TEST(OmitTransform, OutputIsStochastic) {
  Rng rng = make_rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix Tr = omit_transform(random_stochastic(6, rng, 0.3), 0.05 + 0.95 * uniform01(rng));
    EXPECT_GE(Tr.minCoeff(), -1e-12);
    EXPECT_LT((Tr.rowwise().sum() - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(OmitTransform, RoundTrip) {
  Rng rng = make_rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix T = random_stochastic(5, rng);
    for (int k = 1; k <= 10; ++k) {
      const double p = 0.1 * k;
      const InversionResult r = invert_omit_transform(omit_transform(T, p), p);
      EXPECT_LT(max_abs(r.transition - T), 1e-8) << "p_c " << p;
      EXPECT_TRUE(r.stochastic());
      EXPECT_FALSE(r.projected);
    }
  }
}

TEST(OmitTransform, Morphism) {
  Rng rng = make_rng(5);
  const Matrix T = random_stochastic(5, rng);
  for (double q0 : {0.3, 0.7}) {
    for (double q : {0.4, 0.9}) {
      EXPECT_LT(max_abs(omit_transform(omit_transform(T, q0), q) - omit_transform(T, q * q0)), 1e-9);
      const Matrix Tr = omit_transform(T, 0.2);
      EXPECT_LT(max_abs(invert_omit_transform(invert_omit_transform(Tr, q0).transition, q).transition -
                        invert_omit_transform(Tr, q * q0).transition),
                1e-9);
    }
  }
}

TEST(OmitTransform, PreservesStationaryDistribution) {
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix T = random_stochastic(6, rng, 0.5);
    const Vector pi = stationary_distribution(T);
    for (double p : {0.2, 0.5, 0.9}) {
      EXPECT_LT((pi.transpose() * omit_transform(T, p) - pi.transpose()).lpNorm<1>(), 1e-9);
    }
  }
}

TEST(ComposedMismatch, EqualsTwoPathEvaluation) {
  Rng rng = make_rng(7);
  const Matrix T = random_stochastic(5, rng);
  for (double pq : {0.4, 0.6}) {
    for (double pc : {0.35, 0.5, 0.65}) {
      const Matrix two_path = invert_omit_transform(omit_transform(T, pq), pc).transition;
      EXPECT_LT(max_abs(composed_mismatch(T, pq, pc) - two_path), 1e-9);
    }
  }
}

TEST(ComposedMismatch, CorrectKeepProbabilityIsIdentity) {
  Rng rng = make_rng(8);
  const Matrix T = random_stochastic(4, rng);
  EXPECT_LT(max_abs(composed_mismatch(T, 0.6, 0.6) - T), 1e-10);
}

TEST(EstimateKeepProb, RecoversTrueValue) {
  Rng rng = make_rng(9);
  const Matrix T = random_stochastic(5, rng);
  const double closed = estimate_keep_prob(T, [&](double pc) { return composed_mismatch(T, 0.6, pc); });
  EXPECT_NEAR(closed, 0.6, 1e-3);
  const Matrix Tr = omit_transform(T, 0.6);
  const double two_path =
      estimate_keep_prob(T, [&](double pc) { return invert_omit_transform(Tr, pc).transition; });
  EXPECT_NEAR(two_path, 0.6, 1e-3);
}

TEST(EstimateKeepProb, IdentityIsUnidentifiable) {
  const Matrix I = Matrix::Identity(3, 3);
  EXPECT_THROW(estimate_keep_prob(I, [&](double) { return I; }), std::domain_error);
}

TEST(Inversion, NegativeEntriesAreReportedAndProjected) {
  Matrix Tr(2, 2);
  Tr << 0.1, 0.9, 0.9, 0.1;
  const auto raw = invert_omit_transform(Tr, 0.5);
  EXPECT_NEAR(raw.most_negative, -3.5, 1e-10);
  EXPECT_FALSE(raw.stochastic());
  EXPECT_NEAR(raw.transition.row(0).sum(), 1.0, 1e-12);
  const auto fixed = invert_omit_transform(Tr, 0.5, true);
  EXPECT_TRUE(fixed.projected);
  EXPECT_TRUE(fixed.stochastic());
  EXPECT_TRUE(TransitionMatrix::is_stochastic(fixed.transition));
  EXPECT_NEAR(fixed.transition(0, 1), 1.0, 1e-12);
}

TEST(Inversion, SimplexProjectionIsIdempotentOnStochasticRows) {
  Rng rng = make_rng(10);
  const Matrix T = random_stochastic(5, rng);
  EXPECT_LT(max_abs(project_rows_to_simplex(T) - T), 1e-15);
  Matrix m(1, 3);
  m << 0.5, 0.8, -0.3;
  const Matrix p = project_rows_to_simplex(m);
  EXPECT_NEAR(p(0, 0), 0.35, 1e-12);
  EXPECT_NEAR(p(0, 1), 0.65, 1e-12);
  EXPECT_EQ(p(0, 2), 0.0);
}

TEST(NaiveLimit, MemorylessEqualsOmitTransform) {
  Rng rng = make_rng(11);
  const Matrix T = random_stochastic(4, rng);
  EXPECT_LT(max_abs(naive_limit_markov_omission(T, 0.6, 0.0) - omit_transform(T, 0.6)), 1e-12);
}

TEST(NaiveLimit, MatchesDirectSeries) {
  Rng rng = make_rng(12);
  const Matrix T = random_stochastic(4, rng);
  for (double e : {0.1, 0.3}) {
    EXPECT_LT(max_abs(naive_limit_markov_omission(T, 0.5, e) - markov_limit_series(T, 0.5, e)), 1e-10);
  }
}

TEST(NaiveLimit, MatchesSimulatedPairCounts) {
  Rng rng = make_rng(13);
  const Matrix T = random_stochastic(3, rng);
  const HmmModel m = hmmop::testing::gaussian_model(T, {0, 1, 2}, 0.1);
  const auto [x, o] = sample_trajectory(m, 600000, rng);
  const auto s = apply_omission(x, o, OmissionSpec::markov(0.5, 0.25), rng);
  Matrix counts = Matrix::Zero(3, 3);
  for (std::size_t k = 1; k < s.W->size(); ++k) counts(x[(*s.W)[k - 1]], x[(*s.W)[k]]) += 1.0;
  for (int i = 0; i < 3; ++i) counts.row(i) /= counts.row(i).sum();
  EXPECT_LT(max_abs(counts - naive_limit_markov_omission(T, 0.5, 0.25)), 0.01);
}

TEST(SemiAnalytic, RecoversNonHiddenChain) {
  Rng rng = make_rng(14);
  Matrix T(3, 3);
  T << 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.8, 0.1, 0.1;
  const HmmModel truth = hmmop::testing::gaussian_model(T, {0, 1, 2}, 0.01);
  Dataset data;
  for (int i = 0; i < 400; ++i) {
    const auto [x, o] = sample_trajectory(truth, 200, rng);
    data.push_back(apply_omission(x, o, OmissionSpec::constant(0.5), rng));
  }
  // Pair counts of the rounded observations stand in for a fitted naive HMM.
  auto count_fit = [&](const Dataset& d) {
    Matrix c = Matrix::Zero(3, 3);
    for (const auto& s : d)
      for (std::size_t k = 1; k < s.O.size(); ++k)
        c(static_cast<int>(std::lround(s.O[k - 1])), static_cast<int>(std::lround(s.O[k]))) += 1.0;
    for (int i = 0; i < 3; ++i) c.row(i) /= c.row(i).sum();
    return hmmop::testing::gaussian_model(c, {0, 1, 2}, 0.01);
  };
  const auto r = semi_analytic_reconstruct(data, 0.5, count_fit, true);
  ASSERT_TRUE(r.model);
  EXPECT_LT(l1_transition_distance(r.model->T(), T), 0.1);
  EXPECT_GT(l1_transition_distance(r.naive.T(), T), 0.2);
}
