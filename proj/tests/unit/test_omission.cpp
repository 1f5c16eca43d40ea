#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hmmop/omission.hpp"
#include "hmmop/random.hpp"

using namespace hmmop;

namespace {

StateSeq zeros(int n) { return StateSeq(static_cast<std::size_t>(n), 0); }

ObsSeq ramp(int n) {
  ObsSeq o(static_cast<std::size_t>(n));
  std::iota(o.begin(), o.end(), 0.0);
  return o;
}

struct KeepStats {
  double kept_fraction = 0.0;
  double mean_run = 0.0;  // mean length of maximal kept runs
};

KeepStats keep_stats(const OmissionSpec& spec, std::uint64_t seed, int sentences, int n) {
  long kept = 0, runs = 0, run_total = 0;
  for (int i = 0; i < sentences; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const auto s = apply_omission(zeros(n), ramp(n), spec, rng);
    kept += static_cast<long>(s.O.size());
    for (std::size_t k = 0; k < s.W->size(); ++k) {
      if (k == 0 || (*s.W)[k] != (*s.W)[k - 1] + 1) ++runs;
      ++run_total;
    }
  }
  return {static_cast<double>(kept) / (static_cast<double>(sentences) * n),
          static_cast<double>(run_total) / static_cast<double>(runs)};
}

}  // namespace

TEST(Omission, ConstantKeptFractionWithinThreeSigma) {
  const int sentences = 400, n = 50;
  for (double p : {0.2, 0.5, 0.8}) {
    const auto st = keep_stats(OmissionSpec::constant(p), 17, sentences, n);
    const double sd = std::sqrt(p * (1 - p) / (sentences * n));
    EXPECT_NEAR(st.kept_fraction, p, 3 * sd) << "p_c " << p;
  }
}

TEST(Omission, MarkovWithoutMemoryMatchesConstant) {
  const int sentences = 400, n = 50;
  const auto a = keep_stats(OmissionSpec::constant(0.6), 1, sentences, n);
  const auto b = keep_stats(OmissionSpec::markov(0.6, 0.0), 2, sentences, n);
  const double sd = std::sqrt(2 * 0.6 * 0.4 / (sentences * n));
  EXPECT_NEAR(a.kept_fraction, b.kept_fraction, 3 * sd);
  // Geometric run length 1 / (1 - p_c) = 2.5.
  EXPECT_NEAR(a.mean_run, 2.5, 0.1);
  EXPECT_NEAR(b.mean_run, 2.5, 0.1);
}

TEST(Omission, MarkovMemoryLengthensRuns) {
  const auto st = keep_stats(OmissionSpec::markov(0.5, 0.3), 5, 20, 2000);
  // P(seen | seen) = 0.8, so kept runs average 5.
  EXPECT_NEAR(st.mean_run, 5.0, 0.3);
}

TEST(Omission, StateDependentUsesPsiOfState) {
  Vector psi(2);
  psi << 0.0, 1.0;
  StateSeq x{0, 1, 0, 1, 1, 0};
  Rng rng = make_rng(3);
  const auto s = apply_omission(x, ramp(6), OmissionSpec::state_dependent(psi), rng);
  EXPECT_EQ(*s.W, (Placement{0, 2, 5}));
  EXPECT_EQ(s.O, (ObsSeq{0, 2, 5}));
  EXPECT_EQ(*s.N, 6);
  EXPECT_EQ(*s.X, x);
}

TEST(Omission, OutputsAreWellFormed) {
  Rng rng = make_rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + rep % 30;
    const auto spec = rep % 2 ? OmissionSpec::per_sentence_normal(0.5, 0.3) : OmissionSpec::markov(0.4, 0.2);
    const auto s = apply_omission(zeros(n), ramp(n), spec, rng);
    EXPECT_LE(static_cast<int>(s.O.size()), *s.N);
    EXPECT_NO_THROW(validate_sentence(s));
    for (std::size_t k = 1; k < s.W->size(); ++k) EXPECT_LT((*s.W)[k - 1], (*s.W)[k]);
  }
}

TEST(Omission, InvalidParameters) {
  EXPECT_THROW(OmissionSpec::constant(0.0), std::invalid_argument);
  EXPECT_THROW(OmissionSpec::constant(1.5), std::invalid_argument);
  EXPECT_THROW(OmissionSpec::markov(0.8, 0.3), std::invalid_argument);
  EXPECT_THROW(OmissionSpec::per_sentence_normal(0.5, -1.0), std::invalid_argument);
  Vector psi(2);
  psi << 0.2, 1.2;
  EXPECT_THROW(OmissionSpec::state_dependent(psi), std::invalid_argument);
}

TEST(Omission, KeepProbability) {
  EXPECT_DOUBLE_EQ(keep_prob(OmissionSpec::constant(0.3), 4), 0.3);
  Vector psi(2);
  psi << 0.25, 0.5;
  EXPECT_DOUBLE_EQ(keep_prob(OmissionSpec::state_dependent(psi), 0), 0.75);
  EXPECT_THROW(keep_prob(OmissionSpec::markov(0.5, 0.1), 0), std::logic_error);
}

TEST(Sentence, ValidationRejectsBadPlacements) {
  OmittedSentence s;
  s.O = {1.0, 2.0};
  s.W = Placement{2, 1};
  EXPECT_THROW(validate_sentence(s), std::invalid_argument);
  s.W = Placement{0, 3};
  s.N = 3;
  EXPECT_THROW(validate_sentence(s), std::invalid_argument);
  s.W = Placement{0};
  s.N.reset();
  EXPECT_THROW(validate_sentence(s), std::invalid_argument);
  s.W = Placement{0, 2};
  EXPECT_NO_THROW(validate_sentence(s));
}

TEST(Sentence, StripRemovesTruth) {
  Rng rng = make_rng(1);
  Dataset d{apply_omission(zeros(10), ramp(10), OmissionSpec::constant(0.5), rng)};
  const auto a = strip_placements(d, false);
  EXPECT_FALSE(a[0].W || a[0].N || a[0].X);
  const auto b = strip_placements(d, true);
  EXPECT_FALSE(b[0].W || b[0].X);
  EXPECT_EQ(*b[0].N, 10);
  EXPECT_EQ(b[0].O, d[0].O);
}

TEST(Random, StreamsAreDistinctAndReproducible) {
  EXPECT_EQ(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 3, 4));
  EXPECT_NE(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 4, 3));
  EXPECT_NE(derive_seed(1, 0, 0, 0), derive_seed(2, 0, 0, 0));
  Rng a = make_rng(7, 1), b = make_rng(7, 1);
  EXPECT_EQ(a(), b());
}

TEST(Random, DirichletMoments) {
  Rng rng = make_rng(2);
  Vector alpha(3);
  alpha << 1.0, 2.0, 5.0;
  Vector mean = Vector::Zero(3);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const Vector d = sample_dirichlet(alpha, rng);
    ASSERT_NEAR(d.sum(), 1.0, 1e-12);
    mean += d;
  }
  mean /= n;
  for (int i = 0; i < 3; ++i) {
    const double m = alpha[i] / 8.0;
    EXPECT_NEAR(mean[i], m, 4 * std::sqrt(m * (1 - m) / 9.0 / n));
  }
}

TEST(Random, BetaMean) {
  Rng rng = make_rng(4);
  double s = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) s += sample_beta(2.0, 6.0, rng);
  EXPECT_NEAR(s / n, 0.25, 4 * std::sqrt(0.25 * 0.75 / 9.0 / n));
}

TEST(Random, CategoricalAndLogCategorical) {
  Rng rng = make_rng(6);
  const std::vector<double> w{1.0, 0.0, 3.0};
  const std::vector<double> lw{std::log(1.0), kLogZero, std::log(3.0)};
  int c0 = 0, l0 = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto a = sample_categorical(w, rng);
    const auto b = sample_log_categorical(lw, rng);
    ASSERT_NE(a, 1u);
    ASSERT_NE(b, 1u);
    c0 += a == 0;
    l0 += b == 0;
  }
  const double sd = std::sqrt(0.25 * 0.75 / n);
  EXPECT_NEAR(c0 / double(n), 0.25, 4 * sd);
  EXPECT_NEAR(l0 / double(n), 0.25, 4 * sd);
  const std::vector<double> none{0.0, 0.0};
  EXPECT_THROW(sample_categorical(none, rng), std::domain_error);
}
