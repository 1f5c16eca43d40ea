#include <gtest/gtest.h>

#include <cmath>

#include "hmmop/gaps.hpp"
#include "support.hpp"

using namespace hmmop;
using hmmop::testing::for_each_sequence;
using hmmop::testing::random_stochastic;
using hmmop::testing::total_variation;

namespace {

struct Chain {
  Matrix T;
  Vector psi;
  Vector initial;
};

Chain small_setup(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Chain s{random_stochastic(3, rng, 0.8), Vector(3), Vector(3)};
  s.psi << 0.3, 0.6, 0.45;
  s.initial << 0.2, 0.5, 0.3;
  return s;
}

// Total weight of every path a -> s_1 .. s_d -> b whose interior states were all omitted.
double enumerate_gap(const Chain& s, int a, int b, int d) {
  double total = 0.0;
  for_each_sequence(3, d, [&](const std::vector<int>& mid) {
    double w = 1.0;
    int prev = a;
    for (int m : mid) {
      w *= s.T(prev, m) * s.psi[m];
      prev = m;
    }
    total += w * s.T(prev, b);
  });
  return total;
}

double enumerate_leading(const Chain& s, int b, int d) {
  if (d == 0) return s.initial[b];
  double total = 0.0;
  for_each_sequence(3, d, [&](const std::vector<int>& path) {
    double w = s.initial[path[0]] * s.psi[path[0]];
    for (std::size_t i = 1; i < path.size(); ++i) w *= s.T(path[i - 1], path[i]) * s.psi[path[i]];
    total += w * s.T(path.back(), b);
  });
  return total;
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(GapDistribution, MatchesPathEnumeration) {
  const Chain s = small_setup(1);
  const int S = 4;
  const GapTables t = build_gap_tables(s.T, s.psi, S, s.initial);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Vector brute(S + 1);
      for (int d = 0; d <= S; ++d) {
        brute[d] = enumerate_gap(s, a, b, d);
        EXPECT_NEAR(t.MT_powers[d](a, b), brute[d], 1e-14);
      }
      const Vector p = gap_distribution(a, b, t);
      EXPECT_LT((p - brute / brute.sum()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_NEAR(p.sum(), 1.0, 1e-15);
    }
  }
}

TEST(GapDistribution, LeadingMatchesPathEnumeration) {
  const Chain s = small_setup(2);
  const int S = 4;
  const GapTables t = build_gap_tables(s.T, s.psi, S, s.initial);
  for (int b = 0; b < 3; ++b) {
    Vector brute(S + 1);
    for (int d = 0; d <= S; ++d) {
      brute[d] = enumerate_leading(s, b, d);
      EXPECT_NEAR(t.leading[d][b], brute[d], 1e-14);
    }
    EXPECT_LT((leading_gap_distribution(b, t) - brute / brute.sum()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GapDistribution, IgnorableClosedForm) {
  Rng rng = make_rng(3);
  const Matrix T = random_stochastic(4, rng);
  const double p = 0.35;
  const GapTables t = build_gap_tables(T, Vector::Constant(4, 1 - p), 8);
  Matrix power = T;
  for (int d = 0; d <= 8; ++d) {
    EXPECT_LT((t.MT_powers[d] - std::pow(1 - p, d) * power).cwiseAbs().maxCoeff(), 1e-12);
    power = power * T;
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      Vector closed(9);
      Matrix pw = T;
      for (int d = 0; d <= 8; ++d) {
        closed[d] = std::pow(1 - p, d) * pw(a, b);
        pw = pw * T;
      }
      EXPECT_LT((gap_distribution(a, b, t) - closed / closed.sum()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(GapDistribution, DominatedByUnthinnedPowers) {
  const Chain s = small_setup(4);
  const GapTables t = build_gap_tables(s.T, s.psi, 6, s.initial);
  Matrix power = s.T;
  for (int d = 0; d <= 6; ++d) {
    EXPECT_GE(t.MT_powers[d].minCoeff(), 0.0);
    EXPECT_LE((t.MT_powers[d] - power).maxCoeff(), 1e-15);
    power = power * s.T;
  }
}

TEST(GapDistribution, NoMassThrows) {
  Matrix T(2, 2);
  T << 0, 1, 1, 0;
  const GapTables t = build_gap_tables(T, Vector::Constant(2, 0.5), 3);
  EXPECT_THROW(gap_distribution(0, 0, GapTables(build_gap_tables(T, Vector::Zero(2), 3))), std::domain_error);
  EXPECT_NO_THROW(gap_distribution(0, 0, t));
  EXPECT_THROW(gap_distribution(0, 2, t), std::out_of_range);
}

TEST(GapSampling, FrequenciesMatchDistribution) {
  const Chain s = small_setup(5);
  const GapTables t = build_gap_tables(s.T, s.psi, 6, s.initial);
  Rng rng = make_rng(6);
  std::vector<double> freq(7, 0.0), lead(7, 0.0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    freq[sample_gap(1, 2, t, rng)] += 1.0 / n;
    lead[sample_leading_gap(0, t, rng)] += 1.0 / n;
  }
  EXPECT_LT(total_variation(freq, as_std(gap_distribution(1, 2, t))), 0.01);
  EXPECT_LT(total_variation(lead, as_std(leading_gap_distribution(0, t))), 0.01);
}

TEST(XWalk, MatchesEnumeration) {
  const Chain s = small_setup(7);
  const GapTables t = build_gap_tables(s.T, s.psi, 4, s.initial);
  const auto emission = EmissionModel::gaussian(Eigen::Vector3d(0, 1, 2), 0.7);
  const ObsSeq O{0.3, 1.4, 1.9};
  const GapSeq d{1, 0, 2};
  std::vector<double> exact(27);
  double z = 0;
  for_each_sequence(3, 3, [&](const std::vector<int>& x) {
    double w = t.leading[d[0]][x[0]];
    for (int k = 1; k < 3; ++k) w *= t.MT_powers[d[k]](x[k - 1], x[k]);
    for (int k = 0; k < 3; ++k) w *= (1 - s.psi[x[k]]) * std::exp(emission.log_density(x[k], O[k]));
    z += exact[static_cast<std::size_t>(x[0] * 9 + x[1] * 3 + x[2])] = w;
  });
  for (double& v : exact) v /= z;
  Rng rng = make_rng(8);
  std::vector<double> freq(27, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const StateSeq x = sample_x_walk(t, d, O, emission, rng);
    freq[static_cast<std::size_t>(x[0] * 9 + x[1] * 3 + x[2])] += 1.0 / n;
  }
  EXPECT_LT(total_variation(freq, exact), 0.01);
}

TEST(XWalk, RejectsBadGaps) {
  const Chain s = small_setup(9);
  const GapTables t = build_gap_tables(s.T, s.psi, 3, s.initial);
  const auto emission = EmissionModel::gaussian(Eigen::Vector3d(0, 1, 2), 0.7);
  Rng rng = make_rng(1);
  EXPECT_THROW(sample_x_walk(t, {0, 4}, {0.0, 1.0}, emission, rng), std::invalid_argument);
  EXPECT_THROW(sample_x_walk(t, {0}, {0.0, 1.0}, emission, rng), std::invalid_argument);
  EXPECT_TRUE(sample_x_walk(t, {}, {}, emission, rng).empty());
}

TEST(Representation, GapsPlacementRoundTrip) {
  Rng rng = make_rng(10);
  for (int rep = 0; rep < 200; ++rep) {
    GapSeq d(static_cast<std::size_t>(rep % 12));
    for (int& g : d) g = static_cast<int>(uniform01(rng) * 6);
    const auto p = placement_from_gaps(d);
    int sum = 0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      sum += d[k];
      EXPECT_EQ(p.W[k], sum + static_cast<int>(k));
      if (k > 0) EXPECT_LT(p.W[k - 1], p.W[k]);
    }
    EXPECT_EQ(p.N, sum + static_cast<int>(d.size()));
    EXPECT_EQ(gaps_from_placement(p.W), d);
  }
  EXPECT_THROW(gaps_from_placement({2, 2}), std::invalid_argument);
  EXPECT_THROW(placement_from_gaps({0, -1}), std::invalid_argument);
}

TEST(Truncation, DefaultCap) {
  EXPECT_EQ(default_s_max(Vector::Constant(3, 0.5)), 27);
  EXPECT_EQ(default_s_max(Vector::Constant(3, 0.1)), 9);
  EXPECT_EQ(default_s_max(Vector::Constant(3, 0.01)), 5);
  EXPECT_EQ(default_s_max(Vector::Constant(3, 0.9)), 60);
  EXPECT_EQ(default_s_max(Vector::Zero(3)), 5);
  Vector mixed(2);
  mixed << 0.1, 0.5;
  EXPECT_EQ(default_s_max(mixed), 27);
}

// Tables cost O(S) dense products once; per-sentence sampling only reads
// O(K (S + n^2)) table entries and issues no products.
TEST(Complexity, TableWorkIsSeparateFromSentenceWork) {
  const Chain s = small_setup(11);
  const auto emission = EmissionModel::gaussian(Eigen::Vector3d(0, 1, 2), 0.7);
  reset_gap_work_counts();
  const GapTables t = build_gap_tables(s.T, s.psi, 10, s.initial);
  EXPECT_EQ(gap_work_counts().table_matrix_products, 21);
  Rng rng = make_rng(2);
  auto reads_for = [&](int K) {
    reset_gap_work_counts();
    const ObsSeq O(static_cast<std::size_t>(K), 1.0);
    const StateSeq x = sample_x_walk(t, GapSeq(static_cast<std::size_t>(K), 1), O, emission, rng);
    sample_gaps(t, x, rng);
    EXPECT_EQ(gap_work_counts().table_matrix_products, 0);
    return gap_work_counts().sentence_kernel_reads;
  };
  const long long r10 = reads_for(10), r20 = reads_for(20);
  // (K - 1) n^2 backward reads + K n forward reads + K (S + 1) gap reads.
  EXPECT_EQ(r10, 9 * 9 + 10 * 3 + 10 * 11);
  EXPECT_EQ(r20 - r10, 10 * (9 + 3 + 11));
}

namespace {

Dataset omitted_data(int sentences, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix T(3, 3);
  T << 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.8, 0.1, 0.1;
  const HmmModel m = hmmop::testing::gaussian_model(T, {0, 1, 2}, 0.1);
  Dataset d;
  for (int i = 0; i < sentences; ++i) {
    const auto [x, o] = sample_trajectory(m, 20, rng);
    d.push_back(apply_omission(x, o, OmissionSpec::constant(0.6), rng));
  }
  return d;
}

GibbsConfig small_config() {
  GibbsConfig c;
  c.n_states = 3;
  c.n_iterations = 40;
  c.burn_in = 10;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(FitGaps, IgnoresPlacementsAndLengths) {
  const Dataset full = omitted_data(15, 1);
  const auto a = fit_gaps(full, PsiInput::constant_keep(3, 0.6), small_config());
  const auto b = fit_gaps(strip_placements(full, false), PsiInput::constant_keep(3, 0.6), small_config());
  EXPECT_EQ(a.model.T(), b.model.T());
  EXPECT_EQ(a.diagnostics.size(), 40u);
  EXPECT_EQ(a.samples_kept, 30);
}

TEST(FitGaps, SkipsEmptySentences) {
  Dataset d = strip_placements(omitted_data(6, 2), false);
  d.push_back(OmittedSentence{});
  d.insert(d.begin(), OmittedSentence{});
  const auto r = fit_gaps(d, PsiInput::constant_keep(3, 0.6), small_config());
  EXPECT_EQ(r.skipped_sentences, 2);
}

TEST(FitGaps, ThreadCountDoesNotChangeResult) {
  const Dataset d = strip_placements(omitted_data(12, 3), false);
  auto cfg = small_config();
  const auto one = fit_gaps(d, PsiInput::constant_keep(3, 0.6), cfg);
  cfg.threads = 4;
  const auto four = fit_gaps(d, PsiInput::constant_keep(3, 0.6), cfg);
  EXPECT_EQ(one.model.T(), four.model.T());
}

TEST(FitGaps, PartialPsiNeedsSampling) {
  const Dataset d = strip_placements(omitted_data(3, 4), false);
  const auto partial = PsiInput::partial(Vector::Constant(3, 0.4), {true, false, true});
  EXPECT_THROW(fit_gaps(d, partial, small_config()), std::invalid_argument);
  auto cfg = small_config();
  cfg.psi_mode = PsiMode::sample_missing;
  const auto r = fit_gaps(d, partial, cfg);
  EXPECT_NEAR(r.psi[0], 0.4, 1e-12);
  EXPECT_NEAR(r.psi[2], 0.4, 1e-12);
}
