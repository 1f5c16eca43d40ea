#pragma once

#include <cstdint>
#include <vector>

#include "hmmop/gibbs.hpp"

namespace hmmop {

// d[0] is the leading gap before the first observation; d[k] for k >= 1 counts
// the omitted positions between observations k - 1 and k. There is no
// trailing gap: the implied full length is sum(d) + K.
using GapSeq = std::vector<int>;

// M[i, j] = T[i, j] psi(j). For d = 0..s_max:
//   M_powers[d]  = M^d
//   MT_powers[d] = M^d T, so MT_powers[d](a, b) is the total weight of all
//                  paths a -> (d omitted states) -> b.
//   leading[d]   = weight of d omitted states before a first kept state b:
//                  leading[0] = initial, leading[d] = ((initial o psi)^T M^{d-1} T)^T.
struct GapTables {
  std::vector<Matrix> M_powers;
  std::vector<Matrix> MT_powers;
  std::vector<Vector> leading;
  Vector psi;
  int s_max = 0;
  std::uint64_t version = 0;

  int n_states() const { return static_cast<int>(MT_powers.front().rows()); }
};

// `initial` defaults to uniform when empty.
GapTables build_gap_tables(const Matrix& T, const Vector& psi, int s_max, const Vector& initial = Vector(),
                           std::uint64_t version = 0);

// Smallest S with (max psi)^S < 1e-8, clamped to [5, 60].
int default_s_max(const Vector& psi);

// Normalized [MT_powers[d](a, b)]_{d = 0..s_max}. Throws std::domain_error naming
// (a, b) when every entry is zero.
Vector gap_distribution(int a, int b, const GapTables& tables);
Vector leading_gap_distribution(int b, const GapTables& tables);

int sample_gap(int a, int b, const GapTables& tables, Rng& rng);
int sample_leading_gap(int b, const GapTables& tables, Rng& rng);

// Condensed chain over the K observed positions given the gaps: the initial
// weight is leading[d_0](b) (1 - psi(b)) p(O_0 | b) and the step-k kernel is
// MT_powers[d_k](a, b) (1 - psi(b)) p(O_k | b).
StateSeq sample_x_walk(const GapTables& tables, const GapSeq& d, const ObsSeq& O, const EmissionModel& emission,
                       Rng& rng);

// d_k | X_walk for every k, drawn independently.
GapSeq sample_gaps(const GapTables& tables, const StateSeq& x_walk, Rng& rng);

struct PlacementFromGaps {
  Placement W;
  int N = 0;
};
// w_k = sum_{j <= k} d_j + k, N = sum(d) + K.
PlacementFromGaps placement_from_gaps(const GapSeq& d);
GapSeq gaps_from_placement(const Placement& W);

// Work counters for the complexity check: dense products issued while building
// tables versus scalar kernel reads issued by per-sentence sampling.
struct GapWorkCounts {
  long long table_matrix_products = 0;
  long long sentence_kernel_reads = 0;
};
GapWorkCounts gap_work_counts();
void reset_gap_work_counts();

// Gibbs sampler over (mu, T, X_T, X_walk, d[, psi]) that never uses N or W.
// Sentences with empty O are skipped and counted.
FitResult fit_gaps(const Dataset& data, const PsiInput& psi, const GibbsConfig& config);

}  // namespace hmmop
