#pragma once

#include <functional>
#include <optional>

#include "hmmop/hmm.hpp"
#include "hmmop/omission.hpp"

namespace hmmop {

// Closed-form omission algebra for the ignorable case psi(s) = 1 - p_c.

// p_c * T * [I - (1 - p_c) T]^{-1}
Matrix omit_transform(const Matrix& T, double p_c);

// p_c / (1 - (1 - p_c)^{order+1}) * T * sum_{n=0}^{order} [(1 - p_c) T]^n
Matrix omit_transform_truncated(const Matrix& T, double p_c, int order);

struct InversionResult {
  Matrix transition;           // rows sum to 1; entries may be negative
  double most_negative = 0.0;  // min(0, smallest entry) before any projection
  bool projected = false;
  bool has_negative() const { return most_negative < 0.0; }
  // Usable as a transition matrix: no entry below -tol, or projected.
  bool stochastic(double tol = 1e-12) const { return projected || most_negative >= -tol; }
};

// [p_c I + (1 - p_c) T_r]^{-1} T_r. With project = true, rows with negative
// entries are replaced by their Euclidean projection onto the simplex.
InversionResult invert_omit_transform(const Matrix& T_r, double p_c, bool project = false);

// Closed form of invert_omit_transform(omit_transform(T, p_q), p_c):
// [(p_c / p_q) T^{-1} + (1 - p_c / p_q) I]^{-1}.
Matrix composed_mismatch(const Matrix& T, double p_q, double p_c);

// Recovers the keep probability p_q that produced a composed matrix, using
// d/dp_c [composed(p_c)]^{-1} = (1 / p_q)(T^{-1} - I). The derivative is
// taken by central differences (step 1e-4) at p_c = 0.5 and p_c = 0.8 and p_q
// is the least-squares solution over all entries.
double estimate_keep_prob(const Matrix& T, const std::function<Matrix(double)>& mismatch_fn);

// Limit of the naive pair-count estimate when a non-hidden chain is thinned
// by MarkovOmission{p_c, eps}; rows renormalized.
Matrix naive_limit_markov_omission(const Matrix& T, double p_c, double eps);

// Euclidean projection of each row onto the probability simplex.
Matrix project_rows_to_simplex(const Matrix& m);

struct SemiAnalyticResult {
  HmmModel naive;             // the fit of the thinned chain
  InversionResult inversion;  // its transition matrix pushed through the inverse transform
  // Present when the inversion is stochastic (or was projected).
  std::optional<HmmModel> model;
};

// Fits the observed sequences as if gapless with hmm_fit, then undoes the
// omission of a constant keep probability p_c.
SemiAnalyticResult semi_analytic_reconstruct(const Dataset& data, double p_c,
                                             const std::function<HmmModel(const Dataset&)>& hmm_fit,
                                             bool project = false);

}  // namespace hmmop
