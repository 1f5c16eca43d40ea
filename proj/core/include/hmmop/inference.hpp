#pragma once

#include <vector>

#include "hmmop/gaps.hpp"
#include "hmmop/hmm.hpp"

namespace hmmop {

// Strictly increasing W maximizing sum_k log p(O_k | X_{w_k}) with
// k <= w_k <= N - K + k. When psi is non-empty each node also carries
// log((1 - psi) / psi) of its state, which makes the objective the joint
// log-likelihood up to a W-independent constant. Ties pick the lexicographically
// smallest W.
Placement longest_path_W(const StateSeq& X, const ObsSeq& O, const EmissionModel& emission,
                         const Vector& psi = Vector());

// Exact multi-choice knapsack over gap lengths 0..s_max. Items, in order: the
// leading gap before X_proxy[0], the K - 1 gaps between consecutive proxies and
// the trailing gap after X_proxy[K-1]; each is scored by its normalized log
// probability and their sum may not exceed N - K. Returns K + 1 gaps; ties
// pick the lexicographically smallest profile. `initial` defaults to uniform.
GapSeq knapsack_init(const Matrix& T, const StateSeq& X_proxy, int N, const Vector& psi, int s_max,
                     const Vector& initial = Vector());

// Maximum-probability full-length X given W under the joint likelihood with
// psi factors (Viterbi). Ties pick the smaller state.
StateSeq decode_known_w(const HmmModel& model, const ObsSeq& O, const Placement& W, int N, const Vector& psi);

struct LabelResult {
  StateSeq labels;  // X at the positions of W
  StateSeq X;
  Placement W;
  std::vector<double> objective;  // joint log-likelihood after each half-step
  int rounds = 0;
  bool converged = false;
};

// Alternates decode_known_w and longest_path_W from the knapsack start until W
// stops changing or max_rounds is reached; returns the best state seen.
LabelResult label_sequence(const HmmModel& model, const ObsSeq& O, int N, const Vector& psi, int max_rounds,
                           int s_max = 0);

}  // namespace hmmop
