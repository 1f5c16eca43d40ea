#pragma once

#include "hmmop/gibbs.hpp"

namespace hmmop {

// Draws w_k from p(O_k | X_j) (1 - psi(X_j)) restricted to the open interval
// (w_{k-1}, w_{k+1}), with w_{-1} = -1 and w_K = N = |X|. When no slot has
// mass the current value is kept.
int sample_w_component(int k, const Placement& W, const StateSeq& X, const ObsSeq& O,
                       const EmissionModel& emission, const Vector& psi, Rng& rng);

struct SweepStats {
  int proposals = 0;
  int accepted = 0;
};

// inner_steps rounds of: sweep every component to build W*, then accept per
// the acceptance rule.
Placement mh_sweep_W(const Placement& W, const StateSeq& X, const ObsSeq& O, const EmissionModel& emission,
                     const Vector& psi, int inner_steps, AcceptanceRule rule, Rng& rng,
                     SweepStats* stats = nullptr);

// Log of prod_k p(O_k | X_{w_k}) (1 - psi(X_{w_k})).
double placement_log_weight(const Placement& W, const StateSeq& X, const ObsSeq& O,
                            const EmissionModel& emission, const Vector& psi);

// Uniformly random strictly increasing K-subset of [0, N).
Placement random_placement(int K, int N, Rng& rng);

// Gibbs sampler over (mu, T, W, X[, psi]) with every sentence's full length N
// known. Throws std::invalid_argument naming the first sentence without N or
// with N < |O|.
FitResult fit_matching(const Dataset& data, const PsiInput& psi, const GibbsConfig& config);

}  // namespace hmmop
