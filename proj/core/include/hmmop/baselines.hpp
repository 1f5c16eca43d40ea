#pragma once

#include "hmmop/gibbs.hpp"

namespace hmmop {

// Treats every O as gapless: W = [0..K-1], N = K, psi = 0. Runs through the
// same chain as fit_known_w, so the two agree exactly on such data.
FitResult fit_naive(const Dataset& data, const GibbsConfig& config);

// Placements frozen at the supplied W; requires W and N on every sentence.
FitResult fit_known_w(const Dataset& data, const PsiInput& psi, const GibbsConfig& config);

// Placement corruptions that feed fit_known_w.

// Uniform random K-subset of [0, N).
Placement random_w(const OmittedSentence& s, Rng& rng);

// Each w_k moves to a uniformly chosen position in (new w_{k-1}, w_{k+1}) that
// holds the same true state. Requires the sentence's X.
Placement equivalent_w(const OmittedSentence& s, Rng& rng);

// Keeps the runs of adjacent positions and their order, and redraws the gaps
// between runs uniformly (at least one position between runs).
Placement consecutive_w(const OmittedSentence& s, Rng& rng);

enum class WTransform { random, equivalent, consecutive };
Dataset transform_placements(const Dataset& data, WTransform kind, Rng& rng);

}  // namespace hmmop
