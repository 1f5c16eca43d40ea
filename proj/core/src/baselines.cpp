#include "hmmop/baselines.hpp"

#include <stdexcept>
#include <string>

#include "hmmop/matching.hpp"
#include "placement_engine.hpp"

namespace hmmop {

namespace {

void require_truth(const OmittedSentence& s) {
  if (!s.W || !s.N) throw std::invalid_argument("sentence carries no ground-truth W and N");
  validate_sentence(s);
}

}  // namespace

FitResult fit_naive(const Dataset& data, const GibbsConfig& config) {
  Dataset gapless;
  gapless.reserve(data.size());
  for (const OmittedSentence& s : data) {
    const int K = static_cast<int>(s.O.size());
    gapless.push_back({s.O, identity_placement(K), K, std::nullopt});
  }
  GibbsConfig c = config;
  c.psi_mode = PsiMode::fixed;
  return fit_known_w(gapless, PsiInput::full(Vector::Zero(config.resolved_states())), c);
}

FitResult fit_known_w(const Dataset& data, const PsiInput& psi, const GibbsConfig& config) {
  if (!psi.all_known() && config.psi_mode == PsiMode::fixed) {
    throw std::invalid_argument("partially known psi requires psi_mode sample-missing or sample-all");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      require_truth(data[i]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("sentence " + std::to_string(i) + ": " + e.what());
    }
  }
  const detail::Sentences sentences = detail::collect_sentences(data);
  std::vector<Placement> placements;
  std::vector<int> lengths;
  for (int src : sentences.source) {
    placements.push_back(*data[src].W);
    lengths.push_back(*data[src].N);
  }
  return detail::run_placement_chain(sentences, std::move(placements), lengths, psi, config,
                                     detail::PlacementMode::frozen);
}

Placement random_w(const OmittedSentence& s, Rng& rng) {
  require_truth(s);
  return random_placement(static_cast<int>(s.O.size()), *s.N, rng);
}

Placement equivalent_w(const OmittedSentence& s, Rng& rng) {
  require_truth(s);
  if (!s.X) throw std::invalid_argument("equivalent placements need the true state sequence");
  const StateSeq& x = *s.X;
  const Placement& w = *s.W;
  if (static_cast<int>(x.size()) != *s.N) throw std::invalid_argument("|X| differs from N");
  const int K = static_cast<int>(w.size());
  Placement out(K);
  int previous = -1;
  std::vector<int> candidates;
  for (int k = 0; k < K; ++k) {
    const int upper = k + 1 < K ? w[k + 1] : *s.N;
    candidates.clear();
    for (int j = previous + 1; j < upper; ++j) {
      if (x[j] == x[w[k]]) candidates.push_back(j);
    }
    // w[k] itself always qualifies because previous < w[k].
    out[k] = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    previous = out[k];
  }
  return out;
}

Placement consecutive_w(const OmittedSentence& s, Rng& rng) {
  require_truth(s);
  const Placement& w = *s.W;
  const int K = static_cast<int>(w.size());
  if (K == 0) return {};
  std::vector<int> runs{1};
  for (int k = 1; k < K; ++k) {
    if (w[k] == w[k - 1] + 1) {
      ++runs.back();
    } else {
      runs.push_back(1);
    }
  }
  const int B = static_cast<int>(runs.size());
  // Free positions beyond the mandatory single gap between runs, spread over
  // B + 1 slots (leading, between runs, trailing) by stars and bars.
  const int free = *s.N - K - (B - 1);
  std::vector<int> bars = random_placement(B, free + B, rng);
  std::vector<int> extra(B + 1);
  int last = -1;
  for (int b = 0; b < B; ++b) {
    extra[b] = bars[b] - last - 1;
    last = bars[b];
  }
  extra[B] = free + B - last - 1;

  Placement out;
  out.reserve(K);
  int position = extra[0];
  for (int b = 0; b < B; ++b) {
    if (b > 0) position += 1 + extra[b];
    for (int r = 0; r < runs[b]; ++r) out.push_back(position++);
  }
  return out;
}

Dataset transform_placements(const Dataset& data, WTransform kind, Rng& rng) {
  Dataset out = data;
  for (OmittedSentence& s : out) {
    switch (kind) {
      case WTransform::random: s.W = random_w(s, rng); break;
      case WTransform::equivalent: s.W = equivalent_w(s, rng); break;
      case WTransform::consecutive: s.W = consecutive_w(s, rng); break;
    }
  }
  return out;
}

}  // namespace hmmop
