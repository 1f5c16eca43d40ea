#include "hmmop/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "placement_engine.hpp"

namespace hmmop {

namespace {

// log p(O_k | s) + log(1 - psi(s)) for every (k, s).
Matrix component_weights(const ObsSeq& O, const EmissionModel& emission, const Vector& psi) {
  Matrix table = log_emission_table(emission, O);
  for (Eigen::Index s = 0; s < table.cols(); ++s) table.col(s).array() += safe_log(1.0 - psi[s]);
  return table;
}

int draw_component(int k, const Placement& W, int N, const StateSeq& X, const Matrix& weights, Rng& rng) {
  const int K = static_cast<int>(W.size());
  const int lo = k == 0 ? -1 : W[k - 1];
  const int hi = k == K - 1 ? N : W[k + 1];
  const int slots = hi - lo - 1;
  if (slots == 1) return lo + 1;
  std::vector<double> lw(slots);
  for (int j = 0; j < slots; ++j) lw[j] = weights(k, X[lo + 1 + j]);
  if (*std::max_element(lw.begin(), lw.end()) <= kLogZero / 2) return W[k];
  return lo + 1 + static_cast<int>(sample_log_categorical(lw, rng));
}

double log_weight(const Placement& W, const StateSeq& X, const Matrix& weights) {
  double total = 0.0;
  for (std::size_t k = 0; k < W.size(); ++k) total += weights(static_cast<Eigen::Index>(k), X[W[k]]);
  return total;
}

bool accept(double log_alpha, Rng& rng) { return log_alpha >= 0.0 || std::log(uniform01(rng)) <= log_alpha; }

void check_inputs(const Placement& W, const StateSeq& X, const ObsSeq& O) {
  if (W.size() != O.size()) throw std::invalid_argument("|W| differs from |O|");
  const int N = static_cast<int>(X.size());
  for (std::size_t k = 0; k < W.size(); ++k) {
    if (W[k] < 0 || W[k] >= N || (k > 0 && W[k] <= W[k - 1])) {
      throw std::invalid_argument("W must be strictly increasing within [0, N)");
    }
  }
}

}  // namespace

int sample_w_component(int k, const Placement& W, const StateSeq& X, const ObsSeq& O,
                       const EmissionModel& emission, const Vector& psi, Rng& rng) {
  check_inputs(W, X, O);
  if (k < 0 || k >= static_cast<int>(W.size())) throw std::out_of_range("component index out of range");
  return draw_component(k, W, static_cast<int>(X.size()), X, component_weights(O, emission, psi), rng);
}

double placement_log_weight(const Placement& W, const StateSeq& X, const ObsSeq& O,
                            const EmissionModel& emission, const Vector& psi) {
  check_inputs(W, X, O);
  return log_weight(W, X, component_weights(O, emission, psi));
}

Placement mh_sweep_W(const Placement& W, const StateSeq& X, const ObsSeq& O, const EmissionModel& emission,
                     const Vector& psi, int inner_steps, AcceptanceRule rule, Rng& rng, SweepStats* stats) {
  check_inputs(W, X, O);
  if (inner_steps < 1) throw std::invalid_argument("inner_steps must be at least 1");
  const int K = static_cast<int>(W.size());
  const int N = static_cast<int>(X.size());
  if (K == 0 || K == N) return W;
  const Matrix weights = component_weights(O, emission, psi);

  Placement current = W;
  for (int step = 0; step < inner_steps; ++step) {
    if (rule == AcceptanceRule::per_component) {
      for (int k = 0; k < K; ++k) {
        const int proposal = draw_component(k, current, N, X, weights, rng);
        const double log_alpha = weights(k, X[proposal]) - weights(k, X[current[k]]);
        const bool ok = accept(log_alpha, rng);
        if (ok) current[k] = proposal;
        if (stats) {
          ++stats->proposals;
          stats->accepted += ok;
        }
      }
      continue;
    }
    Placement proposal = current;
    for (int k = 0; k < K; ++k) proposal[k] = draw_component(k, proposal, N, X, weights, rng);
    bool ok = true;
    if (rule == AcceptanceRule::full_product) {
      ok = accept(log_weight(proposal, X, weights) - log_weight(current, X, weights), rng);
    }
    if (ok) current = std::move(proposal);
    if (stats) {
      ++stats->proposals;
      stats->accepted += ok;
    }
  }
  return current;
}

Placement random_placement(int K, int N, Rng& rng) {
  if (K < 0 || K > N) throw std::invalid_argument("cannot place " + std::to_string(K) + " observations in " +
                                                  std::to_string(N) + " positions");
  // Selection sampling: each position is taken with probability needed / remaining.
  Placement w;
  w.reserve(K);
  int needed = K;
  for (int t = 0; t < N && needed > 0; ++t) {
    if (uniform01(rng) * (N - t) < needed) {
      w.push_back(t);
      --needed;
    }
  }
  return w;
}

FitResult fit_matching(const Dataset& data, const PsiInput& psi, const GibbsConfig& config) {
  if (!psi.all_known() && config.psi_mode == PsiMode::fixed) {
    throw std::invalid_argument("partially known psi requires psi_mode sample-missing or sample-all");
  }
  std::vector<int> lengths;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].N) throw std::invalid_argument("sentence " + std::to_string(i) + " has no full length N");
    if (*data[i].N < static_cast<int>(data[i].O.size())) {
      throw std::invalid_argument("sentence " + std::to_string(i) + " has N < |O|");
    }
  }
  const detail::Sentences sentences = detail::collect_sentences(data);
  for (int src : sentences.source) lengths.push_back(*data[src].N);
  return detail::run_placement_chain(sentences, {}, lengths, psi, config, detail::PlacementMode::matching);
}

}  // namespace hmmop
