#include "hmmop/omission.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hmmop {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  }
}

}  // namespace

OmissionSpec OmissionSpec::state_dependent(Vector psi) {
  if (psi.size() == 0) throw std::invalid_argument("psi must be non-empty");
  for (Eigen::Index i = 0; i < psi.size(); ++i) check_probability(psi[i], "psi");
  return OmissionSpec(StateDependentOmission{std::move(psi)});
}

OmissionSpec OmissionSpec::constant(double p_c) {
  if (!(p_c > 0.0 && p_c <= 1.0)) throw std::invalid_argument("p_c must lie in (0, 1]");
  return OmissionSpec(ConstantOmission{p_c});
}

OmissionSpec OmissionSpec::per_sentence_normal(double mean, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  check_probability(mean, "mean keep probability");
  return OmissionSpec(PerSentenceNormalOmission{mean, sigma});
}

OmissionSpec OmissionSpec::markov(double p_c, double eps) {
  check_probability(p_c, "p_c");
  check_probability(p_c + eps, "p_c + eps");
  check_probability((1.0 - p_c) + eps, "(1 - p_c) + eps");
  return OmissionSpec(MarkovOmission{p_c, eps});
}

void validate_sentence(const OmittedSentence& s) {
  if (s.N && *s.N < static_cast<int>(s.O.size())) {
    throw std::invalid_argument("full length N is smaller than the number of observations");
  }
  if (!s.W) return;
  const Placement& w = *s.W;
  if (w.size() != s.O.size()) throw std::invalid_argument("|W| differs from |O|");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] < 0) throw std::invalid_argument("W contains a negative position");
    if (k > 0 && w[k] <= w[k - 1]) throw std::invalid_argument("W is not strictly increasing");
    if (s.N && w[k] >= *s.N) throw std::invalid_argument("W contains a position >= N");
  }
}

OmittedSentence apply_omission(const StateSeq& states, const ObsSeq& obs, const OmissionSpec& spec,
                               Rng& rng) {
  if (states.size() != obs.size()) throw std::invalid_argument("states and observations differ in length");
  const int n = static_cast<int>(states.size());
  std::vector<char> kept(states.size(), 0);

  if (spec.is<StateDependentOmission>()) {
    const Vector& psi = spec.as<StateDependentOmission>().psi;
    for (int t = 0; t < n; ++t) {
      if (states[t] >= psi.size()) throw std::out_of_range("state outside psi vector");
      kept[t] = uniform01(rng) < 1.0 - psi[states[t]];
    }
  } else if (spec.is<ConstantOmission>()) {
    const double p = spec.as<ConstantOmission>().p_c;
    for (int t = 0; t < n; ++t) kept[t] = uniform01(rng) < p;
  } else if (spec.is<PerSentenceNormalOmission>()) {
    const auto& o = spec.as<PerSentenceNormalOmission>();
    double p = o.sigma > 0.0 ? sample_normal(o.mean, o.sigma, rng) : o.mean;
    p = std::clamp(p, 0.01, 1.0);
    for (int t = 0; t < n; ++t) kept[t] = uniform01(rng) < p;
  } else {
    const auto& o = spec.as<MarkovOmission>();
    const double stay_seen = o.p_c + o.eps;
    const double seen_after_missing = o.p_c - o.eps;
    bool seen = false;
    for (int t = 0; t < n; ++t) {
      const double p = t == 0 ? o.p_c : (seen ? stay_seen : seen_after_missing);
      seen = uniform01(rng) < p;
      kept[t] = seen;
    }
  }

  OmittedSentence out;
  out.W = Placement{};
  for (int t = 0; t < n; ++t) {
    if (!kept[t]) continue;
    out.O.push_back(obs[t]);
    out.W->push_back(t);
  }
  out.N = n;
  out.X = states;
  return out;
}

double keep_prob(const OmissionSpec& spec, int state) {
  if (spec.is<ConstantOmission>()) return spec.as<ConstantOmission>().p_c;
  if (spec.is<StateDependentOmission>()) {
    const Vector& psi = spec.as<StateDependentOmission>().psi;
    if (state < 0 || state >= psi.size()) throw std::out_of_range("state outside psi vector");
    return 1.0 - psi[state];
  }
  throw std::logic_error("keep_prob is undefined for per-sentence or Markov omission processes");
}

Dataset strip_placements(const Dataset& data, bool keep_length) {
  Dataset out;
  out.reserve(data.size());
  for (const auto& s : data) {
    OmittedSentence c;
    c.O = s.O;
    if (keep_length) c.N = s.N;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace hmmop
