#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "hmmop/hmm.hpp"

namespace hmmop {

// Deletion processes. Psi is always an *omission* probability; a position
// emitted from state s survives with probability 1 - psi(s).
struct StateDependentOmission {
  Vector psi;
};

struct ConstantOmission {
  double p_c = 1.0;  // keep probability, psi(s) = 1 - p_c
};

// A keep probability per sentence, p_c ~ Normal(mean, sigma) clamped to [0.01, 1].
struct PerSentenceNormalOmission {
  double mean = 0.5;
  double sigma = 0.0;
};

// Two-state seen/missing chain. P(seen | seen) = p_c + eps,
// P(missing | missing) = (1 - p_c) + eps; the first position is seen with
// probability p_c. eps = 0 reduces to ConstantOmission{p_c}.
struct MarkovOmission {
  double p_c = 0.5;
  double eps = 0.0;
};

class OmissionSpec {
 public:
  using Variant = std::variant<StateDependentOmission, ConstantOmission,
                               PerSentenceNormalOmission, MarkovOmission>;

  static OmissionSpec state_dependent(Vector psi);
  static OmissionSpec constant(double p_c);
  static OmissionSpec per_sentence_normal(double mean, double sigma);
  static OmissionSpec markov(double p_c, double eps);

  const Variant& variant() const { return v_; }
  template <typename T>
  bool is() const { return std::holds_alternative<T>(v_); }
  template <typename T>
  const T& as() const { return std::get<T>(v_); }

 private:
  explicit OmissionSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

struct OmittedSentence {
  ObsSeq O;
  std::optional<Placement> W;
  std::optional<int> N;
  // Full latent state sequence, kept only for evaluation.
  std::optional<StateSeq> X;
};

using Dataset = std::vector<OmittedSentence>;

// Throws std::invalid_argument when W is not strictly increasing within [0, N)
// or its length differs from |O|.
void validate_sentence(const OmittedSentence& s);

OmittedSentence apply_omission(const StateSeq& states, const ObsSeq& obs,
                               const OmissionSpec& spec, Rng& rng);

// 1 - psi(state). Only defined for StateDependent and Constant processes.
double keep_prob(const OmissionSpec& spec, int state);

// Copies of the dataset with ground truth removed.
Dataset strip_placements(const Dataset& data, bool keep_length);

}  // namespace hmmop
