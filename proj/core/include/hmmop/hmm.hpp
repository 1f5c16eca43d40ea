#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hmmop/random.hpp"

namespace hmmop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using StateSeq = std::vector<int>;
// Observations are reals for Gaussian emissions and integer-valued symbol
// indices for categorical emissions.
using ObsSeq = std::vector<double>;
// Strictly increasing positions of the surviving observations in the full
// latent sequence.
using Placement = std::vector<int>;

// Finite stand-in for log(0). Sums of a few thousand of these stay finite.
inline constexpr double kLogZero = -1e300;

double safe_log(double p);

// Row-stochastic square matrix. Construction validates rows to 1e-9 and
// entries to -1e-12, then renormalizes so stored rows sum to 1 within 1e-12.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(Matrix entries);

  static bool is_stochastic(const Matrix& m, double tol = 1e-9);

  const Matrix& matrix() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }
  double operator()(int from, int to) const { return entries_(from, to); }

 private:
  Matrix entries_;
};

struct GaussianEmission {
  Vector means;
  double sd = 1.0;
};

struct CategoricalEmission {
  Matrix probs;  // n_states x vocabulary
};

class EmissionModel {
 public:
  static EmissionModel gaussian(Vector means, double sd);
  static EmissionModel categorical(Matrix probs);

  bool is_gaussian() const { return std::holds_alternative<GaussianEmission>(params_); }
  const GaussianEmission& as_gaussian() const { return std::get<GaussianEmission>(params_); }
  const CategoricalEmission& as_categorical() const {
    return std::get<CategoricalEmission>(params_);
  }

  int n_states() const;
  int vocabulary_size() const;  // 0 for Gaussian

  // log p(obs | state). Categorical zero mass yields kLogZero; an out of
  // vocabulary symbol throws std::out_of_range.
  double log_density(int state, double obs) const;
  double sample(int state, Rng& rng) const;
  int most_likely_state(double obs) const;

 private:
  explicit EmissionModel(std::variant<GaussianEmission, CategoricalEmission> p)
      : params_(std::move(p)) {}
  std::variant<GaussianEmission, CategoricalEmission> params_;
};

double emission_loglik(const EmissionModel& emission, int state, double obs);

// K x n table of log p(O_k | state).
Matrix log_emission_table(const EmissionModel& emission, std::span<const double> obs);

class HmmModel {
 public:
  HmmModel(TransitionMatrix transition, EmissionModel emission, Vector initial);

  int n_states() const { return transition_.size(); }
  const TransitionMatrix& transition() const { return transition_; }
  const Matrix& T() const { return transition_.matrix(); }
  const EmissionModel& emission() const { return emission_; }
  const Vector& initial() const { return initial_; }

 private:
  TransitionMatrix transition_;
  EmissionModel emission_;
  Vector initial_;
};

std::pair<StateSeq, ObsSeq> sample_trajectory(const HmmModel& model, int length, Rng& rng);

// Power iteration on the lazy chain (I + T) / 2 from the uniform vector;
// tolerance 1e-12 in L1, at most 1e5 iterations.
Vector stationary_distribution(const Matrix& T);

// Weighted mean over rows of the row-wise L1 distance. Uniform weights
// unless given. Result lies in [0, 2] for stochastic inputs.
double l1_transition_distance(const Matrix& a, const Matrix& b,
                              const std::optional<Vector>& weights = std::nullopt);

// Exact minimum-cost assignment (Hungarian method). Returns assignment[row] = column.
std::vector<int> solve_assignment(const Matrix& cost);

// perm[learned_state] = truth_state, minimizing |mean difference| (Gaussian)
// or total variation between emission rows (categorical).
std::vector<int> align_states(const HmmModel& learned, const HmmModel& truth);

// Relabels a matrix so that entry (perm[i], perm[j]) holds m(i, j).
Matrix permute_matrix(const Matrix& m, std::span<const int> perm);
Vector permute_vector(const Vector& v, std::span<const int> perm);
HmmModel permute_states(const HmmModel& model, std::span<const int> perm);

}  // namespace hmmop
