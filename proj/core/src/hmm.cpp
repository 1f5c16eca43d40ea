#include "hmmop/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hmmop {

double safe_log(double p) {
  if (p <= 0.0) return kLogZero;
  return std::log(p);
}

// ---------------------------------------------------------------------------
// TransitionMatrix

bool TransitionMatrix::is_stochastic(const Matrix& m, double tol) {
  if (m.rows() == 0 || m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  if (m.minCoeff() < -1e-12) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

TransitionMatrix::TransitionMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("transition matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v) || v < -1e-12) {
        throw std::invalid_argument("transition matrix entry (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") is negative or not finite");
      }
      if (v < 0.0) entries_(i, j) = 0.0;
    }
    const double s = entries_.row(i).sum();
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument("transition matrix row " + std::to_string(i) +
                                  " sums to " + std::to_string(s));
    }
    entries_.row(i) /= s;
  }
}

// ---------------------------------------------------------------------------
// EmissionModel

EmissionModel EmissionModel::gaussian(Vector means, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw std::invalid_argument("Gaussian emission sd must be positive");
  }
  if (means.size() == 0 || !means.allFinite()) {
    throw std::invalid_argument("Gaussian emission means must be finite and non-empty");
  }
  return EmissionModel(GaussianEmission{std::move(means), sd});
}

EmissionModel EmissionModel::categorical(Matrix probs) {
  if (probs.rows() == 0 || probs.cols() == 0) {
    throw std::invalid_argument("categorical emission table is empty");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).minCoeff() < 0.0 || std::abs(probs.row(i).sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("categorical emission row " + std::to_string(i) +
                                  " is not a probability vector");
    }
    probs.row(i) /= probs.row(i).sum();
  }
  return EmissionModel(CategoricalEmission{std::move(probs)});
}

int EmissionModel::n_states() const {
  if (is_gaussian()) return static_cast<int>(as_gaussian().means.size());
  return static_cast<int>(as_categorical().probs.rows());
}

int EmissionModel::vocabulary_size() const {
  if (is_gaussian()) return 0;
  return static_cast<int>(as_categorical().probs.cols());
}

double EmissionModel::log_density(int state, double obs) const {
  if (state < 0 || state >= n_states()) throw std::out_of_range("state index out of range");
  if (is_gaussian()) {
    const auto& g = as_gaussian();
    const double z = (obs - g.means[state]) / g.sd;
    return -0.5 * z * z - std::log(g.sd * std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
  }
  const auto& c = as_categorical();
  const double sym = std::round(obs);
  if (sym != obs || sym < 0.0 || sym >= static_cast<double>(c.probs.cols())) {
    throw std::out_of_range("categorical symbol outside vocabulary");
  }
  return safe_log(c.probs(state, static_cast<Eigen::Index>(sym)));
}

double EmissionModel::sample(int state, Rng& rng) const {
  if (is_gaussian()) {
    const auto& g = as_gaussian();
    return sample_normal(g.means[state], g.sd, rng);
  }
  const auto& c = as_categorical();
  const Eigen::RowVectorXd row = c.probs.row(state);
  return static_cast<double>(
      sample_categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), rng));
}

int EmissionModel::most_likely_state(double obs) const {
  int best = 0;
  double best_ll = log_density(0, obs);
  for (int s = 1; s < n_states(); ++s) {
    const double ll = log_density(s, obs);
    if (ll > best_ll) {
      best_ll = ll;
      best = s;
    }
  }
  return best;
}

double emission_loglik(const EmissionModel& emission, int state, double obs) {
  return emission.log_density(state, obs);
}

Matrix log_emission_table(const EmissionModel& emission, std::span<const double> obs) {
  const int n = emission.n_states();
  Matrix table(static_cast<Eigen::Index>(obs.size()), n);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (int s = 0; s < n; ++s) {
      table(static_cast<Eigen::Index>(k), s) = emission.log_density(s, obs[k]);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// HmmModel

HmmModel::HmmModel(TransitionMatrix transition, EmissionModel emission, Vector initial)
    : transition_(std::move(transition)), emission_(std::move(emission)), initial_(std::move(initial)) {
  const int n = transition_.size();
  if (emission_.n_states() != n) {
    throw std::invalid_argument("emission model state count does not match transition matrix");
  }
  if (initial_.size() != n || initial_.minCoeff() < 0.0 ||
      std::abs(initial_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("initial distribution must be a probability vector over states");
  }
  initial_ /= initial_.sum();
}

std::pair<StateSeq, ObsSeq> sample_trajectory(const HmmModel& model, int length, Rng& rng) {
  if (length < 1) throw std::invalid_argument("trajectory length must be at least 1");
  StateSeq states(length);
  ObsSeq obs(length);
  const Vector& init = model.initial();
  int s = static_cast<int>(sample_categorical(
      std::span<const double>(init.data(), static_cast<std::size_t>(init.size())), rng));
  const Matrix& T = model.T();
  std::vector<double> row(model.n_states());
  for (int t = 0; t < length; ++t) {
    if (t > 0) {
      for (int j = 0; j < model.n_states(); ++j) row[j] = T(s, j);
      s = static_cast<int>(sample_categorical(row, rng));
    }
    states[t] = s;
    obs[t] = model.emission().sample(s, rng);
  }
  return {std::move(states), std::move(obs)};
}

Vector stationary_distribution(const Matrix& T) {
  const Eigen::Index n = T.rows();
  if (n == 0 || T.cols() != n) throw std::invalid_argument("stationary_distribution needs a square matrix");
  constexpr int kMaxIterations = 100000;
  constexpr double kTolerance = 1e-12;
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::RowVectorXd next = 0.5 * (pi + pi * T);
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi = next;
    if (change < kTolerance) return pi.transpose();
  }
  throw std::runtime_error("stationary distribution: power iteration did not converge within " +
                           std::to_string(kMaxIterations) + " iterations");
}

double l1_transition_distance(const Matrix& a, const Matrix& b, const std::optional<Vector>& weights) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("l1_transition_distance: shape mismatch");
  }
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  Vector w = weights ? *weights : Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw std::invalid_argument("l1_transition_distance: weight length mismatch");
  w /= w.sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += w[i] * (a.row(i) - b.row(i)).lpNorm<1>();
  return total;
}

std::vector<int> solve_assignment(const Matrix& cost) {
  // Shortest augmenting path formulation with row/column potentials.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

std::vector<int> align_states(const HmmModel& learned, const HmmModel& truth) {
  const int n = learned.n_states();
  if (truth.n_states() != n) throw std::invalid_argument("align_states: state counts differ");
  const auto& le = learned.emission();
  const auto& te = truth.emission();
  if (le.is_gaussian() != te.is_gaussian()) {
    throw std::invalid_argument("align_states: emission variants differ");
  }
  Matrix cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (le.is_gaussian()) {
        cost(i, j) = std::abs(le.as_gaussian().means[i] - te.as_gaussian().means[j]);
      } else {
        const auto& a = le.as_categorical().probs;
        const auto& b = te.as_categorical().probs;
        if (a.cols() != b.cols()) throw std::invalid_argument("align_states: vocabulary sizes differ");
        cost(i, j) = 0.5 * (a.row(i) - b.row(j)).lpNorm<1>();
      }
    }
  }
  return solve_assignment(cost);
}

Matrix permute_matrix(const Matrix& m, std::span<const int> perm) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(perm[i], perm[j]) = m(i, j);
    }
  }
  return out;
}

Vector permute_vector(const Vector& v, std::span<const int> perm) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[perm[i]] = v[i];
  return out;
}

HmmModel permute_states(const HmmModel& model, std::span<const int> perm) {
  const auto& e = model.emission();
  EmissionModel emission = [&] {
    if (e.is_gaussian()) {
      return EmissionModel::gaussian(permute_vector(e.as_gaussian().means, perm), e.as_gaussian().sd);
    }
    const Matrix& probs = e.as_categorical().probs;
    Matrix out(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) out.row(perm[i]) = probs.row(i);
    return EmissionModel::categorical(std::move(out));
  }();
  return HmmModel(TransitionMatrix(permute_matrix(model.T(), perm)), std::move(emission),
                  permute_vector(model.initial(), perm));
}

}  // namespace hmmop
