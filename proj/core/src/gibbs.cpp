#include "hmmop/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "placement_engine.hpp"

namespace hmmop {

PsiInput PsiInput::constant_keep(int n_states, double p_c) {
  if (n_states <= 0) throw std::invalid_argument("n_states must be positive");
  if (!(p_c > 0.0 && p_c <= 1.0)) throw std::invalid_argument("p_c must lie in (0, 1]");
  return full(Vector::Constant(n_states, 1.0 - p_c));
}

PsiInput PsiInput::full(Vector psi) {
  std::vector<bool> known(static_cast<std::size_t>(psi.size()), true);
  return partial(std::move(psi), std::move(known));
}

PsiInput PsiInput::partial(Vector psi, std::vector<bool> known) {
  if (psi.size() == 0) throw std::invalid_argument("psi must be non-empty");
  if (static_cast<Eigen::Index>(known.size()) != psi.size()) {
    throw std::invalid_argument("psi and its known mask differ in length");
  }
  for (Eigen::Index s = 0; s < psi.size(); ++s) {
    if (!(psi[s] >= 0.0 && psi[s] <= 1.0)) throw std::invalid_argument("psi entries must lie in [0, 1]");
  }
  return PsiInput{std::move(psi), std::move(known)};
}

bool PsiInput::all_known() const {
  return std::all_of(known.begin(), known.end(), [](bool b) { return b; });
}

void GibbsConfig::validate() const {
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be at least 1");
  if (burn_in < 0 || burn_in >= n_iterations) throw std::invalid_argument("burn_in must lie in [0, n_iterations)");
  if (thinning < 1) throw std::invalid_argument("thinning must be at least 1");
  if (mh_inner_steps < 1) throw std::invalid_argument("mh_inner_steps must be at least 1");
  if (s_max < 0) throw std::invalid_argument("s_max must be non-negative");
  if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("dirichlet_alpha must be positive");
  if (!(psi_prior_a > 0.0 && psi_prior_b > 0.0)) throw std::invalid_argument("psi prior must be positive");
  if (!(emission_sd > 0.0)) throw std::invalid_argument("emission_sd must be positive");
  if (vocabulary < 0) throw std::invalid_argument("vocabulary must be non-negative");
  if (!(emission_alpha > 0.0)) throw std::invalid_argument("emission_alpha must be positive");
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
  if (resolved_states() <= 0) throw std::invalid_argument("n_states must be positive");
  if (fixed_emission && fixed_emission->n_states() != resolved_states()) {
    throw std::invalid_argument("fixed emission has the wrong number of states");
  }
  if (fixed_model && fixed_model->n_states() != resolved_states()) {
    throw std::invalid_argument("fixed model has the wrong number of states");
  }
}

int GibbsConfig::resolved_states() const {
  if (n_states > 0) return n_states;
  if (fixed_model) return fixed_model->n_states();
  if (fixed_emission) return fixed_emission->n_states();
  return 0;
}

// ---------------------------------------------------------------------------
// Gaussian mixture initialization

namespace {

struct Mixture {
  std::vector<double> weight, mean, var;
  double loglik = -std::numeric_limits<double>::infinity();
};

double log_normal(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + z * z / var);
}

std::vector<double> seed_quantiles(const std::vector<double>& sorted, int k) {
  std::vector<double> means(k);
  for (int j = 0; j < k; ++j) {
    const double q = (j + 0.5) / k;
    means[j] = sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(q * sorted.size()))];
  }
  return means;
}

std::vector<double> seed_kmeanspp(std::span<const double> x, int k, Rng& rng) {
  std::vector<double> means;
  means.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
  std::vector<double> d2(x.size());
  while (static_cast<int>(means.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double m : means) best = std::min(best, (x[i] - m) * (x[i] - m));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      means.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
    } else {
      means.push_back(x[sample_categorical(d2, rng)]);
    }
  }
  return means;
}

std::optional<Mixture> run_em(std::span<const double> x, std::vector<double> means, double var_floor,
                              double var_init) {
  const int k = static_cast<int>(means.size());
  const std::size_t n = x.size();
  Mixture m{std::vector<double>(k, 1.0 / k), std::move(means), std::vector<double>(k, var_init), 0.0};
  std::vector<double> resp(n * k);
  double previous = -std::numeric_limits<double>::infinity();
  constexpr int kMaxIter = 200;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double v = std::log(m.weight[j]) + log_normal(x[i], m.mean[j], m.var[j]);
        resp[i * k + j] = v;
        mx = std::max(mx, v);
      }
      double z = 0.0;
      for (int j = 0; j < k; ++j) z += (resp[i * k + j] = std::exp(resp[i * k + j] - mx));
      for (int j = 0; j < k; ++j) resp[i * k + j] /= z;
      ll += mx + std::log(z);
    }
    m.loglik = ll;
    for (int j = 0; j < k; ++j) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + j];
        sx += resp[i * k + j] * x[i];
      }
      if (nk < 1e-8) return std::nullopt;
      const double mean = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + j] * (x[i] - mean) * (x[i] - mean);
      m.weight[j] = nk / static_cast<double>(n);
      m.mean[j] = mean;
      m.var[j] = std::max(sv / nk, var_floor);
    }
    if (std::abs(ll - previous) <= 1e-9 * std::max(1.0, std::abs(ll))) break;
    previous = ll;
  }
  return m;
}

}  // namespace

EmissionPriorInit init_emission_priors(std::span<const double> observations, int n_states, Rng& rng) {
  if (n_states <= 0) throw std::invalid_argument("n_states must be positive");
  if (observations.empty()) throw std::invalid_argument("no observations to initialize emission priors");
  std::vector<double> sorted(observations.begin(), observations.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  sorted.assign(observations.begin(), observations.end());
  std::sort(sorted.begin(), sorted.end());

  EmissionPriorInit out{Vector(n_states), Vector(n_states), Vector(n_states)};
  auto kappa_of = [](double range) { return range > 0.0 ? 1.0 / (range * range) : 1.0; };

  if (distinct < n_states) {
    out.xi.setConstant((lo + hi) / 2.0);
    out.kappa.setConstant(kappa_of(hi - lo));
    // Identical locations; a prior draw breaks the symmetry between states.
    for (int s = 0; s < n_states; ++s) out.mu[s] = sample_normal(out.xi[s], 1.0 / std::sqrt(out.kappa[s]), rng);
  } else {
    const double range = hi - lo;
    const double var_floor = std::max(1e-10, 1e-8 * range * range);
    const double var_init = std::max(var_floor, range * range / (4.0 * n_states * n_states));
    constexpr int kRestarts = 10;
    std::optional<Mixture> best;
    for (int r = 0; r < kRestarts; ++r) {
      std::vector<double> seeds = r == 0 ? seed_quantiles(sorted, n_states)
                                         : seed_kmeanspp(observations, n_states, rng);
      auto fit = run_em(observations, std::move(seeds), var_floor, var_init);
      if (fit && (!best || fit->loglik > best->loglik)) best = std::move(fit);
    }
    if (!best) throw std::runtime_error("Gaussian mixture initialization degenerate after 10 restarts");

    std::vector<int> order(n_states);
    for (int j = 0; j < n_states; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return best->mean[a] < best->mean[b]; });

    std::vector<double> cmin(n_states, std::numeric_limits<double>::infinity());
    std::vector<double> cmax(n_states, -std::numeric_limits<double>::infinity());
    for (double x : observations) {
      int arg = 0;
      double top = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n_states; ++j) {
        const double v = std::log(best->weight[j]) + log_normal(x, best->mean[j], best->var[j]);
        if (v > top) top = v, arg = j;
      }
      cmin[arg] = std::min(cmin[arg], x);
      cmax[arg] = std::max(cmax[arg], x);
    }
    for (int rank = 0; rank < n_states; ++rank) {
      const int j = order[rank];
      out.mu[rank] = best->mean[j];
      if (cmin[j] > cmax[j]) {
        // No point won the hard assignment; fall back to the component's own spread.
        out.xi[rank] = best->mean[j];
        out.kappa[rank] = 1.0 / best->var[j];
      } else {
        out.xi[rank] = (cmin[j] + cmax[j]) / 2.0;
        out.kappa[rank] = kappa_of(cmax[j] - cmin[j]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global conditionals

Matrix transition_counts(std::span<const StateSeq> xs, int n_states) {
  Matrix counts = Matrix::Zero(n_states, n_states);
  for (const StateSeq& x : xs) {
    for (std::size_t t = 1; t < x.size(); ++t) counts(x[t - 1], x[t]) += 1.0;
  }
  return counts;
}

Matrix sample_T(std::span<const StateSeq> xs, int n_states, double alpha, Rng& rng) {
  const Matrix counts = transition_counts(xs, n_states);
  Matrix out(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    const Vector a = counts.row(i).transpose().array() + alpha;
    out.row(i) = sample_dirichlet(a, rng).transpose();
  }
  return out;
}

Vector sample_initial(std::span<const StateSeq> xs, int n_states, double alpha, Rng& rng) {
  Vector a = Vector::Constant(n_states, alpha);
  for (const StateSeq& x : xs) {
    if (!x.empty()) a[x.front()] += 1.0;
  }
  return sample_dirichlet(a, rng);
}

Vector sample_mu(std::span<const StateSeq> xs, std::span<const Placement> ws, std::span<const ObsSeq> os,
                 const MuPrior& prior, double sd, MuPosterior mode, Rng& rng) {
  const Eigen::Index n_states = prior.xi.size();
  if (prior.kappa.size() != n_states) throw std::invalid_argument("xi and kappa differ in length");
  if (xs.size() != ws.size() || xs.size() != os.size()) throw std::invalid_argument("latent sets differ in size");
  Vector count = Vector::Zero(n_states);
  Vector sum = Vector::Zero(n_states);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < ws[i].size(); ++k) {
      const int s = xs[i][ws[i][k]];
      count[s] += 1.0;
      sum[s] += os[i][k];
    }
  }
  Vector mu(n_states);
  const double inv_var = 1.0 / (sd * sd);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    double mean = 0.0;
    double precision = 0.0;
    if (mode == MuPosterior::paper_literal) {
      precision = count[s] + prior.kappa[s];
      mean = (sum[s] + prior.kappa[s] * prior.xi[s]) / precision;
    } else {
      precision = prior.kappa[s] + count[s] * inv_var;
      mean = (prior.kappa[s] * prior.xi[s] + sum[s] * inv_var) / precision;
    }
    mu[s] = sample_normal(mean, 1.0 / std::sqrt(precision), rng);
  }
  return mu;
}

Matrix sample_categorical_rows(std::span<const StateSeq> xs, std::span<const Placement> ws,
                               std::span<const ObsSeq> os, int n_states, int vocabulary, double alpha,
                               Rng& rng) {
  Matrix counts = Matrix::Constant(n_states, vocabulary, alpha);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < ws[i].size(); ++k) {
      const int symbol = static_cast<int>(os[i][k]);
      if (symbol < 0 || symbol >= vocabulary) throw std::out_of_range("observation symbol outside vocabulary");
      counts(xs[i][ws[i][k]], symbol) += 1.0;
    }
  }
  Matrix out(n_states, vocabulary);
  for (int s = 0; s < n_states; ++s) out.row(s) = sample_dirichlet(counts.row(s).transpose(), rng).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Latent path given placements

namespace {

Matrix log_matrix(const Matrix& m) { return m.unaryExpr([](double v) { return safe_log(v); }); }

void check_placement(const Placement& W, std::size_t K, int N) {
  if (W.size() != K) throw std::invalid_argument("|W| differs from |O|");
  for (std::size_t k = 0; k < W.size(); ++k) {
    if (W[k] < 0 || W[k] >= N || (k > 0 && W[k] <= W[k - 1])) {
      throw std::invalid_argument("W must be strictly increasing within [0, N)");
    }
  }
}

}  // namespace

StateSeq sample_X_given_W(const HmmModel& model, const ObsSeq& O, const Placement& W, int N,
                          const Vector& psi, Rng& rng) {
  const int n = model.n_states();
  if (psi.size() != n) throw std::invalid_argument("psi length differs from n_states");
  if (N < 0) throw std::invalid_argument("N must be non-negative");
  check_placement(W, O.size(), N);
  if (N == 0) return {};

  Vector log_keep(n), log_omit(n);
  for (int s = 0; s < n; ++s) {
    log_keep[s] = safe_log(1.0 - psi[s]);
    log_omit[s] = safe_log(psi[s]);
  }
  Matrix factor(n, N);  // log per-position factor, column t
  factor.colwise() = log_omit;
  for (std::size_t k = 0; k < W.size(); ++k) {
    for (int s = 0; s < n; ++s) {
      factor(s, W[k]) = log_keep[s] + model.emission().log_density(s, O[k]);
    }
  }

  // beta(:, t) = log P(evidence after t | X_t)
  const Matrix& T = model.T();
  Matrix beta(n, N);
  beta.col(N - 1).setZero();
  Vector h(n), v(n), u(n);
  for (int t = N - 2; t >= 0; --t) {
    h = factor.col(t + 1) + beta.col(t + 1);
    const double mx = h.maxCoeff();
    if (mx <= kLogZero / 2) {
      throw std::domain_error("zero probability mass at position " + std::to_string(t + 1));
    }
    v = detail::shifted_exp(h, mx);
    u.noalias() = T * v;
    for (int s = 0; s < n; ++s) beta(s, t) = safe_log(u[s]) + mx;
  }

  const Matrix logT = log_matrix(T);
  StateSeq x(N);
  std::vector<double> w(n);
  for (int t = 0; t < N; ++t) {
    for (int s = 0; s < n; ++s) {
      const double prior = t == 0 ? safe_log(model.initial()[s]) : logT(x[t - 1], s);
      w[s] = prior + factor(s, t) + beta(s, t);
    }
    try {
      x[t] = static_cast<int>(sample_log_categorical(w, rng));
    } catch (const std::domain_error&) {
      throw std::domain_error("zero probability mass at position " + std::to_string(t));
    }
  }
  return x;
}

Vector sample_psi(std::span<const StateSeq> xs, std::span<const Placement> ws, const Vector& psi,
                  const std::vector<bool>& known, double prior_a, double prior_b, PsiMode mode, Rng& rng) {
  if (mode == PsiMode::fixed) return psi;
  const Eigen::Index n = psi.size();
  if (static_cast<Eigen::Index>(known.size()) != n) throw std::invalid_argument("known mask length differs");
  Vector seen = Vector::Zero(n);
  Vector total = Vector::Zero(n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int s : xs[i]) total[s] += 1.0;
    for (int w : ws[i]) seen[xs[i][w]] += 1.0;
  }
  Vector out = psi;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (mode == PsiMode::sample_missing && known[s]) continue;
    const double keep = sample_beta(seen[s] + prior_a, total[s] - seen[s] + prior_b, rng);
    out[s] = 1.0 - keep;
  }
  return out;
}

double joint_loglik(const ObsSeq& O, const StateSeq& X, const Placement& W, const HmmModel& model,
                    const Vector& psi) {
  const int N = static_cast<int>(X.size());
  check_placement(W, O.size(), N);
  if (N == 0) return 0.0;
  double ll = safe_log(model.initial()[X[0]]);
  for (int t = 1; t < N; ++t) ll += safe_log(model.T()(X[t - 1], X[t]));
  std::size_t k = 0;
  for (int t = 0; t < N; ++t) {
    const int s = X[t];
    if (k < W.size() && W[k] == t) {
      ll += safe_log(1.0 - psi[s]) + model.emission().log_density(s, O[k]);
      ++k;
    } else {
      ll += safe_log(psi[s]);
    }
  }
  return ll;
}

Placement identity_placement(int K) {
  Placement w(static_cast<std::size_t>(std::max(K, 0)));
  for (int k = 0; k < K; ++k) w[k] = k;
  return w;
}

}  // namespace hmmop
