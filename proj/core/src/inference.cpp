#include "hmmop/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hmmop/gibbs.hpp"

namespace hmmop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Placement longest_path_W(const StateSeq& X, const ObsSeq& O, const EmissionModel& emission, const Vector& psi) {
  const int N = static_cast<int>(X.size());
  const int K = static_cast<int>(O.size());
  if (K > N) throw std::invalid_argument("cannot place " + std::to_string(K) + " observations in " +
                                         std::to_string(N) + " positions");
  if (K == 0) return {};
  const int width = N - K + 1;  // candidates per layer: b in [k, k + width)

  auto node = [&](int k, int b) {
    double r = emission.log_density(X[b], O[k]);
    if (psi.size() > 0) r += safe_log(1.0 - psi[X[b]]) - safe_log(psi[X[b]]);
    return r;
  };

  // suffix(k, i): best score of layers k.. with layer k at position k + i.
  // Later layers may only use i' >= i.
  Matrix suffix(K, width);
  for (int i = width - 1; i >= 0; --i) suffix(K - 1, i) = node(K - 1, K - 1 + i);
  for (int k = K - 2; k >= 0; --k) {
    double tail = kNegInf;
    for (int i = width - 1; i >= 0; --i) {
      tail = std::max(tail, suffix(k + 1, i));
      suffix(k, i) = node(k, k + i) + tail;
    }
  }
  // Forward pass: the smallest i reaching the best remaining score gives the
  // lexicographically smallest optimal W.
  Placement w(K);
  int lo = 0;
  for (int k = 0; k < K; ++k) {
    const double target = suffix.row(k).tail(width - lo).maxCoeff();
    int i = lo;
    while (suffix(k, i) != target) ++i;
    w[k] = k + i;
    lo = i;
  }
  return w;
}

GapSeq knapsack_init(const Matrix& T, const StateSeq& X_proxy, int N, const Vector& psi, int s_max,
                     const Vector& initial) {
  const int K = static_cast<int>(X_proxy.size());
  if (N < K) throw std::invalid_argument("infeasible budget: N < K");
  if (s_max < 0) throw std::invalid_argument("s_max must be non-negative");
  if (K == 0) return {};
  const GapTables tables = build_gap_tables(T, psi, s_max, initial);
  const int n = tables.n_states();

  // Log-probability of each length for every item.
  std::vector<std::vector<double>> items;
  items.reserve(K + 1);
  auto add_item = [&](Vector w) {
    const double total = w.sum();
    std::vector<double> lp(s_max + 1);
    for (int d = 0; d <= s_max; ++d) lp[d] = total > 0.0 ? safe_log(w[d] / total) : kLogZero;
    items.push_back(std::move(lp));
  };
  {
    Vector w(s_max + 1);
    for (int d = 0; d <= s_max; ++d) w[d] = tables.leading[d][X_proxy[0]];
    add_item(w);
  }
  for (int k = 1; k < K; ++k) {
    Vector w(s_max + 1);
    for (int d = 0; d <= s_max; ++d) w[d] = tables.MT_powers[d](X_proxy[k - 1], X_proxy[k]);
    add_item(w);
  }
  {
    Vector w(s_max + 1);
    for (int d = 0; d <= s_max; ++d) w[d] = tables.MT_powers[d].row(X_proxy[K - 1]).sum() / n;
    add_item(w);
  }

  // best(i, b): optimal score of items i.. with at most b positions left.
  const int budget = N - K;
  const int m = static_cast<int>(items.size());
  Matrix best = Matrix::Zero(m + 1, budget + 1);
  for (int i = m - 1; i >= 0; --i) {
    for (int b = 0; b <= budget; ++b) {
      double top = kNegInf;
      for (int d = 0; d <= std::min(s_max, b); ++d) top = std::max(top, items[i][d] + best(i + 1, b - d));
      best(i, b) = top;
    }
  }
  GapSeq out(m);
  int b = budget;
  constexpr double kTieTol = 1e-12;
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d <= std::min(s_max, b); ++d) {
      if (items[i][d] + best(i + 1, b - d) >= best(i, b) - kTieTol) {
        out[i] = d;
        b -= d;
        break;
      }
    }
  }
  return out;
}

StateSeq decode_known_w(const HmmModel& model, const ObsSeq& O, const Placement& W, int N, const Vector& psi) {
  const int n = model.n_states();
  if (psi.size() != n) throw std::invalid_argument("psi length differs from n_states");
  if (W.size() != O.size()) throw std::invalid_argument("|W| differs from |O|");
  for (std::size_t k = 0; k < W.size(); ++k) {
    if (W[k] < 0 || W[k] >= N || (k > 0 && W[k] <= W[k - 1])) {
      throw std::invalid_argument("W must be strictly increasing within [0, N)");
    }
  }
  if (N == 0) return {};
  Matrix factor(n, N);
  for (int s = 0; s < n; ++s) factor.row(s).setConstant(safe_log(psi[s]));
  for (std::size_t k = 0; k < W.size(); ++k) {
    for (int s = 0; s < n; ++s) factor(s, W[k]) = safe_log(1.0 - psi[s]) + model.emission().log_density(s, O[k]);
  }
  const Matrix logT = model.T().unaryExpr([](double v) { return safe_log(v); });

  Matrix delta(n, N);
  std::vector<std::vector<int>> back(N, std::vector<int>(n, 0));
  for (int s = 0; s < n; ++s) delta(s, 0) = safe_log(model.initial()[s]) + factor(s, 0);
  for (int t = 1; t < N; ++t) {
    for (int s = 0; s < n; ++s) {
      int arg = 0;
      double top = delta(0, t - 1) + logT(0, s);
      for (int r = 1; r < n; ++r) {
        const double v = delta(r, t - 1) + logT(r, s);
        if (v > top) top = v, arg = r;
      }
      delta(s, t) = top + factor(s, t);
      back[t][s] = arg;
    }
  }
  StateSeq x(N);
  int s = 0;
  for (int r = 1; r < n; ++r) {
    if (delta(r, N - 1) > delta(s, N - 1)) s = r;
  }
  for (int t = N - 1; t >= 0; --t) {
    x[t] = s;
    if (t > 0) s = back[t][s];
  }
  return x;
}

LabelResult label_sequence(const HmmModel& model, const ObsSeq& O, int N, const Vector& psi, int max_rounds,
                           int s_max) {
  const int K = static_cast<int>(O.size());
  if (N < K) throw std::invalid_argument("N is smaller than the number of observations");
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  if (psi.size() != model.n_states()) throw std::invalid_argument("psi length differs from n_states");
  const int cap = s_max > 0 ? s_max : default_s_max(psi);

  StateSeq proxy(K);
  for (int k = 0; k < K; ++k) proxy[k] = model.emission().most_likely_state(O[k]);
  const GapSeq gaps = knapsack_init(model.T(), proxy, N, psi, cap, model.initial());
  Placement W;
  {
    GapSeq between(gaps.begin(), gaps.begin() + K);
    W = placement_from_gaps(between).W;
  }

  LabelResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (int round = 1; round <= max_rounds; ++round) {
    out.rounds = round;
    const StateSeq X = decode_known_w(model, O, W, N, psi);
    const double after_x = joint_loglik(O, X, W, model, psi);
    out.objective.push_back(after_x);
    if (after_x > best) {
      best = after_x;
      out.X = X;
      out.W = W;
    }
    Placement next = longest_path_W(X, O, model.emission(), psi);
    const double after_w = joint_loglik(O, X, next, model, psi);
    out.objective.push_back(after_w);
    if (after_w > best) {
      best = after_w;
      out.X = X;
      out.W = next;
    }
    if (next == W) {
      out.converged = true;
      break;
    }
    W = std::move(next);
  }
  out.labels.resize(K);
  for (int k = 0; k < K; ++k) out.labels[k] = out.X[out.W[k]];
  return out;
}

}  // namespace hmmop
