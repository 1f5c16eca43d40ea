#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hmmop/hmm.hpp"
#include "hmmop/random.hpp"

namespace hmmop::testing {

// Dense random stochastic matrix with rows ~ Dirichlet(alpha).
inline Matrix random_stochastic(int n, Rng& rng, double alpha = 1.0) {
  Matrix T(n, n);
  for (int i = 0; i < n; ++i) T.row(i) = sample_dirichlet(Vector::Constant(n, alpha), rng).transpose();
  return T;
}

inline HmmModel gaussian_model(const Matrix& T, const std::vector<double>& means, double sd,
                               Vector initial = Vector()) {
  const auto n = T.rows();
  if (initial.size() == 0) initial = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return HmmModel(TransitionMatrix(T), EmissionModel::gaussian(Eigen::Map<const Vector>(means.data(), n), sd),
                  std::move(initial));
}

// Calls visit(seq) for every sequence in {0..base-1}^length.
inline void for_each_sequence(int base, int length, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> seq(static_cast<std::size_t>(length), 0);
  while (true) {
    visit(seq);
    int i = length - 1;
    while (i >= 0 && ++seq[static_cast<std::size_t>(i)] == base) seq[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) return;
  }
}

// Every strictly increasing K-subset of [0, N).
inline std::vector<std::vector<int>> all_placements(int K, int N) {
  std::vector<std::vector<int>> out;
  std::vector<int> w;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(w.size()) == K) {
      out.push_back(w);
      return;
    }
    for (int t = start; t < N; ++t) {
      w.push_back(t);
      rec(t + 1);
      w.pop_back();
    }
  };
  rec(0);
  return out;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace hmmop::testing
