#include "hmmop/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hmmop/hmm.hpp"

namespace hmmop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ splitmix64(a + 0x1234567ULL));
  h = splitmix64(h ^ splitmix64(b + 0x89abcdefULL));
  h = splitmix64(h ^ splitmix64(c + 0x13579bdfULL));
  return h;
}

Rng make_rng(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return Rng(derive_seed(base, a, b, c));
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double sample_normal(double mean, double sd, Rng& rng) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  return std::gamma_distribution<double>(shape, 1.0)(rng);
}

double sample_beta(double a, double b, Rng& rng) {
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng) {
  Eigen::VectorXd draw(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) draw[i] = sample_gamma(alpha[i], rng);
  const double total = draw.sum();
  if (total > 0.0 && std::isfinite(total)) return draw / total;
  // All gammas underflowed (tiny shapes): fall back to a one-hot draw.
  draw.setZero();
  draw[static_cast<Eigen::Index>(sample_categorical(
      std::span<const double>(alpha.data(), static_cast<std::size_t>(alpha.size())), rng))] = 1.0;
  return draw;
}

std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::domain_error("categorical weights have zero mass");
  double u = uniform01(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!(top > kLogZero / 2)) throw std::domain_error("categorical weights have zero mass");
  double buf_small[64];
  std::vector<double> buf_large;
  double* w = buf_small;
  if (log_weights.size() > 64) {
    buf_large.resize(log_weights.size());
    w = buf_large.data();
  }
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    w[i] = log_weights[i] - top < -700.0 ? 0.0 : std::exp(log_weights[i] - top);
  }
  return sample_categorical(std::span<const double>(w, log_weights.size()), rng);
}

}  // namespace hmmop
