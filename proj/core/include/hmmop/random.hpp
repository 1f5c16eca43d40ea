#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace hmmop {

using Rng = std::mt19937_64;

// Stream derivation: every (base, a, b, c) tuple maps to an independent
// generator, so per-sentence draws do not depend on thread scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);
Rng make_rng(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0,
             std::uint64_t c = 0);

double uniform01(Rng& rng);
double sample_normal(double mean, double sd, Rng& rng);
double sample_gamma(double shape, Rng& rng);
double sample_beta(double a, double b, Rng& rng);
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng);

// Draws an index proportionally to non-negative, unnormalized weights.
// Throws std::domain_error when the total mass is zero.
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

// Same, for log-weights; shifts by the maximum before exponentiating.
std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng);

}  // namespace hmmop
