#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hmmop/gibbs.hpp"

namespace hmmop::detail {

// exp(h - shift) with terms below e^-700 flushed to zero; subnormal
// intermediates otherwise make the backward mat-vecs very slow.
inline Vector shifted_exp(const Vector& h, double shift) {
  return (h.array() - shift < -700.0).select(0.0, (h.array() - shift).exp()).matrix();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). The first exception by index is rethrown after all workers join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Random streams. Stage numbers keep draws of different kernels apart, so the
// chain is reproducible regardless of thread count.
inline constexpr std::uint64_t kGlobalStream = ~std::uint64_t{0};
Rng global_rng(const GibbsConfig& config, int iteration, int stage);
Rng sentence_rng(const GibbsConfig& config, int iteration, int sentence, int stage);

// Non-empty observation sequences of a dataset plus their original indices.
struct Sentences {
  std::vector<ObsSeq> os;
  std::vector<int> source;
  int skipped = 0;
};
Sentences collect_sentences(const Dataset& data);

class EmissionSampler {
 public:
  EmissionSampler(const GibbsConfig& config, int n_states, std::span<const ObsSeq> os, Rng& rng);
  const EmissionModel& current() const { return *model_; }
  void resample(std::span<const StateSeq> xs, std::span<const Placement> ws, std::span<const ObsSeq> os,
                Rng& rng);

 private:
  const GibbsConfig& config_;
  int n_states_;
  MuPrior prior_;
  std::optional<EmissionModel> model_;
};

class PosteriorAccumulator {
 public:
  void add(const Matrix& T, const EmissionModel& emission, const Vector& initial, const Vector& psi);
  FitResult finish(std::vector<DiagnosticRow> diagnostics, int skipped) const;

 private:
  int count_ = 0;
  Matrix T_;
  Matrix emission_sum_;  // means (n x 1) or categorical rows
  double sd_ = 1.0;
  bool gaussian_ = true;
  Vector initial_;
  Vector psi_;
};

HmmModel assemble_model(const Matrix& T, const EmissionModel& emission, const Vector& initial);
std::optional<double> truth_l1(const GibbsConfig& config, const HmmModel& model);
bool keep_sample(const GibbsConfig& config, int iteration);
Matrix random_transition(int n_states, Rng& rng);

enum class PlacementMode { frozen, matching };

// Placement-conditioned Gibbs chain shared by the Naive, Known-W and Matching fitters. With
// PlacementMode::frozen the given placements are never resampled; with
// matching, empty `placements` means random initial placements.
FitResult run_placement_chain(const Sentences& sentences, std::vector<Placement> placements,
                              const std::vector<int>& lengths, const PsiInput& psi, const GibbsConfig& config,
                              PlacementMode mode);

}  // namespace hmmop::detail
