#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hmmop/hmm.hpp"
#include "hmmop/omission.hpp"

namespace hmmop {

enum class PsiMode { fixed, sample_missing, sample_all };

// paper_literal: mean (S + kappa xi) / (n + kappa), variance 1 / (n + kappa).
// corrected: the conjugate update with the emission variance sigma^2.
enum class MuPosterior { paper_literal, corrected };

// How the Matching sampler accepts a W proposal built from inner component sweeps.
//   full_product:  alpha = prod_k p(O_k | X_{w*_k}) (1 - psi) / same at W, once per sweep.
//   per_component: alpha from the single changed component's factor, applied
//                  after every component draw.
//   gibbs:         every swept W is accepted (plain Gibbs scan).
enum class AcceptanceRule { full_product, per_component, gibbs };

// Omission probabilities handed to a fitter. Unknown entries carry a starting
// value and are resampled only when psi_mode is sample_missing.
struct PsiInput {
  Vector values;
  std::vector<bool> known;

  static PsiInput constant_keep(int n_states, double p_c);
  static PsiInput full(Vector psi);
  static PsiInput partial(Vector psi, std::vector<bool> known);
  bool all_known() const;
};

struct GibbsConfig {
  int n_states = 0;  // 0 takes the size of fixed_model or fixed_emission
  int n_iterations = 300;
  int burn_in = 100;
  int thinning = 1;
  std::uint64_t seed = 0;
  int mh_inner_steps = 30;
  int s_max = 0;  // 0 picks default_s_max(psi)
  PsiMode psi_mode = PsiMode::fixed;
  AcceptanceRule acceptance = AcceptanceRule::full_product;
  MuPosterior mu_posterior = MuPosterior::paper_literal;

  double dirichlet_alpha = 1.0;
  double psi_prior_a = 1.0;  // Beta prior on the keep probability
  double psi_prior_b = 1.0;

  // Emission family. vocabulary > 0 selects categorical emissions.
  double emission_sd = 0.1;
  int vocabulary = 0;
  double emission_alpha = 1.0;
  // Frozen emission model; neither initialized nor resampled.
  std::optional<EmissionModel> fixed_emission;
  // Frozen transition matrix (placement-only runs); T and initial are not resampled.
  std::optional<HmmModel> fixed_model;

  int threads = 1;
  // Ground truth used only for the L1 column of the diagnostics.
  std::optional<HmmModel> truth;

  void validate() const;
  int resolved_states() const;
};

struct DiagnosticRow {
  int iteration = 0;
  double mean_loglik = 0.0;  // mean over sentences of log P(O, X | T, W, psi)
  std::optional<double> l1;  // to truth after state alignment
};

struct FitResult {
  HmmModel model;  // posterior means after burn-in
  Vector psi;
  std::vector<DiagnosticRow> diagnostics;
  int skipped_sentences = 0;  // empty O
  int samples_kept = 0;
};

struct EmissionPriorInit {
  Vector xi;
  Vector kappa;
  Vector mu;
};

// n_states-component 1-D Gaussian mixture by EM (10 restarts), then per
// component xi = (min + max) / 2 and kappa = 1 / R^2 over its assigned values
// (R = 0 gives kappa = 1). Initial mu is the mixture mean of each component,
// or a prior draw when there are fewer distinct values than states.
EmissionPriorInit init_emission_priors(std::span<const double> observations, int n_states, Rng& rng);

Matrix transition_counts(std::span<const StateSeq> xs, int n_states);

// Row i ~ Dirichlet(counts_i + alpha).
Matrix sample_T(std::span<const StateSeq> xs, int n_states, double alpha, Rng& rng);

// Dirichlet(first-state counts + alpha).
Vector sample_initial(std::span<const StateSeq> xs, int n_states, double alpha, Rng& rng);

struct MuPrior {
  Vector xi;
  Vector kappa;
};

// One normal draw per state from the observations mapped to it through W.
Vector sample_mu(std::span<const StateSeq> xs, std::span<const Placement> ws, std::span<const ObsSeq> os,
                 const MuPrior& prior, double sd, MuPosterior mode, Rng& rng);

// Categorical rows ~ Dirichlet(symbol counts + alpha).
Matrix sample_categorical_rows(std::span<const StateSeq> xs, std::span<const Placement> ws,
                               std::span<const ObsSeq> os, int n_states, int vocabulary, double alpha,
                               Rng& rng);

// Exact draw of the full-length X given W via backward recursion and forward
// sampling. Position t carries (1 - psi) p(O_k | X_t) when t = w_k and psi
// otherwise.
StateSeq sample_X_given_W(const HmmModel& model, const ObsSeq& O, const Placement& W, int N,
                          const Vector& psi, Rng& rng);

// Keep probability of each sampled state ~ Beta(observed + a, omitted + b),
// psi = 1 - draw. Entries with known[s] (sample_missing) or every entry
// (fixed) pass through.
Vector sample_psi(std::span<const StateSeq> xs, std::span<const Placement> ws, const Vector& psi,
                  const std::vector<bool>& known, double prior_a, double prior_b, PsiMode mode, Rng& rng);

// log initial(X_0) + sum log T + sum over W of log[(1 - psi) p(O|X)] + sum off W of log psi.
double joint_loglik(const ObsSeq& O, const StateSeq& X, const Placement& W, const HmmModel& model,
                    const Vector& psi);

// Placement with w_k = k.
Placement identity_placement(int K);

}  // namespace hmmop
