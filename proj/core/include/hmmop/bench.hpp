#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmmop/gibbs.hpp"
#include "hmmop/hmm.hpp"
#include "hmmop/omission.hpp"

namespace hmmop {

// n_states states, each with `degree` distinct random successors whose weights
// are Dirichlet(1); Gaussian emissions with mean i and the given sd; uniform
// initial. For degree >= 2 the chain is regenerated until irreducible.
HmmModel make_synthetic_degree(int degree, Rng& rng, int n_states = 10, double sd = 0.1);

// 25 states in 5 groups of 5 (state s is in group s / 5); group g moves only
// to group (g + 1) mod 5 with Dirichlet(1) weights.
HmmModel make_cyclic_multipartite(Rng& rng, double sd = 0.1);

bool is_irreducible(const Matrix& T);

// Tagged corpus, one sentence per line of "word/TAG" tokens.
struct PosCorpus {
  HmmModel model;  // add-one smoothed transitions, emissions and initial
  std::vector<std::string> tags;
  std::vector<std::string> vocabulary;  // top words; the last symbol is the OOV bucket
  Matrix transition_counts;
  Matrix emission_counts;
  Vector initial_counts;
};
// Malformed tokens and empty corpora throw std::invalid_argument naming path:line.
PosCorpus ingest_pos_counts(const std::string& path, int max_vocabulary = 1000);

enum class Method { naive, matching, gaps, known_w, semi_analytic, random_w, equivalent_w, consecutive_w };
std::string method_name(Method m);
Method parse_method(const std::string& name);

enum class Imputation { none, sampling, random };

// Declarative experiment. `kind` selects the protocol:
//   reconstruction: L1 of each method's transition matrix to the truth.
//   labeling:       label accuracy of full / known-w / hmmop / naive decoding.
//   convergence:    per-iteration mean joint log-likelihood with T frozen.
struct ExperimentSpec {
  std::string kind = "reconstruction";
  std::string model_id = "synthetic-degree-5";
  std::string model_path;  // pos corpus or custom model JSON
  int n_states = 10;
  int pos_vocabulary = 1000;
  double emission_sd = 0.1;
  bool non_hidden = false;  // identity categorical emissions, frozen in every fit

  int n_sentences = 200;
  int sentence_length = 60;

  // constant | state-dependent | per-sentence-normal | markov
  std::string omission = "constant";
  double p_c = 0.5;
  double epsilon = 0.0;      // Markov memory, or half-width of psi ~ U[0.5 - eps, 0.5 + eps]
  double pc_sigma = 0.0;     // per-sentence-normal spread
  double psi_low = 0.35;     // state-dependent psi range when epsilon is not swept
  double psi_high = 0.65;
  double missing_fraction = 0.0;
  std::optional<double> provided_p_c;
  std::string provide = "true";  // true | empirical-pc
  Imputation imputation = Imputation::none;

  std::vector<Method> methods{Method::naive, Method::gaps};
  std::string sweep_param;  // p_c | epsilon | sigma | psi-missing-fraction | provided-p_c
  std::vector<double> sweep_values;
  int replications = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  bool timing = false;

  GibbsConfig gibbs;
  std::vector<int> inner_steps{30};  // convergence protocol
  int max_rounds = 20;               // labeling protocol

  void validate() const;
};

ExperimentSpec parse_experiment_spec(const std::string& json_text);

// Sampler settings from a JSON object: iterations, burn_in, thinning,
// inner_steps, s_max, acceptance (full-product | per-component | gibbs),
// mu_posterior (paper-literal | corrected), dirichlet_alpha, psi_prior_a/b,
// n_states, emission_sd, vocabulary, emission_alpha. Unknown keys are rejected.
GibbsConfig parse_gibbs_config(const std::string& json_text);

struct ResultRow {
  std::string model_id;
  std::string method;
  std::string sweep_param;
  double sweep_value = 0.0;
  int replication = 0;
  double metric = 0.0;  // L1 error, or accuracy for labeling
  double seconds = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);
std::string results_csv(const std::vector<ResultRow>& rows, const std::string& metric_column = "l1");

// Runs any kind and renders its CSV (results, accuracy or convergence schema).
std::string run_experiment_csv(const ExperimentSpec& spec);

// The truth model of one replication.
HmmModel experiment_model(const ExperimentSpec& spec, int replication);

// Full-truth dataset of one cell (W, N and X retained). Sentence i draws from
// make_rng(data_seed, i). `full_obs`, when given, receives the unthinned observations.
Dataset experiment_dataset(const ExperimentSpec& spec, const HmmModel& model, const OmissionSpec& omission,
                           std::uint64_t data_seed, std::vector<ObsSeq>* full_obs = nullptr);

struct ConvergenceRow {
  std::string method;
  int replication = 0;
  int inner_steps = 0;
  int iteration = 0;
  double mean_loglik = 0.0;
};

// T, initial and emissions frozen at the truth; only X and W (or d) are sampled.
std::vector<ConvergenceRow> placement_convergence_experiment(const HmmModel& truth, const Dataset& data,
                                                             const std::vector<Method>& methods,
                                                             const std::vector<int>& inner_steps,
                                                             const Vector& psi, int iterations, std::uint64_t seed,
                                                             int threads = 1);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

// Sweep over psi-missing-fraction; rejects specs sweeping anything else.
std::vector<ResultRow> psi_imputation_experiment(const ExperimentSpec& spec);

struct LabelAccuracy {
  double full = 0.0;     // decoding of the complete sequence, scored at kept positions
  double known_w = 0.0;  // decoding with the true W and N
  double hmmop = 0.0;    // label_sequence with N known
  double naive = 0.0;    // decoding O as gapless
};
// `full_obs[i]` is the unthinned observation sequence of sentence i; every
// sentence needs W, N and X.
LabelAccuracy label_accuracy(const HmmModel& model, const Dataset& data, const std::vector<ObsSeq>& full_obs,
                             const Vector& psi, int max_rounds, int threads = 1);

}  // namespace hmmop
