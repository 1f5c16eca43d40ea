#include "placement_engine.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "hmmop/matching.hpp"

namespace hmmop::detail {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Rng global_rng(const GibbsConfig& config, int iteration, int stage) {
  return make_rng(config.seed, static_cast<std::uint64_t>(iteration), kGlobalStream,
                  static_cast<std::uint64_t>(stage));
}

Rng sentence_rng(const GibbsConfig& config, int iteration, int sentence, int stage) {
  return make_rng(config.seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(sentence),
                  static_cast<std::uint64_t>(stage));
}

Sentences collect_sentences(const Dataset& data) {
  Sentences out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].O.empty()) {
      ++out.skipped;
      continue;
    }
    out.os.push_back(data[i].O);
    out.source.push_back(static_cast<int>(i));
  }
  if (out.os.empty()) throw std::invalid_argument("dataset has no non-empty sentences");
  return out;
}

EmissionSampler::EmissionSampler(const GibbsConfig& config, int n_states, std::span<const ObsSeq> os, Rng& rng)
    : config_(config), n_states_(n_states) {
  if (config.fixed_emission) {
    model_ = *config.fixed_emission;
    return;
  }
  if (config.fixed_model) {
    model_ = config.fixed_model->emission();
    return;
  }
  if (config.vocabulary > 0) {
    Matrix rows(n_states, config.vocabulary);
    const Vector ones = Vector::Ones(config.vocabulary);
    for (int s = 0; s < n_states; ++s) rows.row(s) = sample_dirichlet(ones, rng).transpose();
    model_ = EmissionModel::categorical(std::move(rows));
    return;
  }
  std::vector<double> pooled;
  for (const ObsSeq& o : os) pooled.insert(pooled.end(), o.begin(), o.end());
  EmissionPriorInit init = init_emission_priors(pooled, n_states, rng);
  prior_ = MuPrior{init.xi, init.kappa};
  model_ = EmissionModel::gaussian(init.mu, config.emission_sd);
}

void EmissionSampler::resample(std::span<const StateSeq> xs, std::span<const Placement> ws,
                               std::span<const ObsSeq> os, Rng& rng) {
  if (config_.fixed_emission || config_.fixed_model) return;
  if (config_.vocabulary > 0) {
    model_ = EmissionModel::categorical(
        sample_categorical_rows(xs, ws, os, n_states_, config_.vocabulary, config_.emission_alpha, rng));
  } else {
    model_ = EmissionModel::gaussian(sample_mu(xs, ws, os, prior_, config_.emission_sd, config_.mu_posterior, rng),
                                     config_.emission_sd);
  }
}

void PosteriorAccumulator::add(const Matrix& T, const EmissionModel& emission, const Vector& initial,
                               const Vector& psi) {
  Matrix e;
  if (emission.is_gaussian()) {
    e = emission.as_gaussian().means;
    sd_ = emission.as_gaussian().sd;
    gaussian_ = true;
  } else {
    e = emission.as_categorical().probs;
    gaussian_ = false;
  }
  if (count_ == 0) {
    T_ = T;
    emission_sum_ = e;
    initial_ = initial;
    psi_ = psi;
  } else {
    T_ += T;
    emission_sum_ += e;
    initial_ += initial;
    psi_ += psi;
  }
  ++count_;
}

FitResult PosteriorAccumulator::finish(std::vector<DiagnosticRow> diagnostics, int skipped) const {
  if (count_ == 0) throw std::logic_error("no posterior samples were kept");
  const double inv = 1.0 / count_;
  Matrix T = T_ * inv;
  for (Eigen::Index i = 0; i < T.rows(); ++i) T.row(i) /= T.row(i).sum();
  Vector initial = initial_ * inv;
  initial /= initial.sum();
  Matrix e = emission_sum_ * inv;
  EmissionModel emission = gaussian_ ? EmissionModel::gaussian(e.col(0), sd_) : [&] {
    for (Eigen::Index i = 0; i < e.rows(); ++i) e.row(i) /= e.row(i).sum();
    return EmissionModel::categorical(e);
  }();
  FitResult out{HmmModel(TransitionMatrix(T), std::move(emission), initial), psi_ * inv, std::move(diagnostics),
                skipped, count_};
  return out;
}

HmmModel assemble_model(const Matrix& T, const EmissionModel& emission, const Vector& initial) {
  return HmmModel(TransitionMatrix(T), emission, initial);
}

std::optional<double> truth_l1(const GibbsConfig& config, const HmmModel& model) {
  if (!config.truth || config.truth->n_states() != model.n_states()) return std::nullopt;
  if (config.truth->emission().is_gaussian() != model.emission().is_gaussian()) return std::nullopt;
  const auto perm = align_states(model, *config.truth);
  return l1_transition_distance(permute_matrix(model.T(), perm), config.truth->T());
}

bool keep_sample(const GibbsConfig& config, int iteration) {
  return iteration > config.burn_in && (iteration - config.burn_in) % config.thinning == 0;
}

Matrix random_transition(int n_states, Rng& rng) {
  Matrix T(n_states, n_states);
  const Vector ones = Vector::Ones(n_states);
  for (int i = 0; i < n_states; ++i) T.row(i) = sample_dirichlet(ones, rng).transpose();
  return T;
}

FitResult run_placement_chain(const Sentences& sentences, std::vector<Placement> placements,
                              const std::vector<int>& lengths, const PsiInput& psi_input, const GibbsConfig& config,
                              PlacementMode mode) {
  config.validate();
  const int n = config.resolved_states();
  const int m = static_cast<int>(sentences.os.size());
  if (psi_input.values.size() != n) throw std::invalid_argument("psi length differs from n_states");
  if (static_cast<int>(lengths.size()) != m) throw std::invalid_argument("one full length per sentence required");
  if (mode == PlacementMode::frozen && static_cast<int>(placements.size()) != m) {
    throw std::invalid_argument("one placement per sentence required");
  }

  // Initialization: mu, T, W, X.
  Rng init_rng = global_rng(config, 0, 0);
  EmissionSampler emission(config, n, sentences.os, init_rng);
  Matrix T = config.fixed_model ? config.fixed_model->T() : random_transition(n, init_rng);
  Vector initial = config.fixed_model ? config.fixed_model->initial() : Vector::Constant(n, 1.0 / n);
  Vector psi = psi_input.values;

  if (placements.empty()) {
    placements.resize(m);
    for (int i = 0; i < m; ++i) {
      Rng rng = sentence_rng(config, 0, i, 1);
      placements[i] = random_placement(static_cast<int>(sentences.os[i].size()), lengths[i], rng);
    }
  }
  std::vector<StateSeq> xs(m);
  {
    const HmmModel model = assemble_model(T, emission.current(), initial);
    parallel_for(m, config.threads, [&](int i) {
      Rng rng = sentence_rng(config, 0, i, 2);
      xs[i] = sample_X_given_W(model, sentences.os[i], placements[i], lengths[i], psi, rng);
    });
  }

  PosteriorAccumulator posterior;
  std::vector<DiagnosticRow> diagnostics;
  diagnostics.reserve(config.n_iterations);
  for (int it = 1; it <= config.n_iterations; ++it) {
    {
      Rng rng = global_rng(config, it, 1);
      emission.resample(xs, placements, sentences.os, rng);
    }
    if (!config.fixed_model) {
      Rng rng = global_rng(config, it, 2);
      T = sample_T(xs, n, config.dirichlet_alpha, rng);
      initial = sample_initial(xs, n, config.dirichlet_alpha, rng);
    }
    const HmmModel model = assemble_model(T, emission.current(), initial);
    if (mode == PlacementMode::matching) {
      parallel_for(m, config.threads, [&](int i) {
        Rng rng = sentence_rng(config, it, i, 3);
        placements[i] = mh_sweep_W(placements[i], xs[i], sentences.os[i], model.emission(), psi,
                                   config.mh_inner_steps, config.acceptance, rng);
      });
    }
    parallel_for(m, config.threads, [&](int i) {
      Rng rng = sentence_rng(config, it, i, 4);
      xs[i] = sample_X_given_W(model, sentences.os[i], placements[i], lengths[i], psi, rng);
    });
    {
      Rng rng = global_rng(config, it, 5);
      psi = sample_psi(xs, placements, psi, psi_input.known, config.psi_prior_a, config.psi_prior_b,
                       config.psi_mode, rng);
    }

    double ll = 0.0;
    for (int i = 0; i < m; ++i) ll += joint_loglik(sentences.os[i], xs[i], placements[i], model, psi);
    diagnostics.push_back({it, ll / m, truth_l1(config, model)});
    if (keep_sample(config, it)) posterior.add(T, emission.current(), initial, psi);
  }
  return posterior.finish(std::move(diagnostics), sentences.skipped);
}

}  // namespace hmmop::detail
