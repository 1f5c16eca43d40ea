#include "hmmop/gaps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "placement_engine.hpp"

namespace hmmop {

namespace {

std::atomic<long long> g_table_products{0};
std::atomic<long long> g_kernel_reads{0};

Vector normalized_or_throw(Vector w, const std::string& what) {
  const double total = w.sum();
  if (!(total > 0.0)) throw std::domain_error("no gap length has mass for " + what);
  return w / total;
}

int draw(const Vector& weights, Rng& rng) {
  return static_cast<int>(sample_categorical(std::span<const double>(weights.data(), weights.size()), rng));
}

Vector gap_weights(int a, int b, const GapTables& t) {
  Vector w(t.s_max + 1);
  for (int d = 0; d <= t.s_max; ++d) w[d] = t.MT_powers[d](a, b);
  g_kernel_reads.fetch_add(t.s_max + 1, std::memory_order_relaxed);
  return w;
}

Vector leading_weights(int b, const GapTables& t) {
  Vector w(t.s_max + 1);
  for (int d = 0; d <= t.s_max; ++d) w[d] = t.leading[d][b];
  g_kernel_reads.fetch_add(t.s_max + 1, std::memory_order_relaxed);
  return w;
}

void check_state(int s, const GapTables& t) {
  if (s < 0 || s >= t.n_states()) throw std::out_of_range("state index out of range");
}

}  // namespace

GapTables build_gap_tables(const Matrix& T, const Vector& psi, int s_max, const Vector& initial,
                           std::uint64_t version) {
  if (T.rows() == 0 || T.rows() != T.cols()) throw std::invalid_argument("T must be square and non-empty");
  const Eigen::Index n = T.rows();
  if (psi.size() != n) throw std::invalid_argument("psi length differs from n_states");
  if (s_max < 0) throw std::invalid_argument("s_max must be non-negative");
  const Vector init = initial.size() == 0 ? Vector::Constant(n, 1.0 / static_cast<double>(n)) : initial;
  if (init.size() != n) throw std::invalid_argument("initial length differs from n_states");

  GapTables t;
  t.psi = psi;
  t.s_max = s_max;
  t.version = version;
  const Matrix M = T * psi.asDiagonal();
  t.M_powers.reserve(s_max + 1);
  t.MT_powers.reserve(s_max + 1);
  t.leading.reserve(s_max + 1);
  t.M_powers.push_back(Matrix::Identity(n, n));
  for (int d = 1; d <= s_max; ++d) t.M_powers.push_back(M * t.M_powers.back());
  for (int d = 0; d <= s_max; ++d) t.MT_powers.push_back(t.M_powers[d] * T);
  g_table_products.fetch_add(2LL * s_max + 1, std::memory_order_relaxed);

  t.leading.push_back(init);
  Eigen::RowVectorXd omitted_start = init.cwiseProduct(psi).transpose();
  for (int d = 1; d <= s_max; ++d) {
    t.leading.push_back((omitted_start * t.M_powers[d - 1] * T).transpose());
  }
  return t;
}

int default_s_max(const Vector& psi) {
  const double m = psi.size() > 0 ? psi.maxCoeff() : 0.0;
  if (m <= 0.0) return 5;
  if (m >= 1.0) return 60;
  const int s = static_cast<int>(std::floor(std::log(1e-8) / std::log(m))) + 1;
  return std::clamp(s, 5, 60);
}

Vector gap_distribution(int a, int b, const GapTables& tables) {
  check_state(a, tables);
  check_state(b, tables);
  return normalized_or_throw(gap_weights(a, b, tables),
                             "transition (" + std::to_string(a) + ", " + std::to_string(b) + ")");
}

Vector leading_gap_distribution(int b, const GapTables& tables) {
  check_state(b, tables);
  return normalized_or_throw(leading_weights(b, tables), "leading gap before state " + std::to_string(b));
}

int sample_gap(int a, int b, const GapTables& tables, Rng& rng) { return draw(gap_distribution(a, b, tables), rng); }

int sample_leading_gap(int b, const GapTables& tables, Rng& rng) {
  return draw(leading_gap_distribution(b, tables), rng);
}

StateSeq sample_x_walk(const GapTables& tables, const GapSeq& d, const ObsSeq& O, const EmissionModel& emission,
                       Rng& rng) {
  const int K = static_cast<int>(O.size());
  const int n = tables.n_states();
  if (static_cast<int>(d.size()) != K) throw std::invalid_argument("|d| differs from |O|");
  for (int g : d) {
    if (g < 0 || g > tables.s_max) throw std::invalid_argument("gap length outside [0, s_max]");
  }
  if (K == 0) return {};

  Matrix factor = log_emission_table(emission, O).transpose();  // n x K
  for (int s = 0; s < n; ++s) factor.row(s).array() += safe_log(1.0 - tables.psi[s]);

  Matrix beta(n, K);
  beta.col(K - 1).setZero();
  Vector h(n), v(n), u(n);
  for (int k = K - 1; k >= 1; --k) {
    h = factor.col(k) + beta.col(k);
    const double mx = h.maxCoeff();
    if (mx <= kLogZero / 2) throw std::domain_error("zero probability mass at observation " + std::to_string(k));
    v = detail::shifted_exp(h, mx);
    u.noalias() = tables.MT_powers[d[k]] * v;
    g_kernel_reads.fetch_add(static_cast<long long>(n) * n, std::memory_order_relaxed);
    for (int s = 0; s < n; ++s) beta(s, k - 1) = safe_log(u[s]) + mx;
  }

  StateSeq x(K);
  std::vector<double> w(n);
  for (int k = 0; k < K; ++k) {
    for (int s = 0; s < n; ++s) {
      const double prior = k == 0 ? safe_log(tables.leading[d[0]][s]) : safe_log(tables.MT_powers[d[k]](x[k - 1], s));
      w[s] = prior + factor(s, k) + beta(s, k);
    }
    g_kernel_reads.fetch_add(n, std::memory_order_relaxed);
    try {
      x[k] = static_cast<int>(sample_log_categorical(w, rng));
    } catch (const std::domain_error&) {
      throw std::domain_error("zero probability mass at observation " + std::to_string(k));
    }
  }
  return x;
}

GapSeq sample_gaps(const GapTables& tables, const StateSeq& x_walk, Rng& rng) {
  GapSeq d(x_walk.size());
  if (x_walk.empty()) return d;
  d[0] = sample_leading_gap(x_walk[0], tables, rng);
  for (std::size_t k = 1; k < x_walk.size(); ++k) d[k] = sample_gap(x_walk[k - 1], x_walk[k], tables, rng);
  return d;
}

PlacementFromGaps placement_from_gaps(const GapSeq& d) {
  PlacementFromGaps out;
  out.W.reserve(d.size());
  int position = -1;
  for (int g : d) {
    if (g < 0) throw std::invalid_argument("gap lengths must be non-negative");
    position += g + 1;
    out.W.push_back(position);
  }
  out.N = position + 1;
  return out;
}

GapSeq gaps_from_placement(const Placement& W) {
  GapSeq d(W.size());
  int previous = -1;
  for (std::size_t k = 0; k < W.size(); ++k) {
    if (W[k] <= previous) throw std::invalid_argument("W must be strictly increasing and non-negative");
    d[k] = W[k] - previous - 1;
    previous = W[k];
  }
  return d;
}

GapWorkCounts gap_work_counts() {
  return {g_table_products.load(), g_kernel_reads.load()};
}

void reset_gap_work_counts() {
  g_table_products = 0;
  g_kernel_reads = 0;
}

FitResult fit_gaps(const Dataset& data, const PsiInput& psi_input, const GibbsConfig& config) {
  using namespace detail;
  config.validate();
  if (!psi_input.all_known() && config.psi_mode == PsiMode::fixed) {
    throw std::invalid_argument("partially known psi requires psi_mode sample-missing or sample-all");
  }
  const int n = config.resolved_states();
  if (psi_input.values.size() != n) throw std::invalid_argument("psi length differs from n_states");
  const Sentences sentences = collect_sentences(data);
  const int m = static_cast<int>(sentences.os.size());

  Vector psi = psi_input.values;
  int s_max = config.s_max;
  if (s_max == 0) {
    Vector bound = psi;
    for (int s = 0; s < n; ++s) {
      if (!psi_input.known[s] && config.psi_mode != PsiMode::fixed) bound[s] = 1.0;
    }
    if (config.psi_mode == PsiMode::sample_all) bound.setOnes();
    s_max = default_s_max(bound);
  }

  Rng init_rng = global_rng(config, 0, 0);
  EmissionSampler emission(config, n, sentences.os, init_rng);
  Matrix T = config.fixed_model ? config.fixed_model->T() : random_transition(n, init_rng);
  Vector initial = config.fixed_model ? config.fixed_model->initial() : Vector::Constant(n, 1.0 / n);
  // Bumped whenever T or psi changes; tables must carry the current value.
  std::uint64_t version = 1;
  GapTables tables = build_gap_tables(T, psi, s_max, initial, version);

  std::vector<GapSeq> ds(m);
  std::vector<StateSeq> walks(m);
  std::vector<Placement> condensed(m);
  for (int i = 0; i < m; ++i) {
    ds[i].assign(sentences.os[i].size(), 0);
    condensed[i] = identity_placement(static_cast<int>(sentences.os[i].size()));
  }
  parallel_for(m, config.threads, [&](int i) {
    Rng rng = sentence_rng(config, 0, i, 1);
    walks[i] = sample_x_walk(tables, ds[i], sentences.os[i], emission.current(), rng);
    ds[i] = sample_gaps(tables, walks[i], rng);
  });

  std::vector<Placement> ws(m);
  std::vector<int> lengths(m);
  std::vector<StateSeq> full(m);
  PosteriorAccumulator posterior;
  std::vector<DiagnosticRow> diagnostics;
  diagnostics.reserve(config.n_iterations);
  for (int it = 1; it <= config.n_iterations; ++it) {
    {
      Rng rng = global_rng(config, it, 1);
      emission.resample(walks, condensed, sentences.os, rng);
    }
    for (int i = 0; i < m; ++i) {
      PlacementFromGaps p = placement_from_gaps(ds[i]);
      ws[i] = std::move(p.W);
      lengths[i] = p.N;
    }
    {
      const HmmModel model = assemble_model(T, emission.current(), initial);
      parallel_for(m, config.threads, [&](int i) {
        Rng rng = sentence_rng(config, it, i, 2);
        full[i] = sample_X_given_W(model, sentences.os[i], ws[i], lengths[i], psi, rng);
      });
    }
    if (!config.fixed_model) {
      Rng rng = global_rng(config, it, 2);
      T = sample_T(full, n, config.dirichlet_alpha, rng);
      initial = sample_initial(full, n, config.dirichlet_alpha, rng);
      ++version;
    }
    const HmmModel model = assemble_model(T, emission.current(), initial);
    if (tables.version != version) tables = build_gap_tables(T, psi, s_max, initial, version);
    parallel_for(m, config.threads, [&](int i) {
      if (tables.version != version) throw std::logic_error("stale gap tables");
      Rng rng = sentence_rng(config, it, i, 3);
      walks[i] = sample_x_walk(tables, ds[i], sentences.os[i], model.emission(), rng);
      ds[i] = sample_gaps(tables, walks[i], rng);
    });

    const Vector previous_psi = psi;
    {
      Rng rng = global_rng(config, it, 5);
      psi = sample_psi(full, ws, psi, psi_input.known, config.psi_prior_a, config.psi_prior_b, config.psi_mode,
                       rng);
    }
    if (psi != previous_psi) tables = build_gap_tables(T, psi, s_max, initial, ++version);

    double ll = 0.0;
    for (int i = 0; i < m; ++i) ll += joint_loglik(sentences.os[i], full[i], ws[i], model, psi);
    diagnostics.push_back({it, ll / m, truth_l1(config, model)});
    if (keep_sample(config, it)) posterior.add(T, emission.current(), initial, psi);
  }
  return posterior.finish(std::move(diagnostics), sentences.skipped);
}

}  // namespace hmmop
