#include "hmmop/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hmmop/analytic.hpp"
#include "hmmop/baselines.hpp"
#include "hmmop/gaps.hpp"
#include "hmmop/inference.hpp"
#include "hmmop/io.hpp"
#include "hmmop/matching.hpp"
#include "placement_engine.hpp"

namespace hmmop {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Benchmark models

bool is_irreducible(const Matrix& T) {
  const Eigen::Index n = T.rows();
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = transpose ? T(j, i) : T(i, j);
        if (w > 0.0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(false) && reaches_all(true);
}

HmmModel make_synthetic_degree(int degree, Rng& rng, int n_states, double sd) {
  if (n_states < 1) throw std::invalid_argument("n_states must be positive");
  if (degree < 1 || degree > n_states) throw std::invalid_argument("degree must lie in [1, n_states]");
  std::vector<int> targets(n_states);
  const Vector alpha = Vector::Ones(degree);
  constexpr int kMaxAttempts = 1000;
  Matrix T = Matrix::Zero(n_states, n_states);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    T.setZero();
    for (int i = 0; i < n_states; ++i) {
      std::iota(targets.begin(), targets.end(), 0);
      std::shuffle(targets.begin(), targets.end(), rng);
      const Vector w = sample_dirichlet(alpha, rng);
      for (int j = 0; j < degree; ++j) T(i, targets[j]) = w[j];
    }
    if (degree < 2 || is_irreducible(T)) break;
  }
  Vector means(n_states);
  for (int i = 0; i < n_states; ++i) means[i] = i;
  return HmmModel(TransitionMatrix(T), EmissionModel::gaussian(means, sd),
                  Vector::Constant(n_states, 1.0 / n_states));
}

HmmModel make_cyclic_multipartite(Rng& rng, double sd) {
  constexpr int kGroups = 5;
  constexpr int kGroupSize = 5;
  constexpr int n = kGroups * kGroupSize;
  Matrix T = Matrix::Zero(n, n);
  const Vector alpha = Vector::Ones(kGroupSize);
  for (int i = 0; i < n; ++i) {
    const int next = (i / kGroupSize + 1) % kGroups;
    const Vector w = sample_dirichlet(alpha, rng);
    for (int j = 0; j < kGroupSize; ++j) T(i, next * kGroupSize + j) = w[j];
  }
  Vector means(n);
  for (int i = 0; i < n; ++i) means[i] = i;
  return HmmModel(TransitionMatrix(T), EmissionModel::gaussian(means, sd), Vector::Constant(n, 1.0 / n));
}

// ---------------------------------------------------------------------------
// Tagged corpus

PosCorpus ingest_pos_counts(const std::string& path, int max_vocabulary) {
  if (max_vocabulary < 1) throw std::invalid_argument("max_vocabulary must be positive");
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open corpus " + path);

  std::vector<std::vector<std::pair<std::string, std::string>>> sentences;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<std::pair<std::string, std::string>> sentence;
    std::string token;
    while (tokens >> token) {
      const auto slash = token.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == token.size()) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed token '" + token + "'");
      }
      sentence.emplace_back(token.substr(0, slash), token.substr(slash + 1));
    }
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
  }
  if (sentences.empty()) throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": corpus has no tokens");

  std::set<std::string> tag_set;
  std::map<std::string, long> word_counts;
  for (const auto& s : sentences) {
    for (const auto& [word, tag] : s) {
      tag_set.insert(tag);
      ++word_counts[word];
    }
  }
  PosCorpus out{HmmModel(TransitionMatrix(Matrix::Identity(1, 1)), EmissionModel::gaussian(Vector::Zero(1), 1.0),
                         Vector::Ones(1)),
                {tag_set.begin(), tag_set.end()}, {}, {}, {}, {}};
  std::vector<std::pair<std::string, long>> ranked(word_counts.begin(), word_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(ranked.size()) > max_vocabulary) ranked.resize(max_vocabulary);
  std::map<std::string, int> word_index;
  for (const auto& [word, count] : ranked) {
    word_index[word] = static_cast<int>(out.vocabulary.size());
    out.vocabulary.push_back(word);
  }
  const int oov = static_cast<int>(out.vocabulary.size());
  out.vocabulary.push_back("<oov>");
  std::map<std::string, int> tag_index;
  for (std::size_t i = 0; i < out.tags.size(); ++i) tag_index[out.tags[i]] = static_cast<int>(i);

  const int n = static_cast<int>(out.tags.size());
  const int V = static_cast<int>(out.vocabulary.size());
  out.transition_counts = Matrix::Zero(n, n);
  out.emission_counts = Matrix::Zero(n, V);
  out.initial_counts = Vector::Zero(n);
  for (const auto& s : sentences) {
    int previous = -1;
    for (const auto& [word, tag] : s) {
      const int t = tag_index.at(tag);
      const auto w = word_index.find(word);
      out.emission_counts(t, w == word_index.end() ? oov : w->second) += 1.0;
      if (previous < 0) {
        out.initial_counts[t] += 1.0;
      } else {
        out.transition_counts(previous, t) += 1.0;
      }
      previous = t;
    }
  }
  Matrix T = out.transition_counts.array() + 1.0;
  for (int i = 0; i < n; ++i) T.row(i) /= T.row(i).sum();
  Matrix E = out.emission_counts.array() + 1.0;
  for (int i = 0; i < n; ++i) E.row(i) /= E.row(i).sum();
  Vector init = out.initial_counts.array() + 1.0;
  init /= init.sum();
  out.model = HmmModel(TransitionMatrix(T), EmissionModel::categorical(E), init);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment spec

namespace {

const std::vector<std::pair<Method, std::string>> kMethodNames = {
    {Method::naive, "naive"},           {Method::matching, "matching"},
    {Method::gaps, "gaps"},             {Method::known_w, "known-w"},
    {Method::semi_analytic, "semi-analytic"}, {Method::random_w, "random-w"},
    {Method::equivalent_w, "equivalent-w"},   {Method::consecutive_w, "consecutive-w"}};

const std::set<std::string> kKinds = {"reconstruction", "labeling", "convergence"};
const std::set<std::string> kOmissions = {"constant", "state-dependent", "per-sentence-normal", "markov"};
const std::set<std::string> kSweeps = {"", "p_c", "epsilon", "sigma", "psi-missing-fraction", "provided-p_c"};

AcceptanceRule parse_acceptance(const std::string& s) {
  if (s == "full-product") return AcceptanceRule::full_product;
  if (s == "per-component") return AcceptanceRule::per_component;
  if (s == "gibbs") return AcceptanceRule::gibbs;
  throw std::invalid_argument("unknown acceptance rule '" + s + "'");
}

MuPosterior parse_mu_posterior(const std::string& s) {
  if (s == "paper-literal") return MuPosterior::paper_literal;
  if (s == "corrected") return MuPosterior::corrected;
  throw std::invalid_argument("unknown mu posterior '" + s + "'");
}

Imputation parse_imputation(const std::string& s) {
  if (s == "none") return Imputation::none;
  if (s == "sampling") return Imputation::sampling;
  if (s == "random") return Imputation::random;
  throw std::invalid_argument("unknown imputation '" + s + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_gibbs(const json& g, GibbsConfig& out, bool with_emission) {
  std::set<std::string> keys{"iterations",      "burn_in",     "thinning",   "inner_steps",
                             "s_max",           "acceptance",  "mu_posterior", "dirichlet_alpha",
                             "psi_prior_a",     "psi_prior_b"};
  if (with_emission) keys.insert({"n_states", "emission_sd", "vocabulary", "emission_alpha"});
  check_keys(g, keys, "gibbs");
  read_opt(g, "iterations", out.n_iterations);
  read_opt(g, "burn_in", out.burn_in);
  read_opt(g, "thinning", out.thinning);
  read_opt(g, "inner_steps", out.mh_inner_steps);
  read_opt(g, "s_max", out.s_max);
  if (g.contains("acceptance")) out.acceptance = parse_acceptance(g.at("acceptance").get<std::string>());
  if (g.contains("mu_posterior")) out.mu_posterior = parse_mu_posterior(g.at("mu_posterior").get<std::string>());
  read_opt(g, "dirichlet_alpha", out.dirichlet_alpha);
  read_opt(g, "psi_prior_a", out.psi_prior_a);
  read_opt(g, "psi_prior_b", out.psi_prior_b);
  if (with_emission) {
    read_opt(g, "n_states", out.n_states);
    read_opt(g, "emission_sd", out.emission_sd);
    read_opt(g, "vocabulary", out.vocabulary);
    read_opt(g, "emission_alpha", out.emission_alpha);
  }
}

int parse_degree(const std::string& model_id) {
  const std::string prefix = "synthetic-degree-";
  if (model_id.rfind(prefix, 0) != 0) return 0;
  try {
    std::size_t used = 0;
    const int d = std::stoi(model_id.substr(prefix.size()), &used);
    if (used + prefix.size() != model_id.size()) return 0;
    return d;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

std::string method_name(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  throw std::logic_error("unnamed method");
}

Method parse_method(const std::string& name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (!kKinds.count(kind)) throw std::invalid_argument("unknown experiment kind '" + kind + "'");
  if (!kOmissions.count(omission)) throw std::invalid_argument("unknown omission '" + omission + "'");
  if (!kSweeps.count(sweep_param)) throw std::invalid_argument("unknown sweep parameter '" + sweep_param + "'");
  if (sweep_param.empty() != sweep_values.empty()) {
    throw std::invalid_argument("sweep needs both a parameter and values");
  }
  if (model_id != "cyclic-multipartite" && model_id != "pos" && model_id != "custom" && parse_degree(model_id) <= 0) {
    throw std::invalid_argument("unknown model_id '" + model_id + "'");
  }
  if (parse_degree(model_id) > n_states) throw std::invalid_argument("degree exceeds n_states");
  if ((model_id == "custom") && model_path.empty()) throw std::invalid_argument("custom model needs model_path");
  if (n_sentences < 1 || sentence_length < 1) throw std::invalid_argument("n_sentences and sentence_length must be positive");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
  if (methods.empty() && kind != "labeling") throw std::invalid_argument("methods must be non-empty");
  if (provide != "true" && provide != "empirical-pc") throw std::invalid_argument("provide must be true or empirical-pc");
  if (!(emission_sd > 0.0)) throw std::invalid_argument("emission_sd must be positive");
  if (!(psi_low >= 0.0 && psi_low <= psi_high && psi_high <= 1.0)) throw std::invalid_argument("invalid psi range");
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  for (int s : inner_steps) {
    if (s < 1) throw std::invalid_argument("inner_steps must be at least 1");
  }
  auto check_value = [&](const std::string& param, double v) {
    if (param == "p_c" || param == "provided-p_c") {
      if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(param + " must lie in (0, 1]");
    } else if (param == "epsilon") {
      if (!(v >= 0.0 && v <= 0.5)) throw std::invalid_argument("epsilon must lie in [0, 0.5]");
    } else if (param == "sigma") {
      if (!(v >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
      if (omission != "per-sentence-normal" && !(v > 0.0)) throw std::invalid_argument("emission sigma must be positive");
    } else if (param == "psi-missing-fraction") {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("psi-missing-fraction must lie in [0, 1]");
    }
  };
  check_value("p_c", p_c);
  check_value("epsilon", epsilon);
  check_value("psi-missing-fraction", missing_fraction);
  if (provided_p_c) check_value("provided-p_c", *provided_p_c);
  for (double v : sweep_values) check_value(sweep_param, v);
  GibbsConfig g = gibbs;
  g.n_states = 1;
  g.validate();
}

GibbsConfig parse_gibbs_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  GibbsConfig g;
  try {
    read_gibbs(j, g, true);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config field has the wrong type: ") + e.what());
  }
  return g;
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
  check_keys(j,
             {"kind", "model_id", "model_path", "n_states", "pos_vocabulary", "emission_sd", "non_hidden",
              "n_sentences", "sentence_length", "paper_scale", "omission", "p_c", "epsilon", "pc_sigma", "psi_low",
              "psi_high", "missing_fraction", "provided_p_c", "provide", "imputation", "methods", "sweep",
              "replications", "seed", "threads", "timing", "gibbs", "inner_steps", "max_rounds"},
             "spec");
  ExperimentSpec s;
  try {
    read_opt(j, "kind", s.kind);
    read_opt(j, "model_id", s.model_id);
    read_opt(j, "model_path", s.model_path);
    read_opt(j, "n_states", s.n_states);
    read_opt(j, "pos_vocabulary", s.pos_vocabulary);
    read_opt(j, "emission_sd", s.emission_sd);
    read_opt(j, "non_hidden", s.non_hidden);
    if (j.value("paper_scale", false)) {
      s.n_sentences = 1500;
      s.sentence_length = 80;
    }
    read_opt(j, "n_sentences", s.n_sentences);
    read_opt(j, "sentence_length", s.sentence_length);
    read_opt(j, "omission", s.omission);
    read_opt(j, "p_c", s.p_c);
    read_opt(j, "epsilon", s.epsilon);
    read_opt(j, "pc_sigma", s.pc_sigma);
    read_opt(j, "psi_low", s.psi_low);
    read_opt(j, "psi_high", s.psi_high);
    read_opt(j, "missing_fraction", s.missing_fraction);
    if (j.contains("provided_p_c") && !j.at("provided_p_c").is_null()) s.provided_p_c = j.at("provided_p_c").get<double>();
    read_opt(j, "provide", s.provide);
    if (j.contains("imputation")) s.imputation = parse_imputation(j.at("imputation").get<std::string>());
    if (j.contains("methods")) {
      s.methods.clear();
      for (const auto& m : j.at("methods")) s.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("sweep")) {
      const json& sw = j.at("sweep");
      check_keys(sw, {"param", "values"}, "sweep");
      s.sweep_param = sw.at("param").get<std::string>();
      s.sweep_values = sw.at("values").get<std::vector<double>>();
    }
    read_opt(j, "replications", s.replications);
    read_opt(j, "seed", s.seed);
    read_opt(j, "threads", s.threads);
    read_opt(j, "timing", s.timing);
    read_opt(j, "inner_steps", s.inner_steps);
    read_opt(j, "max_rounds", s.max_rounds);
    if (j.contains("gibbs")) read_gibbs(j.at("gibbs"), s.gibbs, false);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("spec field has the wrong type: ") + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Experiment cells

namespace {

// Seed tags keep model, data, psi, transform and fit streams independent.
enum SeedTag : std::uint64_t { kModelSeed = 1, kDataSeed = 2, kPsiSeed = 3, kTransformSeed = 4, kFitSeed = 5 };

struct CellSettings {
  double p_c;
  double epsilon;
  double pc_sigma;
  double emission_sd;
  double missing_fraction;
  std::optional<double> provided_p_c;
};

CellSettings cell_settings(const ExperimentSpec& spec, std::optional<double> value) {
  CellSettings c{spec.p_c, spec.epsilon, spec.pc_sigma, spec.emission_sd, spec.missing_fraction, spec.provided_p_c};
  if (!value) return c;
  const std::string& p = spec.sweep_param;
  if (p == "p_c") c.p_c = *value;
  if (p == "epsilon") c.epsilon = *value;
  if (p == "sigma") (spec.omission == "per-sentence-normal" ? c.pc_sigma : c.emission_sd) = *value;
  if (p == "psi-missing-fraction") c.missing_fraction = *value;
  if (p == "provided-p_c") c.provided_p_c = *value;
  return c;
}

HmmModel with_emission_sd(const HmmModel& m, double sd) {
  if (!m.emission().is_gaussian()) return m;
  return HmmModel(m.transition(), EmissionModel::gaussian(m.emission().as_gaussian().means, sd), m.initial());
}

HmmModel identity_emission(const HmmModel& m) {
  const int n = m.n_states();
  return HmmModel(m.transition(), EmissionModel::categorical(Matrix::Identity(n, n)), m.initial());
}

struct CellTruth {
  OmissionSpec omission;
  Vector psi;  // per-state omission probability in force
};

CellTruth cell_truth(const ExperimentSpec& spec, const CellSettings& c, int n, std::uint64_t psi_seed) {
  if (spec.omission == "constant") return {OmissionSpec::constant(c.p_c), Vector::Constant(n, 1.0 - c.p_c)};
  if (spec.omission == "markov") return {OmissionSpec::markov(c.p_c, c.epsilon), Vector::Constant(n, 1.0 - c.p_c)};
  if (spec.omission == "per-sentence-normal") {
    return {OmissionSpec::per_sentence_normal(c.p_c, c.pc_sigma), Vector::Constant(n, 1.0 - c.p_c)};
  }
  const bool centered = spec.sweep_param == "epsilon" || spec.epsilon > 0.0;
  const double lo = centered ? 0.5 - c.epsilon : spec.psi_low;
  const double hi = centered ? 0.5 + c.epsilon : spec.psi_high;
  Rng rng(psi_seed);
  Vector psi(n);
  for (int s = 0; s < n; ++s) psi[s] = lo + (hi - lo) * uniform01(rng);
  return {OmissionSpec::state_dependent(psi), psi};
}

struct CellKnowledge {
  PsiInput psi;
  PsiMode mode = PsiMode::fixed;
};

double empirical_keep(const Dataset& data) {
  double kept = 0.0, total = 0.0;
  for (const auto& s : data) {
    kept += static_cast<double>(s.O.size());
    total += *s.N;
  }
  return total > 0.0 ? kept / total : 1.0;
}

CellKnowledge cell_knowledge(const ExperimentSpec& spec, const CellSettings& c, const CellTruth& truth,
                             const Dataset& data, std::uint64_t psi_seed) {
  const int n = static_cast<int>(truth.psi.size());
  if (c.provided_p_c) return {PsiInput::constant_keep(n, *c.provided_p_c)};
  if (spec.provide == "empirical-pc") return {PsiInput::constant_keep(n, empirical_keep(data))};
  Vector values = truth.psi;
  if (c.missing_fraction <= 0.0 || spec.imputation == Imputation::none) return {PsiInput::full(values)};

  Rng rng(derive_seed(psi_seed, 1));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int hidden = std::min(n, static_cast<int>(std::ceil(c.missing_fraction * n - 1e-12)));
  std::vector<bool> known(n, true);
  for (int i = 0; i < hidden; ++i) known[order[i]] = false;
  if (spec.imputation == Imputation::random) {
    for (int s = 0; s < n; ++s) {
      if (!known[s]) values[s] = uniform01(rng);
    }
    return {PsiInput::full(values)};
  }
  for (int s = 0; s < n; ++s) {
    if (!known[s]) values[s] = 0.5;
  }
  return {PsiInput::partial(values, known), PsiMode::sample_missing};
}

GibbsConfig fit_config(const ExperimentSpec& spec, const HmmModel& truth, std::uint64_t seed, int threads) {
  GibbsConfig g = spec.gibbs;
  g.n_states = truth.n_states();
  g.seed = seed;
  g.threads = threads;
  if (truth.emission().is_gaussian()) {
    g.emission_sd = truth.emission().as_gaussian().sd;
  } else {
    g.vocabulary = truth.emission().vocabulary_size();
  }
  if (spec.non_hidden) g.fixed_emission = truth.emission();
  return g;
}

double aligned_l1(const Matrix& learned_T, const HmmModel& learned, const HmmModel& truth) {
  const auto perm = align_states(learned, truth);
  return l1_transition_distance(permute_matrix(learned_T, perm), truth.T());
}

double fit_and_score(Method method, const Dataset& data, const HmmModel& truth, const CellKnowledge& know,
                     const GibbsConfig& base, std::uint64_t transform_seed) {
  GibbsConfig config = base;
  config.psi_mode = know.mode;
  auto score = [&](const FitResult& r) { return aligned_l1(r.model.T(), r.model, truth); };
  switch (method) {
    case Method::naive:
      return score(fit_naive(strip_placements(data, false), config));
    case Method::known_w:
      return score(fit_known_w(data, know.psi, config));
    case Method::matching:
      return score(fit_matching(strip_placements(data, true), know.psi, config));
    case Method::gaps:
      return score(fit_gaps(strip_placements(data, false), know.psi, config));
    case Method::semi_analytic: {
      const double p_c = 1.0 - know.psi.values.mean();
      const SemiAnalyticResult r = semi_analytic_reconstruct(
          strip_placements(data, false), p_c, [&](const Dataset& d) { return fit_naive(d, config).model; });
      return aligned_l1(r.inversion.transition, r.naive, truth);
    }
    case Method::random_w:
    case Method::equivalent_w:
    case Method::consecutive_w: {
      Rng rng(transform_seed);
      const WTransform kind = method == Method::random_w       ? WTransform::random
                              : method == Method::equivalent_w ? WTransform::equivalent
                                                               : WTransform::consecutive;
      return score(fit_known_w(transform_placements(data, kind, rng), know.psi, config));
    }
  }
  throw std::logic_error("unhandled method");
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct Cell {
  int sweep_index;
  std::optional<double> value;
  int replication;
};

std::vector<Cell> experiment_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  const int values = spec.sweep_values.empty() ? 1 : static_cast<int>(spec.sweep_values.size());
  for (int v = 0; v < values; ++v) {
    for (int r = 0; r < spec.replications; ++r) {
      std::optional<double> value;
      if (!spec.sweep_values.empty()) value = spec.sweep_values[v];
      cells.push_back({v, value, r});
    }
  }
  return cells;
}

using Clock = std::chrono::steady_clock;

}  // namespace

HmmModel experiment_model(const ExperimentSpec& spec, int replication) {
  Rng rng = make_rng(spec.seed, kModelSeed, static_cast<std::uint64_t>(replication));
  HmmModel model = [&] {
    if (spec.model_id == "cyclic-multipartite") return make_cyclic_multipartite(rng, spec.emission_sd);
    if (spec.model_id == "pos") {
      const std::string path = spec.model_path.empty() ? std::string("data/pos_fixture.txt") : spec.model_path;
      return ingest_pos_counts(path, spec.pos_vocabulary).model;
    }
    if (spec.model_id == "custom") return read_model_file(spec.model_path);
    return make_synthetic_degree(parse_degree(spec.model_id), rng, spec.n_states, spec.emission_sd);
  }();
  return spec.non_hidden ? identity_emission(model) : model;
}

Dataset experiment_dataset(const ExperimentSpec& spec, const HmmModel& model, const OmissionSpec& omission,
                           std::uint64_t data_seed, std::vector<ObsSeq>* full_obs) {
  Dataset data;
  data.reserve(spec.n_sentences);
  if (full_obs) full_obs->clear();
  for (int i = 0; i < spec.n_sentences; ++i) {
    Rng rng = make_rng(data_seed, static_cast<std::uint64_t>(i));
    auto [x, u] = sample_trajectory(model, spec.sentence_length, rng);
    data.push_back(apply_omission(x, u, omission, rng));
    if (full_obs) full_obs->push_back(std::move(u));
  }
  return data;
}

LabelAccuracy label_accuracy(const HmmModel& model, const Dataset& data, const std::vector<ObsSeq>& full_obs,
                             const Vector& psi, int max_rounds, int threads) {
  if (full_obs.size() != data.size()) throw std::invalid_argument("one full observation sequence per sentence required");
  const int m = static_cast<int>(data.size());
  std::vector<LabelAccuracy> per(m);
  std::vector<char> used(m, 0);
  const Vector no_omission = Vector::Zero(model.n_states());
  detail::parallel_for(m, threads, [&](int i) {
    const OmittedSentence& s = data[i];
    if (!s.W || !s.N || !s.X) throw std::invalid_argument("labeling needs W, N and X on every sentence");
    const int K = static_cast<int>(s.O.size());
    if (K == 0) return;
    used[i] = 1;
    const Placement& W = *s.W;
    auto accuracy = [&](const StateSeq& labels) {
      int hits = 0;
      for (int k = 0; k < K; ++k) hits += labels[k] == (*s.X)[W[k]];
      return static_cast<double>(hits) / K;
    };
    auto at_w = [&](const StateSeq& x) {
      StateSeq labels(K);
      for (int k = 0; k < K; ++k) labels[k] = x[W[k]];
      return labels;
    };
    const int N = *s.N;
    per[i].full = accuracy(at_w(decode_known_w(model, full_obs[i], identity_placement(N), N, no_omission)));
    per[i].known_w = accuracy(at_w(decode_known_w(model, s.O, W, N, psi)));
    per[i].hmmop = accuracy(label_sequence(model, s.O, N, psi, max_rounds).labels);
    per[i].naive = accuracy(decode_known_w(model, s.O, identity_placement(K), K, no_omission));
  });
  LabelAccuracy mean;
  int count = 0;
  for (int i = 0; i < m; ++i) {
    if (!used[i]) continue;
    mean.full += per[i].full;
    mean.known_w += per[i].known_w;
    mean.hmmop += per[i].hmmop;
    mean.naive += per[i].naive;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no non-empty sentences to label");
  mean.full /= count;
  mean.known_w /= count;
  mean.hmmop /= count;
  mean.naive /= count;
  return mean;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.kind == "convergence") throw std::invalid_argument("convergence experiments produce convergence rows");
  const std::vector<Cell> cells = experiment_cells(spec);
  const bool labeling = spec.kind == "labeling";
  const std::vector<std::string> label_methods{"full", "known-w", "hmmop", "naive"};
  const std::size_t per_cell = labeling ? label_methods.size() : spec.methods.size();
  std::vector<ResultRow> rows(cells.size() * per_cell);
  const int cell_threads = spec.threads;

  detail::parallel_for(static_cast<int>(cells.size()), cell_threads, [&](int ci) {
    const Cell& cell = cells[ci];
    const auto idx = static_cast<std::uint64_t>(cell.sweep_index);
    const auto rep = static_cast<std::uint64_t>(cell.replication);
    const std::uint64_t data_seed = derive_seed(spec.seed, kDataSeed, idx, rep);
    const std::uint64_t psi_seed = derive_seed(spec.seed, kPsiSeed, idx, rep);
    const std::uint64_t fit_seed = derive_seed(spec.seed, kFitSeed, idx, rep);
    const std::uint64_t transform_seed = derive_seed(spec.seed, kTransformSeed, idx, rep);
    ResultRow base;
    base.model_id = spec.model_id;
    base.sweep_param = spec.sweep_param.empty() ? "none" : spec.sweep_param;
    base.sweep_value = cell.value.value_or(0.0);
    base.replication = cell.replication;
    base.seed = fit_seed;
    for (std::size_t k = 0; k < per_cell; ++k) {
      rows[ci * per_cell + k] = base;
      rows[ci * per_cell + k].method = labeling ? label_methods[k] : method_name(spec.methods[k]);
    }
    try {
      const CellSettings settings = cell_settings(spec, cell.value);
      const HmmModel truth = with_emission_sd(experiment_model(spec, cell.replication), settings.emission_sd);
      const CellTruth omission = cell_truth(spec, settings, truth.n_states(), psi_seed);
      std::vector<ObsSeq> full_obs;
      const Dataset data = experiment_dataset(spec, truth, omission.omission, data_seed, labeling ? &full_obs : nullptr);
      const std::uint64_t hash = dataset_hash(data);

      if (labeling) {
        const auto start = Clock::now();
        const LabelAccuracy acc = label_accuracy(truth, data, full_obs, omission.psi, spec.max_rounds, 1);
        const double seconds = spec.timing ? std::chrono::duration<double>(Clock::now() - start).count() : 0.0;
        const double values[] = {acc.full, acc.known_w, acc.hmmop, acc.naive};
        for (std::size_t k = 0; k < per_cell; ++k) {
          rows[ci * per_cell + k].metric = values[k];
          rows[ci * per_cell + k].seconds = seconds;
        }
        return;
      }

      const CellKnowledge know = cell_knowledge(spec, settings, omission, data, psi_seed);
      const GibbsConfig config = fit_config(spec, truth, fit_seed, cells.size() > 1 ? 1 : spec.threads);
      for (std::size_t k = 0; k < per_cell; ++k) {
        ResultRow& row = rows[ci * per_cell + k];
        const auto start = Clock::now();
        try {
          row.metric = fit_and_score(spec.methods[k], data, truth, know, config, transform_seed);
        } catch (const std::exception& e) {
          row.metric = std::nan("");
          row.status = std::string("error: ") + e.what();
        }
        if (spec.timing) row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (dataset_hash(data) != hash) throw std::logic_error("dataset changed between methods");
      }
    } catch (const std::exception& e) {
      for (std::size_t k = 0; k < per_cell; ++k) {
        rows[ci * per_cell + k].metric = std::nan("");
        rows[ci * per_cell + k].status = std::string("error: ") + e.what();
      }
    }
  });
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows, const std::string& metric_column) {
  std::ostringstream out;
  out << "model_id,method,sweep_param,sweep_value,replication," << metric_column << ",seconds,seed,status\n";
  for (const ResultRow& r : rows) {
    out << csv_field(r.model_id) << ',' << csv_field(r.method) << ',' << csv_field(r.sweep_param) << ','
        << csv_number(r.sweep_value) << ',' << r.replication << ',' << csv_number(r.metric) << ','
        << csv_number(r.seconds) << ',' << r.seed << ',' << csv_field(r.status) << '\n';
  }
  return out.str();
}

std::vector<ConvergenceRow> placement_convergence_experiment(const HmmModel& truth, const Dataset& data,
                                                             const std::vector<Method>& methods,
                                                             const std::vector<int>& inner_steps, const Vector& psi,
                                                             int iterations, std::uint64_t seed, int threads) {
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  GibbsConfig config;
  config.n_states = truth.n_states();
  config.fixed_model = truth;
  config.n_iterations = iterations;
  config.burn_in = 0;
  config.seed = seed;
  config.threads = threads;
  const PsiInput known = PsiInput::full(psi);
  std::vector<ConvergenceRow> rows;
  auto record = [&](const std::string& name, int steps, const FitResult& r) {
    for (const DiagnosticRow& d : r.diagnostics) rows.push_back({name, 0, steps, d.iteration, d.mean_loglik});
  };
  for (Method m : methods) {
    if (m == Method::gaps) {
      record("gaps", 1, fit_gaps(strip_placements(data, false), known, config));
    } else if (m == Method::matching) {
      for (int steps : inner_steps) {
        GibbsConfig c = config;
        c.mh_inner_steps = steps;
        record("matching", steps, fit_matching(strip_placements(data, true), known, c));
      }
    } else {
      throw std::invalid_argument("convergence runs support matching and gaps only");
    }
  }
  return rows;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream out;
  out << "method,replication,inner_steps,iteration,mean_loglik\n";
  for (const ConvergenceRow& r : rows) {
    out << r.method << ',' << r.replication << ',' << r.inner_steps << ',' << r.iteration << ','
        << csv_number(r.mean_loglik) << '\n';
  }
  return out.str();
}

std::vector<ResultRow> psi_imputation_experiment(const ExperimentSpec& spec) {
  if (spec.sweep_param != "psi-missing-fraction") {
    throw std::invalid_argument("psi imputation experiments sweep psi-missing-fraction");
  }
  if (spec.omission != "state-dependent") throw std::invalid_argument("psi imputation needs state-dependent omission");
  return run_experiment(spec);
}

std::string run_experiment_csv(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.kind == "labeling") return results_csv(run_experiment(spec), "accuracy");
  if (spec.kind == "reconstruction") return results_csv(run_experiment(spec), "l1");

  std::vector<ConvergenceRow> all;
  for (int r = 0; r < spec.replications; ++r) {
    const CellSettings settings = cell_settings(spec, spec.sweep_values.empty()
                                                          ? std::nullopt
                                                          : std::optional<double>(spec.sweep_values.front()));
    const HmmModel truth = with_emission_sd(experiment_model(spec, r), settings.emission_sd);
    const auto rep = static_cast<std::uint64_t>(r);
    const CellTruth omission = cell_truth(spec, settings, truth.n_states(), derive_seed(spec.seed, kPsiSeed, 0, rep));
    const Dataset data = experiment_dataset(spec, truth, omission.omission, derive_seed(spec.seed, kDataSeed, 0, rep));
    auto rows = placement_convergence_experiment(truth, data, spec.methods, spec.inner_steps, omission.psi,
                                                 spec.gibbs.n_iterations, derive_seed(spec.seed, kFitSeed, 0, rep),
                                                 spec.threads);
    for (auto& row : rows) row.replication = r;
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return convergence_csv(all);
}

}  // namespace hmmop
