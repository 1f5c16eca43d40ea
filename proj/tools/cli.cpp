#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmmop/analytic.hpp"
#include "hmmop/baselines.hpp"
#include "hmmop/bench.hpp"
#include "hmmop/gaps.hpp"
#include "hmmop/inference.hpp"
#include "hmmop/io.hpp"
#include "hmmop/matching.hpp"

namespace hmmop::cli {

namespace {

using nlohmann::json;

// Raised for bad flags or inputs; maps to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HMMOP_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("HMMOP_SEED is not an unsigned integer");
    }
  }
  return 1;
}

HmmModel load_model(const std::string& path) { return read_model_file(path); }

// --psi file, --p-c value, or the psi stored in the model file.
struct PsiChoice {
  std::string psi_file;
  std::optional<double> p_c;
};

std::optional<PsiInput> resolve_psi(const PsiChoice& c, int n_states) {
  if (!c.psi_file.empty() && c.p_c) throw ValidationError("--psi and --p-c are mutually exclusive");
  if (c.p_c) {
    if (!(*c.p_c > 0.0 && *c.p_c <= 1.0)) throw ValidationError("--p-c must lie in (0, 1]");
    return PsiInput::constant_keep(n_states, *c.p_c);
  }
  if (!c.psi_file.empty()) {
    PsiFile f = read_psi_file(c.psi_file);
    if (f.psi.size() != n_states) throw ValidationError("psi file length differs from the number of states");
    return PsiInput::partial(f.psi, f.known);
  }
  return std::nullopt;
}

PsiMode parse_psi_mode(const std::string& s) {
  if (s == "fixed") return PsiMode::fixed;
  if (s == "sample-missing") return PsiMode::sample_missing;
  if (s == "sample-all") return PsiMode::sample_all;
  throw ValidationError("unknown --psi-mode '" + s + "'");
}

bool carries_placements(const Dataset& data) {
  for (const auto& s : data) {
    if (s.W || s.N || s.X) return true;
  }
  return false;
}

bool carries_w(const Dataset& data) {
  for (const auto& s : data) {
    if (s.W || s.X) return true;
  }
  return false;
}

void fill_lengths(Dataset& data, std::optional<int> n) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].N) continue;
    if (!n) throw ValidationError("sentence " + std::to_string(i) + " has no full length N; pass --n");
    if (*n < static_cast<int>(data[i].O.size())) {
      throw ValidationError("--n is shorter than sentence " + std::to_string(i));
    }
    data[i].N = *n;
  }
}

std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows) {
  std::ostringstream out;
  out << "iteration,mean_loglik,l1\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << number(r.mean_loglik) << ',' << (r.l1 ? number(*r.l1) : "") << '\n';
  }
  return out.str();
}

OmissionSpec make_omission(const std::string& kind, double p_c, double eps, double sigma, const std::string& psi_file,
                           int n_states) {
  if (kind == "constant") return OmissionSpec::constant(p_c);
  if (kind == "markov") return OmissionSpec::markov(p_c, eps);
  if (kind == "per-sentence-normal") return OmissionSpec::per_sentence_normal(p_c, sigma);
  if (kind == "state-dependent") {
    if (psi_file.empty()) throw ValidationError("state-dependent omission needs --psi");
    PsiFile f = read_psi_file(psi_file);
    if (f.psi.size() != n_states) throw ValidationError("psi file length differs from the number of states");
    return OmissionSpec::state_dependent(f.psi);
  }
  throw ValidationError("unknown --omission '" + kind + "'");
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string model_file;
  std::string model_id = "synthetic-degree-5";
  int states = 10;
  double emission_sd = 0.1;
  std::string omission = "constant";
  double p_c = 0.5;
  double eps = 0.0;
  double sigma = 0.0;
  std::string psi_file;
  int sentences = 200;
  int length = 60;
  std::string out;
  std::string model_out;
};

int run_generate(const GenerateArgs& a, std::uint64_t seed, std::ostream& out) {
  ExperimentSpec spec;
  spec.model_id = a.model_file.empty() ? a.model_id : "custom";
  spec.model_path = a.model_file;
  spec.n_states = a.states;
  spec.emission_sd = a.emission_sd;
  spec.n_sentences = a.sentences;
  spec.sentence_length = a.length;
  spec.seed = seed;
  spec.methods = {Method::naive};
  spec.validate();
  const HmmModel model = experiment_model(spec, 0);
  const OmissionSpec omission = make_omission(a.omission, a.p_c, a.eps, a.sigma, a.psi_file, model.n_states());
  const Dataset data = experiment_dataset(spec, model, omission, derive_seed(seed, 2, 0, 0));
  std::ostringstream os;
  write_dataset(os, data);
  emit(a.out, os.str(), out);
  if (!a.model_out.empty()) write_model_file(a.model_out, model);
  return 0;
}

struct FitArgs {
  std::string data_file;
  std::string method;
  int states = 0;
  PsiChoice psi;
  std::optional<int> n;
  std::string psi_mode;
  std::string config_file;
  bool strip = false;
  bool project = false;
  std::string truth_file;
  std::string out;
  std::string diagnostics;
};

int run_fit(const FitArgs& a, std::uint64_t seed, int threads, std::ostream& out) {
  GibbsConfig config = a.config_file.empty() ? GibbsConfig{} : parse_gibbs_config(read_text_file(a.config_file));
  if (a.states > 0) config.n_states = a.states;
  if (config.n_states <= 0) throw ValidationError("number of states unknown; pass --states");
  config.seed = seed;
  config.threads = threads;
  if (!a.truth_file.empty()) config.truth = load_model(a.truth_file);
  config.validate();
  const int n = config.n_states;

  Dataset data = read_dataset_file(a.data_file);
  std::optional<PsiInput> psi = resolve_psi(a.psi, n);
  if (!a.psi_mode.empty()) {
    config.psi_mode = parse_psi_mode(a.psi_mode);
  } else if (psi && !psi->all_known()) {
    config.psi_mode = PsiMode::sample_missing;
  }
  auto need_psi = [&]() -> const PsiInput& {
    if (!psi) throw ValidationError("method " + a.method + " needs --psi or --p-c");
    return *psi;
  };

  std::optional<FitResult> result;
  std::optional<HmmModel> model;
  std::optional<Vector> psi_out;
  if (a.method == "naive") {
    result = fit_naive(data, config);
  } else if (a.method == "known-w") {
    result = fit_known_w(data, need_psi(), config);
  } else if (a.method == "gaps") {
    if (carries_placements(data) && !a.strip) {
      throw ValidationError("dataset carries W/N; gaps must not see them (pass --strip to drop them)");
    }
    result = fit_gaps(strip_placements(data, false), need_psi(), config);
  } else if (a.method == "matching") {
    if (carries_w(data) && !a.strip) {
      throw ValidationError("dataset carries W; matching must not see it (pass --strip to drop it)");
    }
    data = strip_placements(data, true);
    fill_lengths(data, a.n);
    result = fit_matching(data, need_psi(), config);
  } else if (a.method == "semi-analytic") {
    double p_c = 0.0;
    if (a.psi.p_c) {
      p_c = *a.psi.p_c;
    } else {
      p_c = 1.0 - need_psi().values.mean();
    }
    if (!(p_c > 0.0 && p_c <= 1.0)) throw ValidationError("keep probability must lie in (0, 1]");
    const SemiAnalyticResult r = semi_analytic_reconstruct(
        strip_placements(data, false), p_c, [&](const Dataset& d) { return fit_naive(d, config).model; }, a.project);
    if (!r.model) {
      throw std::runtime_error("inverse transform has negative entries (min " + number(r.inversion.most_negative) +
                               "); pass --project");
    }
    model = *r.model;
    psi_out = Vector::Constant(n, 1.0 - p_c);
  } else {
    throw ValidationError("unknown --method '" + a.method + "'");
  }
  if (result) {
    model = result->model;
    psi_out = result->psi;
    if (!a.diagnostics.empty()) write_text_file(a.diagnostics, diagnostics_csv(result->diagnostics));
  }
  emit(a.out, model_to_json(*model, psi_out) + "\n", out);
  return 0;
}

struct InferArgs {
  std::string model_file;
  std::string data_file;
  PsiChoice psi;
  std::optional<int> n;
  int max_rounds = 20;
  int s_max = 0;
  std::string out;
};

int run_infer(const InferArgs& a, std::ostream& out) {
  const std::string model_text = read_text_file(a.model_file);
  const HmmModel model = model_from_json(model_text);
  Vector psi;
  if (auto p = resolve_psi(a.psi, model.n_states())) {
    if (!p->all_known()) throw ValidationError("inference needs every psi entry");
    psi = p->values;
  } else if (auto stored = psi_from_model_json(model_text)) {
    psi = *stored;
  } else {
    throw ValidationError("no psi: pass --psi or --p-c, or store psi in the model file");
  }
  if (a.max_rounds < 1) throw ValidationError("--max-rounds must be at least 1");
  Dataset data = strip_placements(read_dataset_file(a.data_file), true);
  fill_lengths(data, a.n);
  std::ostringstream os;
  for (const auto& s : data) {
    json line;
    if (s.O.empty()) {
      line = {{"labels", json::array()}, {"W", json::array()}, {"rounds", 0}, {"converged", true}};
    } else {
      const LabelResult r = label_sequence(model, s.O, *s.N, psi, a.max_rounds, a.s_max);
      line = {{"labels", r.labels}, {"W", r.W}, {"rounds", r.rounds}, {"converged", r.converged}};
    }
    os << line.dump() << '\n';
  }
  emit(a.out, os.str(), out);
  return 0;
}

struct TransformArgs {
  std::string op;
  std::string model_file;
  double p_c = 0.0;
  std::optional<double> p_q;
  bool project = false;
  std::string out;
};

int run_transform(const TransformArgs& a, std::ostream& out) {
  if (!(a.p_c > 0.0 && a.p_c <= 1.0)) throw ValidationError("--p-c must lie in (0, 1]");
  const HmmModel model = load_model(a.model_file);
  Matrix T;
  if (a.op == "omit") {
    T = omit_transform(model.T(), a.p_c);
  } else if (a.op == "invert") {
    const InversionResult r = invert_omit_transform(model.T(), a.p_c, a.project);
    if (!r.stochastic()) {
      throw std::runtime_error("inverse transform has negative entries (min " + number(r.most_negative) +
                               "); pass --project");
    }
    T = r.transition;
  } else if (a.op == "compose") {
    if (!a.p_q || !(*a.p_q > 0.0 && *a.p_q <= 1.0)) throw ValidationError("compose needs --p-q in (0, 1]");
    T = composed_mismatch(model.T(), *a.p_q, a.p_c);
    if (a.project) {
      T = project_rows_to_simplex(T);
    } else if (T.minCoeff() < -1e-12) {
      throw std::runtime_error("composed transform has negative entries (min " + number(T.minCoeff()) +
                               "); pass --project");
    }
  } else {
    throw ValidationError("unknown transform '" + a.op + "'");
  }
  const HmmModel result(TransitionMatrix(T), model.emission(), model.initial());
  emit(a.out, model_to_json(result) + "\n", out);
  return 0;
}

struct BenchArgs {
  std::string spec_file;
  std::string out;
  bool timing = false;
};

int run_bench(const BenchArgs& a, std::optional<std::uint64_t> seed, std::optional<int> threads,
              std::ostream& out) {
  ExperimentSpec spec = parse_experiment_spec(read_text_file(a.spec_file));
  if (seed) spec.seed = *seed;
  if (threads) spec.threads = *threads;
  if (a.timing) spec.timing = true;
  emit(a.out, run_experiment_csv(spec), out);
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning hidden Markov models from sequences with omitted observations."};
  app.name("hmmop");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::optional<std::uint64_t> seed_flag;
  int threads = 0;
  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", seed_flag, "Random seed (falls back to HMMOP_SEED, then 1)");
  };

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "Simulate a model and an omitted dataset (JSON lines)");
  generate->add_option("--model", gen.model_file, "Model JSON file (overrides --model-id)");
  generate->add_option("--model-id", gen.model_id, "synthetic-degree-<d> | cyclic-multipartite")->capture_default_str();
  generate->add_option("--states", gen.states, "States of a synthetic-degree model")->capture_default_str();
  generate->add_option("--emission-sd", gen.emission_sd, "Gaussian emission sd")->capture_default_str();
  generate->add_option("--omission", gen.omission, "constant | state-dependent | per-sentence-normal | markov")
      ->capture_default_str();
  generate->add_option("--p-c", gen.p_c, "Keep probability (mean for per-sentence-normal)")->capture_default_str();
  generate->add_option("--eps", gen.eps, "Markov omission memory")->capture_default_str();
  generate->add_option("--sigma", gen.sigma, "Spread of the per-sentence keep probability")->capture_default_str();
  generate->add_option("--psi", gen.psi_file, "Psi JSON file for state-dependent omission");
  generate->add_option("--sentences", gen.sentences, "Number of sentences")->capture_default_str();
  generate->add_option("--length", gen.length, "Full sentence length N")->capture_default_str();
  generate->add_option("--out", gen.out, "Dataset output (default stdout)");
  generate->add_option("--model-out", gen.model_out, "Write the generating model here");
  add_seed(generate);

  FitArgs fit;
  CLI::App* fitc = app.add_subcommand("fit", "Fit a transition matrix from an omitted dataset");
  fitc->add_option("--data", fit.data_file, "Dataset JSON lines")->required();
  fitc->add_option("--method", fit.method, "naive | matching | gaps | known-w | semi-analytic")->required();
  fitc->add_option("--states", fit.states, "Number of hidden states");
  fitc->add_option("--psi", fit.psi.psi_file, "Psi JSON file ({\"psi\": [...], \"known\": [...]})");
  fitc->add_option("--p-c", fit.psi.p_c, "Constant keep probability");
  fitc->add_option("--n", fit.n, "Full length for sentences without N (matching)");
  fitc->add_option("--psi-mode", fit.psi_mode, "fixed | sample-missing | sample-all");
  fitc->add_option("--config", fit.config_file, "Sampler settings JSON");
  fitc->add_flag("--strip", fit.strip, "Drop W/N/X the method may not see instead of refusing");
  fitc->add_flag("--project", fit.project, "Project a non-stochastic semi-analytic inverse onto the simplex");
  fitc->add_option("--truth", fit.truth_file, "Model JSON used for the diagnostics L1 column");
  fitc->add_option("--out", fit.out, "Model output (default stdout)");
  fitc->add_option("--diagnostics", fit.diagnostics, "Per-iteration CSV output");
  fitc->add_option("--threads", threads, "Worker threads (0 = logical cores)")->capture_default_str();
  add_seed(fitc);

  InferArgs inf;
  CLI::App* infer = app.add_subcommand("infer", "Label each observation of a dataset under a known model");
  infer->add_option("--model", inf.model_file, "Model JSON file")->required();
  infer->add_option("--data", inf.data_file, "Dataset JSON lines")->required();
  infer->add_option("--psi", inf.psi.psi_file, "Psi JSON file");
  infer->add_option("--p-c", inf.psi.p_c, "Constant keep probability");
  infer->add_option("--n", inf.n, "Full length for sentences without N");
  infer->add_option("--max-rounds", inf.max_rounds, "Alternation rounds")->capture_default_str();
  infer->add_option("--s-max", inf.s_max, "Gap cap for the knapsack start (0 = automatic)")->capture_default_str();
  infer->add_option("--out", inf.out, "Labels output (default stdout)");
  add_seed(infer);

  TransformArgs tr;
  CLI::App* transform = app.add_subcommand("transform", "Closed-form omission transforms of a model's T");
  transform->add_option("op", tr.op, "omit | invert | compose")->required();
  transform->add_option("--model", tr.model_file, "Model JSON file")->required();
  transform->add_option("--p-c", tr.p_c, "Keep probability")->required();
  transform->add_option("--p-q", tr.p_q, "True keep probability (compose)");
  transform->add_flag("--project", tr.project, "Project a non-stochastic inverse onto the simplex");
  transform->add_option("--out", tr.out, "Model output (default stdout)");
  add_seed(transform);

  BenchArgs bench;
  std::optional<int> bench_threads;
  CLI::App* benchc = app.add_subcommand("bench", "Experiment harness");
  benchc->require_subcommand(1);
  CLI::App* run = benchc->add_subcommand("run", "Run an experiment spec and write its CSV");
  run->add_option("--spec", bench.spec_file, "Experiment spec JSON")->required();
  run->add_option("--out", bench.out, "CSV output (default stdout)");
  run->add_option("--threads", bench_threads, "Parallel cells (0 = logical cores)");
  run->add_flag("--timing", bench.timing, "Fill the seconds column");
  add_seed(run);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "error: " << one_line(e.what()) << '\n';
      return 1;
    }
    if (threads < 0) throw ValidationError("--threads must be non-negative");
    if (*generate) return run_generate(gen, resolve_seed(seed_flag), out);
    if (*fitc) return run_fit(fit, resolve_seed(seed_flag), threads, out);
    if (*infer) return run_infer(inf, out);
    if (*transform) return run_transform(tr, out);
    if (*run) {
      if (bench_threads && *bench_threads < 0) throw ValidationError("--threads must be non-negative");
      std::optional<std::uint64_t> seed = seed_flag;
      return run_bench(bench, seed, bench_threads, out);
    }
    err << "error: no subcommand\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 2;
  }
}

}  // namespace hmmop::cli
