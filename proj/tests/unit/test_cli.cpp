#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "hmmop/bench.hpp"
#include "hmmop/io.hpp"

namespace hmmop {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "hmmop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("hmmop_test_cli_" + std::string(
                                                          ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
    unsetenv("HMMOP_SEED");
  }
  void TearDown() override {
    unsetenv("HMMOP_SEED");
    std::filesystem::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    write_text_file(path(name), text);
    return path(name);
  }
  // Small synthetic dataset and its generating model.
  void generate(const std::string& p_c, const std::string& seed = "3") const {
    const Outcome g = run({"generate", "--model-id", "synthetic-degree-3", "--states", "4", "--sentences", "40",
                           "--length", "15", "--p-c", p_c, "--seed", seed, "--out", path("data.jsonl"),
                           "--model-out", path("truth.json")});
    ASSERT_EQ(g.code, 0) << g.err;
  }
  std::string quick_config() const { return write("config.json", R"({"iterations": 30, "burn_in": 10})"); }

  std::filesystem::path dir_;
};

TEST_F(Cli, TransformRoundTrip) {
  generate("0.5");
  const Outcome omit = run({"transform", "omit", "--model", path("truth.json"), "--p-c", "0.6", "--out", path("omit.json")});
  ASSERT_EQ(omit.code, 0) << omit.err;
  const Outcome inv = run({"transform", "invert", "--model", path("omit.json"), "--p-c", "0.6"});
  ASSERT_EQ(inv.code, 0) << inv.err;
  const Matrix back = model_from_json(inv.out).T();
  const Matrix truth = read_model_file(path("truth.json")).T();
  EXPECT_LT((back - truth).cwiseAbs().maxCoeff(), 1e-8);

  const Outcome compose = run({"transform", "compose", "--model", path("truth.json"), "--p-c", "0.6", "--p-q", "0.6"});
  ASSERT_EQ(compose.code, 0) << compose.err;
  EXPECT_LT((model_from_json(compose.out).T() - truth).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(run({"transform", "compose", "--model", path("truth.json"), "--p-c", "0.6"}).code, 1);
}

TEST_F(Cli, NegativeInverseIsARuntimeFailure) {
  const std::string model = write("flip.json", R"({"n_states": 2, "T": [[0.1, 0.9], [0.9, 0.1]], "initial": [0.5, 0.5],
      "emission": {"kind": "gaussian", "params": {"means": [0, 1], "sd": 0.1}}})");
  const Outcome bad = run({"transform", "invert", "--model", model, "--p-c", "0.3"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(bad.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(bad.err.begin(), bad.err.end(), '\n'), 1);
  const Outcome projected = run({"transform", "invert", "--model", model, "--p-c", "0.3", "--project"});
  ASSERT_EQ(projected.code, 0) << projected.err;
  EXPECT_GE(model_from_json(projected.out).T().minCoeff(), 0.0);

  EXPECT_EQ(run({"transform", "compose", "--model", model, "--p-c", "0.3", "--p-q", "1"}).code, 2);
  const Outcome composed = run({"transform", "compose", "--model", model, "--p-c", "0.3", "--p-q", "1", "--project"});
  ASSERT_EQ(composed.code, 0) << composed.err;
  EXPECT_GE(model_from_json(composed.out).T().minCoeff(), 0.0);
}

TEST_F(Cli, KnownWMatchesNaiveWithoutOmission) {
  generate("1");
  const std::string config = quick_config();
  const Outcome naive = run({"fit", "--data", path("data.jsonl"), "--method", "naive", "--states", "4", "--config",
                             config, "--seed", "8"});
  const Outcome known = run({"fit", "--data", path("data.jsonl"), "--method", "known-w", "--states", "4", "--config",
                             config, "--seed", "8", "--p-c", "1"});
  ASSERT_EQ(naive.code, 0) << naive.err;
  ASSERT_EQ(known.code, 0) << known.err;
  EXPECT_EQ(naive.out, known.out);
}

TEST_F(Cli, PlacementBlindMethodsRefuseTruth) {
  generate("0.6");
  const std::string config = quick_config();
  const Outcome gaps = run({"fit", "--data", path("data.jsonl"), "--method", "gaps", "--states", "4", "--config",
                            config, "--p-c", "0.6"});
  EXPECT_EQ(gaps.code, 1);
  EXPECT_NE(gaps.err.find("--strip"), std::string::npos) << gaps.err;
  const Outcome matching = run({"fit", "--data", path("data.jsonl"), "--method", "matching", "--states", "4",
                                "--config", config, "--p-c", "0.6"});
  EXPECT_EQ(matching.code, 1);

  const Outcome stripped = run({"fit", "--data", path("data.jsonl"), "--method", "gaps", "--states", "4", "--config",
                                config, "--p-c", "0.6", "--strip", "--diagnostics", path("diag.csv"), "--truth",
                                path("truth.json")});
  ASSERT_EQ(stripped.code, 0) << stripped.err;
  EXPECT_EQ(model_from_json(stripped.out).n_states(), 4);
  const std::string diag = read_text_file(path("diag.csv"));
  EXPECT_EQ(diag.substr(0, diag.find('\n')), "iteration,mean_loglik,l1");
  EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 31);
}

TEST_F(Cli, MatchingNeedsLengths) {
  Dataset data(2);
  data[0].O = {0.0, 1.0};
  data[1].O = {2.0};
  write_dataset_file(path("blind.jsonl"), data);
  const std::string config = quick_config();
  const Outcome missing = run({"fit", "--data", path("blind.jsonl"), "--method", "matching", "--states", "3",
                               "--config", config, "--p-c", "0.5"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--n"), std::string::npos) << missing.err;
  const Outcome ok = run({"fit", "--data", path("blind.jsonl"), "--method", "matching", "--states", "3", "--config",
                          config, "--p-c", "0.5", "--n", "4"});
  EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST_F(Cli, ValidationErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"fit", "--method", "naive"}).code, 1);
  EXPECT_EQ(run({"fit", "--data", path("absent.jsonl"), "--method", "naive", "--states", "2"}).code, 1);
  EXPECT_EQ(run({"transform", "omit", "--model", path("absent.json"), "--p-c", "0.5"}).code, 1);
  EXPECT_EQ(run({"generate", "--p-c", "1.5"}).code, 1);
  EXPECT_EQ(run({"generate", "--model-id", "synthetic-degree-3", "--threads", "2"}).code, 1);
  generate("0.5");
  EXPECT_EQ(run({"fit", "--data", path("data.jsonl"), "--method", "known-w", "--states", "4"}).code, 1);
  EXPECT_EQ(run({"fit", "--data", path("data.jsonl"), "--method", "known-w", "--states", "4", "--p-c", "0.5",
                 "--psi-mode", "sometimes"})
                .code,
            1);
  const Outcome both = run({"fit", "--data", path("data.jsonl"), "--method", "known-w", "--states", "4", "--p-c",
                            "0.5", "--psi", path("absent.json")});
  EXPECT_EQ(both.code, 1);
  EXPECT_EQ(both.err.rfind("error: ", 0), 0u);
}

TEST_F(Cli, HelpListsEveryFlag) {
  const std::map<std::vector<std::string>, std::vector<std::string>> flags = {
      {{"generate"},
       {"--model", "--model-id", "--states", "--emission-sd", "--omission", "--p-c", "--eps", "--sigma", "--psi",
        "--sentences", "--length", "--out", "--model-out", "--seed"}},
      {{"fit"},
       {"--data", "--method", "--states", "--psi", "--p-c", "--n", "--psi-mode", "--config", "--strip", "--project",
        "--truth", "--out", "--diagnostics", "--threads", "--seed"}},
      {{"infer"}, {"--model", "--data", "--psi", "--p-c", "--n", "--max-rounds", "--s-max", "--out"}},
      {{"transform"}, {"--model", "--p-c", "--p-q", "--project", "--out"}},
      {{"bench", "run"}, {"--spec", "--out", "--threads", "--timing", "--seed"}},
  };
  for (const auto& [command, expected] : flags) {
    std::vector<std::string> args = command;
    args.push_back("--help");
    const Outcome help = run(args);
    EXPECT_EQ(help.code, 0);
    for (const auto& flag : expected) EXPECT_NE(help.out.find(flag), std::string::npos) << command[0] << " " << flag;
  }
  const Outcome top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"generate", "fit", "infer", "transform", "bench"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  auto gen = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"generate", "--model-id", "synthetic-degree-2", "--states", "3", "--sentences", "5",
                                  "--length", "8"};
    args.insert(args.end(), extra.begin(), extra.end());
    const Outcome o = run(args);
    EXPECT_EQ(o.code, 0) << o.err;
    return o.out;
  };
  const std::string seed1 = gen({});
  EXPECT_EQ(gen({"--seed", "1"}), seed1);
  const std::string seed5 = gen({"--seed", "5"});
  EXPECT_NE(seed5, seed1);
  setenv("HMMOP_SEED", "5", 1);
  EXPECT_EQ(gen({}), seed5);
  EXPECT_EQ(gen({"--seed", "1"}), seed1);
  setenv("HMMOP_SEED", "five", 1);
  EXPECT_EQ(run({"generate", "--sentences", "2"}).code, 1);
}

TEST_F(Cli, RepeatedRunsAreIdentical) {
  generate("0.7");
  const std::string config = quick_config();
  const std::vector<std::string> fit{"fit", "--data", path("data.jsonl"), "--method", "gaps", "--states", "4",
                                     "--config", config, "--p-c", "0.7", "--strip", "--seed", "4"};
  const Outcome a = run(fit);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(run(fit).out, a.out);

  const std::vector<std::string> infer{"infer", "--model", path("truth.json"), "--data", path("data.jsonl"), "--p-c",
                                       "0.7"};
  const Outcome labels = run(infer);
  ASSERT_EQ(labels.code, 0) << labels.err;
  EXPECT_EQ(run(infer).out, labels.out);
  EXPECT_EQ(std::count(labels.out.begin(), labels.out.end(), '\n'), 40);
  std::istringstream lines(labels.out);
  std::string line;
  std::getline(lines, line);
  const auto first = nlohmann::json::parse(line);
  EXPECT_TRUE(first.contains("labels"));
  EXPECT_TRUE(first.contains("W"));
}

TEST_F(Cli, BenchRunMatchesLibrary) {
  const std::string spec_text = R"({"model_id": "synthetic-degree-2", "n_states": 4, "n_sentences": 20,
      "sentence_length": 12, "methods": ["naive", "known-w"], "gibbs": {"iterations": 20, "burn_in": 5}})";
  const std::string spec = write("spec.json", spec_text);
  const Outcome a = run({"bench", "run", "--spec", spec, "--seed", "6"});
  ASSERT_EQ(a.code, 0) << a.err;
  ExperimentSpec parsed = parse_experiment_spec(spec_text);
  parsed.seed = 6;
  EXPECT_EQ(a.out, run_experiment_csv(parsed));
  EXPECT_EQ(run({"bench", "run", "--spec", spec, "--seed", "6", "--threads", "2"}).out, a.out);
  EXPECT_EQ(run({"bench", "run", "--spec", write("bad.json", R"({"colour": 1})")}).code, 1);
}

}  // namespace
}  // namespace hmmop
