#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conceptx/pipeline.hpp"
#include "conceptx/synthetic.hpp"

using namespace conceptx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("conceptx_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

PipelineConfig small_run(const fs::path& dir, int n_docs = 300) {
  synthetic::TitleSpec spec;
  spec.n_docs = n_docs;
  spec.n_concepts = 40;
  spec.n_modifiers = 20;
  std::ofstream(dir / "corpus.jsonl") << synthetic::to_jsonl(synthetic::titles(spec));
  PipelineConfig c;
  c.corpus = (dir / "corpus.jsonl").string();
  c.output_dir = (dir / "out").string();
  c.typing_iterations = 20;
  c.grammar_iterations = 5;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CONCEPTX_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config defaults and strict keys") {
  const auto c = config_from_json(nlohmann::json::object());
  CHECK(c.n_aspects == 2);
  CHECK(c.alpha_value() == 25.0);
  CHECK(c.alpha_domain_value() == 5.0);
  CHECK(c.discard_threshold == 0.6);
  CHECK(c.grammar == "adaptor");
  CHECK_THROWS_AS(config_from_json({{"n_aspect", 2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"n_aspects", "two"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"typing_iterations", 0}}).validate(), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"omega", 1.5}}).validate(), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"model", "lda"}}).validate(), ConfigError);
  CHECK(config_from_json(to_json(c)).seed == c.seed);
}

TEST_CASE("overrides parse values as json") {
  PipelineConfig c;
  apply_override(c, "n_domains=3");
  apply_override(c, "model=domainphrasetype");
  apply_override(c, "omega=0.25");
  CHECK(c.n_domains == 3);
  CHECK(c.model == "domainphrasetype");
  CHECK(c.omega == 0.25);
  CHECK_THROWS_AS(apply_override(c, "nonsense"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "bogus=1"), ConfigError);
}

TEST_CASE("load_config reports unreadable and malformed files") {
  const auto dir = scratch("cfg");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "ok.json") << R"({"seed": 9})";
  CHECK(load_config(dir / "ok.json").seed == 9);
}

TEST_CASE("full run writes every stage output and is deterministic") {
  const auto dir = scratch("run");
  auto c = small_run(dir);
  std::ostringstream log;
  cmd_run(c, log);
  for (const char* f : {"phrases.jsonl", "typed.jsonl", "mapping.json", "features.json", "model_slice0.json",
                        "mentions.jsonl", "concepts.tsv", "coverage.tsv", "excluded.tsv"})
    CHECK_MESSAGE(fs::exists(fs::path(c.output_dir) / f), f);
  const auto first = slurp(fs::path(c.output_dir) / "mentions.jsonl");
  CHECK_FALSE(first.empty());
  c.jobs = 3;
  cmd_run(c, log);
  CHECK(slurp(fs::path(c.output_dir) / "mentions.jsonl") == first);
}

TEST_CASE("domain model with time slices") {
  const auto dir = scratch("domain");
  auto c = small_run(dir, 400);
  c.model = "domainphrasetype";
  c.n_domains = 3;
  c.n_slices = 2;
  std::ostringstream log;
  cmd_run(c, log);
  CHECK(fs::exists(fs::path(c.output_dir) / "model_slice1.json"));
  CHECK(fs::exists(fs::path(c.output_dir) / "domains.tsv"));
  std::ostringstream report;
  cmd_report(c, report, 5);
  CHECK_FALSE(report.str().empty());
}

TEST_CASE("no phrase above the threshold gives empty outputs") {
  const auto dir = scratch("empty");
  auto c = small_run(dir, 60);
  c.discard_threshold = 1.0;
  c.typing_iterations = 1;
  std::ostringstream log;
  cmd_segment(c, log);
  cmd_train(c, log);
  CHECK(cmd_extract(c, log) == 0);
  CHECK(slurp(fs::path(c.output_dir) / "mentions.jsonl").empty());
  CHECK(log.str().find("no kept phrases") != std::string::npos);
}

TEST_CASE("evaluation against a gold file") {
  const auto dir = scratch("eval");
  auto c = small_run(dir);
  std::ostringstream log;
  cmd_run(c, log);
  // Gold taken from the run's own output scores perfectly on concept quality.
  std::ifstream in(fs::path(c.output_dir) / "mentions.jsonl");
  std::ofstream gold(dir / "gold.tsv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line) && rows < 20) {
    const auto m = mention_from_json(nlohmann::json::parse(line));
    gold << m.doc_id << '\t' << m.concept_text() << '\t' << m.aspect << '\n';
    ++rows;
  }
  gold.close();
  c.gold = (dir / "gold.tsv").string();
  const auto r = cmd_evaluate(c, log);
  CHECK(r.concept_quality.recall == 1.0);
  CHECK(fs::exists(fs::path(c.output_dir) / "metrics.json"));
}

TEST_CASE("missing stage inputs are input errors") {
  const auto dir = scratch("missing");
  PipelineConfig c;
  c.corpus = (dir / "nope.jsonl").string();
  c.output_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_segment(c, log), InputError);
  CHECK_THROWS_AS(cmd_extract(c, log), InputError);
  CHECK_THROWS(cmd_evaluate(c, log));
}

TEST_CASE("linear fit") {
  const auto f = fit_linear({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  const auto g = fit_linear({1, 2, 3}, {1, 3, 2});
  CHECK(g.r2 == doctest::Approx(0.25));
  CHECK_THROWS_AS(fit_linear({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(fit_linear({2, 2}, {1, 3}), std::invalid_argument);
}

TEST_CASE("bench produces one row per size") {
  const auto dir = scratch("bench");
  PipelineConfig c;
  c.output_dir = (dir / "out").string();
  c.bench_sizes = {600, 1200};
  c.bench_typing_iterations = 2;
  c.bench_grammar_iterations = 1;
  std::ostringstream log;
  const auto rows = cmd_bench(c, log);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(std::abs(r.phrases - r.target) <= r.target / 10);
  CHECK(fs::exists(fs::path(c.output_dir) / "bench.csv"));
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  const auto c = small_run(dir, 80);
  const std::string common = "--corpus " + c.corpus + " -o " + c.output_dir;
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli(common + " --set bogus=1 segment") == 2);
  CHECK(run_cli("--corpus /nonexistent.jsonl -o " + c.output_dir + " segment") == 2);
  CHECK(run_cli(common + " --set typing_iterations=0 train") == 2);
  CHECK(run_cli(common + " segment") == 0);
  CHECK(run_cli(common + " --set typing_iterations=5 --set grammar_iterations=2 run") == 0);
  CHECK(run_cli(common + " config") == 0);
}

}  // TEST_SUITE
