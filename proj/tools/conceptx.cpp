#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conceptx/corpus.hpp"
#include "conceptx/pipeline.hpp"

using namespace conceptx;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Typed concept extraction from scientific titles"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string corpus, gold, output_dir;
  int jobs = 0;
  long long seed = -1;
  int top = 20;
  app.add_option("-c,--config", config_path, "JSON configuration file");
  app.add_option("--set", overrides, "Override a config key: key=value (repeatable)");
  app.add_option("--corpus", corpus, "Corpus JSONL (id, title, venue, year)");
  app.add_option("--gold", gold, "Gold annotations (TSV or JSONL)");
  app.add_option("-o,--out", output_dir, "Output directory");
  app.add_option("-j,--jobs", jobs, "Worker threads for extraction")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Base random seed")->check(CLI::NonNegativeNumber);

  app.add_subcommand("segment", "Split titles into phrases");
  app.add_subcommand("train", "Type phrases with PhraseType or DomainPhraseType");
  app.add_subcommand("extract", "Extract concepts and modifiers with the adaptor grammar");
  app.add_subcommand("evaluate", "Score mentions against gold annotations");
  app.add_subcommand("run", "segment, train, extract, and evaluate when gold is set");
  app.add_subcommand("bench", "Time the pipeline on synthetic corpora of increasing size");
  auto* report = app.add_subcommand("report", "Summarize extracted concepts");
  report->add_option("--top", top, "Number of concepts to list")->check(CLI::PositiveNumber);
  auto* show = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    if (!corpus.empty()) config.corpus = corpus;
    if (!gold.empty()) config.gold = gold;
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (jobs > 0) config.jobs = jobs;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    config.validate();

    const auto* cmd = app.get_subcommands().front();
    const auto name = cmd->get_name();
    if (name == "segment") {
      cmd_segment(config, std::cerr);
    } else if (name == "train") {
      cmd_train(config, std::cerr);
    } else if (name == "extract") {
      cmd_extract(config, std::cerr);
    } else if (name == "evaluate") {
      cmd_evaluate(config, std::cout);
    } else if (name == "run") {
      cmd_run(config, std::cerr);
    } else if (name == "bench") {
      cmd_bench(config, std::cerr);
    } else if (name == "report") {
      cmd_report(config, std::cout, top);
    } else if (cmd == show) {
      std::cout << to_json(config).dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
