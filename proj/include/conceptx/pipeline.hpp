#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/adaptor_grammar.hpp"
#include "conceptx/evaluation.hpp"

namespace conceptx {

/// Invalid configuration or command-line usage (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::string corpus;
  std::string gold;
  std::string output_dir = "conceptx_out";

  std::string model = "phrasetype";  ///< phrasetype | domainphrasetype
  int n_aspects = 2;
  int n_domains = 10;
  int n_slices = 1;
  std::optional<double> alpha;         ///< default 50 / n_aspects
  std::optional<double> alpha_domain;  ///< default 50 / n_domains
  double beta_w = 0.01;
  double beta_l = 0.01;
  double beta_r = 0.01;
  double beta_v = 0.01;
  double omega = 0.5;
  double kappa = 100.0;
  int typing_iterations = 1000;
  double discard_threshold = 0.6;
  std::vector<std::string> indicative_relation_phrases{"by using", "using", "by applying", "applying",
                                                       "via",      "based on", "with"};

  int min_support = 5;
  double significance = 5.0;
  double pmi_threshold = 2.0;
  double idf_min = 0.2;

  std::string grammar = "adaptor";  ///< adaptor | adaptor_mod
  std::string grammar_file;         ///< overrides `grammar` when set
  double grammar_alpha = 0.01;
  double pyp_a = 0.5;
  double pyp_b = 0.5;
  int grammar_iterations = 1000;

  std::uint64_t seed = 1;
  int jobs = 1;

  std::vector<int> bench_sizes{10000, 20000, 40000};
  int bench_typing_iterations = 50;
  int bench_grammar_iterations = 10;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  double alpha_value() const { return alpha.value_or(50.0 / n_aspects); }
  double alpha_domain_value() const { return alpha_domain.value_or(50.0 / n_domains); }
  std::filesystem::path out(const std::string& file) const { return std::filesystem::path(output_dir) / file; }
};

/// Unknown keys and wrongly typed values throw ConfigError. Does not validate.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies one "key=value" override; the value is parsed as JSON and falls
/// back to a plain string.
void apply_override(PipelineConfig& config, const std::string& assignment);

/// The configured grammar: a bundled variant with grammar_alpha and the PYP
/// parameters applied to every adaptor, or grammar_file as written.
Grammar resolve_grammar(const PipelineConfig& config);

// Stage commands. Each reads its inputs from and writes its outputs to
// output_dir; progress goes to `log`.

/// Writes phrases.jsonl. Returns the number of phrases.
int cmd_segment(const PipelineConfig& config, std::ostream& log);
/// Writes features.json, model_slice<t>.json, mapping.json, typed.jsonl
/// and discarded.tsv. Returns the number of kept phrases.
int cmd_train(const PipelineConfig& config, std::ostream& log);
/// Writes mentions.jsonl, concepts.tsv, domains.tsv (domain model only),
/// coverage.tsv and excluded.tsv. Returns the number of mentions.
int cmd_extract(const PipelineConfig& config, std::ostream& log);

struct EvaluationReport {
  PRF concept_quality;
  TypedReport typed;
};
/// Writes metrics.json and metrics.txt.
EvaluationReport cmd_evaluate(const PipelineConfig& config, std::ostream& log);
/// Prints the concept and domain summaries of an extracted run.
void cmd_report(const PipelineConfig& config, std::ostream& out, int top = 20);

struct BenchRow {
  int target = 0;   ///< requested phrase count
  int phrases = 0;  ///< phrases actually produced by segmentation
  int docs = 0;
  double segment_s = 0.0;
  double train_s = 0.0;
  double extract_s = 0.0;
  double total_s() const { return segment_s + train_s + extract_s; }
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Needs two distinct x.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

/// Runs segmentation, typing and extraction on synthetic corpora of the
/// configured sizes. Writes bench.csv and bench_fit.json.
std::vector<BenchRow> cmd_bench(const PipelineConfig& config, std::ostream& log);

/// segment, train, extract, and evaluate when a gold file is configured.
void cmd_run(const PipelineConfig& config, std::ostream& log);

}  // namespace conceptx
