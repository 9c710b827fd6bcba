#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/adaptor_grammar.hpp"
#include "conceptx/segmentation.hpp"

namespace conceptx {

inline constexpr const char* kTechnique = "Technique";
inline constexpr const char* kApplication = "Application";

/// A kept phrase together with its typing.
struct TypedPhrase {
  Phrase phrase;
  std::string aspect;  ///< "Technique"/"Application" after mapping, else "aspect<k>"
  std::optional<int> domain;
  double confidence = 0.0;
};

nlohmann::json to_json(const TypedPhrase& t);
TypedPhrase typed_phrase_from_json(const nlohmann::json& j);

enum class ModifierPosition { Pre, Post };

struct Modifier {
  std::vector<std::string> tokens;
  ModifierPosition position = ModifierPosition::Pre;
  Span span;  ///< title token offsets
  bool operator==(const Modifier&) const = default;
};

struct TypedConceptMention {
  std::string doc_id;
  Span span;  ///< the phrase, title token offsets
  std::vector<std::string> concept_tokens;
  Span concept_span;
  std::vector<Modifier> modifiers;
  std::string aspect;
  std::optional<int> domain;
  int time_slice = 0;

  std::string concept_text() const { return join(concept_tokens); }
  bool operator==(const TypedConceptMention&) const = default;
};

nlohmann::json to_json(const TypedConceptMention& m);
TypedConceptMention mention_from_json(const nlohmann::json& j);

/// True iff concept and modifiers are disjoint contiguous spans that cover
/// the phrase span exactly and reproduce its tokens.
bool tiles_phrase(const TypedConceptMention& m, const std::vector<std::string>& phrase_tokens);

struct ExtractionOptions {
  int iterations = 1000;
  std::uint64_t seed = 1;
  std::string concept_symbol = "Concept";
  std::string modifier_symbol = "Mod";
  int sparse_warning = 50;  ///< partitions smaller than this are flagged
};

struct ExcludedPhrase {
  std::string key;  ///< Phrase::key()
  std::string reason;
};

struct PartitionResult {
  std::string aspect;
  std::optional<int> domain;
  int phrases = 0;
  std::vector<TypedConceptMention> mentions;  ///< in input order
  std::vector<ExcludedPhrase> excluded;
  SamplerStats sampler;
  bool sparse = false;
  std::int64_t tables = 0;  ///< concept tables in the final state
};

/// Runs the adaptor grammar over one partition and reads each final parse.
/// Throws std::invalid_argument on an empty partition.
PartitionResult extract_partition(const std::vector<TypedPhrase>& phrases, const Grammar& grammar,
                                  const ExtractionOptions& options);

/// Reads concept and modifiers off a parse of `phrase`; nullopt when the
/// tree has no concept node.
std::optional<TypedConceptMention> read_mention(const DerivationTree& tree, const Grammar& grammar,
                                                const TypedPhrase& phrase, const ExtractionOptions& options);

struct ExtractionResult {
  std::vector<PartitionResult> partitions;  ///< ordered by (aspect, domain)

  std::vector<TypedConceptMention> mentions() const;
};

/// Splits by (aspect, domain), runs partitions on up to `jobs` threads. Each
/// partition's seed depends only on the base seed and its key.
ExtractionResult extract_all(const std::vector<TypedPhrase>& phrases, const Grammar& grammar,
                             const ExtractionOptions& options, int jobs = 1);

std::uint64_t partition_seed(std::uint64_t seed, const std::string& aspect, std::optional<int> domain);

struct ModifierCount {
  std::string text;
  int count = 0;
  bool operator==(const ModifierCount&) const = default;
};

struct ConceptReport {
  std::string concept_text;
  int mentions = 0;
  std::vector<ModifierCount> modifiers;  ///< count descending, then text
  std::map<std::string, int> by_aspect;
  std::map<int, int> by_domain;
};

struct DomainSummary {
  int domain = 0;
  std::vector<std::pair<std::string, double>> top_venues;  ///< point estimates of the venue distribution
  std::vector<std::pair<std::string, int>> top_concepts;
  int mentions = 0;
};

/// Per-concept aggregates ordered by mention count (descending), then text.
std::vector<ConceptReport> build_reports(const std::vector<TypedConceptMention>& mentions);

/// `venue_counts[d][v]` are the trained domain-venue counts; estimates are
/// smoothed with beta_v.
std::vector<DomainSummary> build_domain_summaries(const std::vector<TypedConceptMention>& mentions,
                                                  const std::vector<std::vector<int>>& venue_counts,
                                                  const std::vector<std::string>& venue_names, double beta_v,
                                                  int top_k = 5);

void write_concepts_tsv(std::ostream& out, const std::vector<ConceptReport>& reports, int top_modifiers = 10);
void write_domains_tsv(std::ostream& out, const std::vector<DomainSummary>& summaries);
void write_coverage_tsv(std::ostream& out, const ExtractionResult& result);

}  // namespace conceptx
