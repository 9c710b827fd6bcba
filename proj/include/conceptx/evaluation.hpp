#pragma once

#include <filesystem>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/extraction.hpp"

namespace conceptx {

/// A mention as seen by the metrics: document, token sequence, aspect label.
struct EvalMention {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::string aspect;
  bool operator==(const EvalMention&) const = default;
};

using GoldAnnotation = EvalMention;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int predicted = 0;
  int gold = 0;
  int correct = 0;
  bool defined = true;  ///< false when there is no gold mention to recall
};

/// P = correct / predicted, R = correct / gold, F1 = 2PR/(P+R); zero
/// denominators give 0 and an empty gold set clears `defined`.
PRF make_prf(int correct, int predicted, int gold);

struct TypedReport {
  PRF overall;
  PRF technique;
  PRF application;
};

/// Exact token-sequence match within a document, aspect ignored. Duplicate
/// mentions are matched one to one. Predictions for documents that have no
/// gold annotation are outside the evaluation set and are ignored. When
/// `corpus_docs` is given, gold for an unknown document throws InputError.
PRF concept_quality(const std::vector<EvalMention>& predicted, const std::vector<GoldAnnotation>& gold,
                    const std::set<std::string>* corpus_docs = nullptr);

/// Span and aspect must both match. Per-aspect rows restrict both sides to
/// that aspect.
TypedReport typed_quality(const std::vector<EvalMention>& predicted, const std::vector<GoldAnnotation>& gold,
                          const std::set<std::string>* corpus_docs = nullptr);

std::vector<EvalMention> to_eval(const std::vector<TypedConceptMention>& mentions);

/// Canonical aspect label; accepts any capitalization and the one-letter
/// forms T and A. Throws InputError otherwise.
std::string normalize_aspect(std::string_view label);

/// TSV rows "doc_id<TAB>mention<TAB>aspect" (an optional header row starting
/// with doc_id is skipped), or JSON lines with the same three keys where the
/// mention may be a string or a token array. Mentions are tokenized with the
/// corpus tokenizer.
std::vector<GoldAnnotation> load_gold(std::istream& in);
std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path);

nlohmann::json to_json(const PRF& prf);
nlohmann::json to_json(const TypedReport& report);
std::string format_metrics_table(const PRF& concept_prf, const TypedReport& typed);

}  // namespace conceptx
