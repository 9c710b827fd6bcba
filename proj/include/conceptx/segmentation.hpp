#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/common.hpp"
#include "conceptx/corpus.hpp"

namespace conceptx {

struct RelationPhrase {
  std::vector<std::string> tokens;
  Span span;

  std::string text() const { return join(tokens); }
  bool operator==(const RelationPhrase&) const = default;
};

struct Phrase {
  std::string doc_id;
  Span span;
  std::vector<std::string> tokens;  ///< surface tokens of the span
  std::vector<std::string> p_w;     ///< content tokens after stopword and IDF filtering
  std::vector<std::string> p_sp;    ///< significant phrases inside the span (space-joined)
  std::optional<RelationPhrase> p_l;
  std::optional<RelationPhrase> p_r;
  std::string venue;
  int year = 0;
  int time_slice = 0;
  std::optional<int> aspect;
  std::optional<int> domain;

  /// "doc_id:begin", unique within a corpus.
  std::string key() const { return doc_id + ":" + std::to_string(span.begin); }
  bool operator==(const Phrase&) const = default;
};

using PosPattern = std::vector<Pos>;

/// PREP; PREP VERB; VERB PREP; PREP DET; VERB; CONJ.
const std::vector<PosPattern>& default_relation_patterns();

/// Maximal non-overlapping matches scanned left to right, longest pattern
/// first. A relation phrase never starts or ends a title, and two relation
/// phrases are never adjacent.
std::vector<RelationPhrase> detect_relation_phrases(const Document& doc,
                                                    const std::vector<PosPattern>& patterns = default_relation_patterns());

/// Stand-in for log(0) when two tokens never co-occur.
inline constexpr double kNeverCooccur = -1e9;

/// ln(c(x,y) T / (c(x) c(y))) with c(x,y) the adjacent bigram count.
double pmi(std::string_view x, std::string_view y, const CorpusStats& stats);

/// Same measure where x and y are separated by `gap` relation-capable tokens.
double flank_pmi(std::string_view x, std::string_view y, int gap, const CorpusStats& stats);

struct FeatureFilter {
  const CorpusStats* stats = nullptr;
  const SignificantPhraseSet* significant = nullptr;
  const std::unordered_set<std::string>* stopwords = &bundled_stopwords();
  double idf_min = 0.2;
};

/// Splits the title at every relation phrase whose flanking tokens have PMI
/// below the threshold. Non-splitting relation phrases stay inside phrases.
std::vector<Phrase> segment_title(const Document& doc, const std::vector<RelationPhrase>& relation_phrases,
                                  const CorpusStats& stats, double pmi_threshold,
                                  const FeatureFilter& filter = {});

/// Fills p_w and p_sp from the phrase tokens.
void fill_features(Phrase& phrase, const FeatureFilter& filter);

nlohmann::json to_json(const Phrase& phrase);
Phrase phrase_from_json(const nlohmann::json& j);

}  // namespace conceptx
