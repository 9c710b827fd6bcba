#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "conceptx/common.hpp"

namespace conceptx {

enum class Pos { Noun, Verb, Adj, Adv, Prep, Det, Conj, Num, Other };

std::string_view to_string(Pos pos);
std::optional<Pos> parse_pos(std::string_view tag);

struct Token {
  std::string surface;
  Pos pos = Pos::Noun;

  bool operator==(const Token&) const = default;
};

struct Document {
  std::string id;
  std::vector<Token> tokens;
  std::string venue;
  int year = 0;
  int time_slice = 0;

  std::vector<std::string> surfaces() const;
};

/// Closed-class lexicon backing the rule-based tagger.
class Lexicon {
 public:
  /// The lexicon shipped in data/lexicon.tsv.
  static const Lexicon& bundled();
  /// Parses "surface<TAB>TAG" lines; '#' starts a comment line.
  static Lexicon from_tsv(std::istream& in);

  std::optional<Pos> lookup(std::string_view surface) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Pos> entries_;
};

const std::unordered_set<std::string>& bundled_stopwords();

/// Lowercases and splits on anything that is not alphanumeric. Hyphens survive
/// only between two word characters; bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view title);

/// Deterministic tagger: lexicon first, then -ing/-ed -> VERB and -ly -> ADV
/// suffix rules, digits -> NUM, anything else -> NOUN.
std::vector<Token> pos_tag(const std::vector<std::string>& surfaces,
                           const Lexicon& lexicon = Lexicon::bundled());

struct LoadError {
  int line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<Document> documents;
  std::vector<LoadError> errors;
};

/// One JSON object per line with id, title, venue, year. Bad records are
/// skipped and reported; an unreadable file throws InputError.
LoadResult load_corpus(const std::filesystem::path& path);
LoadResult load_corpus(std::istream& in);

/// Builds a document from raw fields; throws InputError on an empty title.
Document make_document(std::string id, std::string_view title, std::string venue, int year,
                       const Lexicon& lexicon = Lexicon::bundled());

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const;
};

struct CorpusStats {
  int doc_count = 0;
  std::int64_t total_tokens = 0;
  std::unordered_map<std::string, int> token_df;
  std::unordered_map<std::string, double> token_idf;
  std::unordered_map<std::string, std::int64_t> unigram_counts;
  std::unordered_map<std::pair<std::string, std::string>, std::int64_t, PairHash> bigram_counts;
  /// Co-occurrence of x and y separated by a gap of 1-4 tokens that could
  /// form a relation phrase (PREP/VERB/DET/CONJ). Keyed by (x, y) and gap.
  std::map<std::tuple<std::string, std::string, int>, std::int64_t> flank_counts;

  std::int64_t unigram(std::string_view token) const;
  std::int64_t bigram(std::string_view x, std::string_view y) const;
  std::int64_t flank(std::string_view x, std::string_view y, int gap) const;
  /// Throws MissingStatistics for a token the corpus never saw.
  double idf(std::string_view token) const;
};

CorpusStats compute_stats(const std::vector<Document>& docs);

/// z-score of an adjacent merge: (c(uv) - c(u)c(v)/T) / sqrt(c(uv)).
double merge_significance(double count_uv, double count_u, double count_v, double total_tokens);

struct SignificantPhrase {
  double score = 0.0;   ///< best merge significance observed
  int split = 0;        ///< token offset of the merge that produced the score
  int count = 0;        ///< corpus frequency of the contiguous sequence
  int doc_support = 0;  ///< documents in which the merged unit was formed
};

struct SignificantPhraseSet {
  /// Keyed by the space-joined token sequence.
  std::map<std::string, SignificantPhrase> phrases;
  int max_length = 0;

  bool contains(std::string_view joined) const { return phrases.count(std::string(joined)) > 0; }
  std::size_t size() const { return phrases.size(); }
};

/// Agglomerative bottom-up merging of adjacent units per title.
SignificantPhraseSet mine_significant_phrases(const std::vector<Document>& docs,
                                              const CorpusStats& stats, int min_support = 5,
                                              double sig_threshold = 5.0);

}  // namespace conceptx
