#include "conceptx/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace conceptx {

namespace resources {
extern const std::string_view kLexiconTsv;
extern const std::string_view kStopwords;
}  // namespace resources

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool relation_capable(Pos pos) {
  return pos == Pos::Prep || pos == Pos::Verb || pos == Pos::Det || pos == Pos::Conj;
}

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = v.size();
    for (int e : v) h ^= static_cast<std::size_t>(e) + 0x9e3779b9 + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

std::string_view to_string(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "NOUN";
    case Pos::Verb: return "VERB";
    case Pos::Adj: return "ADJ";
    case Pos::Adv: return "ADV";
    case Pos::Prep: return "PREP";
    case Pos::Det: return "DET";
    case Pos::Conj: return "CONJ";
    case Pos::Num: return "NUM";
    case Pos::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<Pos> parse_pos(std::string_view tag) {
  static constexpr Pos all[] = {Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv, Pos::Prep,
                                Pos::Det,  Pos::Conj, Pos::Num, Pos::Other};
  for (Pos p : all)
    if (to_string(p) == tag) return p;
  return std::nullopt;
}

std::vector<std::string> Document::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lexicon = [] {
    std::istringstream in{std::string(resources::kLexiconTsv)};
    return from_tsv(in);
  }();
  return lexicon;
}

Lexicon Lexicon::from_tsv(std::istream& in) {
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError("lexicon line " + std::to_string(lineno) + ": missing tab");
    auto pos = parse_pos(std::string_view(line).substr(tab + 1));
    if (!pos) throw InputError("lexicon line " + std::to_string(lineno) + ": unknown tag");
    lex.entries_[line.substr(0, tab)] = *pos;
  }
  return lex;
}

std::optional<Pos> Lexicon::lookup(std::string_view surface) const {
  auto it = entries_.find(std::string(surface));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::unordered_set<std::string>& bundled_stopwords() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> out;
    std::istringstream in{std::string(resources::kStopwords)};
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') out.insert(line);
    return out;
  }();
  return words;
}

std::vector<std::string> tokenize(std::string_view title) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < title.size(); ++i) {
    const auto c = static_cast<unsigned char>(title[i]);
    if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if (c == '-' && !current.empty() && i + 1 < title.size() &&
               is_word_byte(static_cast<unsigned char>(title[i + 1]))) {
      current += '-';
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<Token> pos_tag(const std::vector<std::string>& surfaces, const Lexicon& lexicon) {
  std::vector<Token> out;
  out.reserve(surfaces.size());
  for (const auto& s : surfaces) {
    Pos pos = Pos::Noun;
    if (auto hit = lexicon.lookup(s)) {
      pos = *hit;
    } else if ((s.size() >= 5 && ends_with(s, "ing")) || (s.size() >= 4 && ends_with(s, "ed"))) {
      pos = Pos::Verb;
    } else if (s.size() >= 4 && ends_with(s, "ly")) {
      pos = Pos::Adv;
    } else if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      pos = Pos::Num;
    } else if (std::none_of(s.begin(), s.end(), [](char c) {
                 return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
               })) {
      pos = Pos::Other;
    }
    out.push_back(Token{s, pos});
  }
  return out;
}

Document make_document(std::string id, std::string_view title, std::string venue, int year,
                       const Lexicon& lexicon) {
  auto surfaces = tokenize(title);
  if (surfaces.empty()) throw InputError("empty title");
  Document doc;
  doc.id = std::move(id);
  doc.tokens = pos_tag(surfaces, lexicon);
  doc.venue = std::move(venue);
  doc.year = year;
  return doc;
}

LoadResult load_corpus(std::istream& in) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw InputError("record is not a JSON object");
      for (const char* key : {"id", "title", "venue"})
        if (!obj.contains(key) || !obj[key].is_string())
          throw InputError(std::string("missing or non-string field '") + key + "'");
      if (!obj.contains("year") || !obj["year"].is_number_integer())
        throw InputError("missing or non-integer field 'year'");
      auto id = obj["id"].get<std::string>();
      if (id.empty()) throw InputError("empty id");
      if (seen.count(id)) throw InputError("duplicate id '" + id + "'");
      auto doc = make_document(id, obj["title"].get<std::string>(), obj["venue"].get<std::string>(),
                               obj["year"].get<int>());
      seen.insert(id);
      result.documents.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back({lineno, std::string("malformed JSON: ") + e.what()});
    } catch (const InputError& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  return load_corpus(in);
}

std::size_t PairHash::operator()(const std::pair<std::string, std::string>& p) const {
  return std::hash<std::string>{}(p.first) * 31u ^ std::hash<std::string>{}(p.second);
}

std::int64_t CorpusStats::unigram(std::string_view token) const {
  auto it = unigram_counts.find(std::string(token));
  return it == unigram_counts.end() ? 0 : it->second;
}

std::int64_t CorpusStats::bigram(std::string_view x, std::string_view y) const {
  auto it = bigram_counts.find({std::string(x), std::string(y)});
  return it == bigram_counts.end() ? 0 : it->second;
}

std::int64_t CorpusStats::flank(std::string_view x, std::string_view y, int gap) const {
  auto it = flank_counts.find({std::string(x), std::string(y), gap});
  return it == flank_counts.end() ? 0 : it->second;
}

double CorpusStats::idf(std::string_view token) const {
  auto it = token_idf.find(std::string(token));
  if (it == token_idf.end()) throw MissingStatistics("no document frequency for token '" + std::string(token) + "'");
  return it->second;
}

CorpusStats compute_stats(const std::vector<Document>& docs) {
  if (docs.empty()) throw std::invalid_argument("compute_stats: empty corpus");
  CorpusStats stats;
  stats.doc_count = static_cast<int>(docs.size());
  for (const auto& doc : docs) {
    std::unordered_set<std::string> distinct;
    const auto& t = doc.tokens;
    for (std::size_t i = 0; i < t.size(); ++i) {
      ++stats.unigram_counts[t[i].surface];
      ++stats.total_tokens;
      distinct.insert(t[i].surface);
      if (i + 1 < t.size()) ++stats.bigram_counts[{t[i].surface, t[i + 1].surface}];
      for (std::size_t gap = 1; gap <= 4 && i + gap + 1 < t.size(); ++gap) {
        if (!relation_capable(t[i + gap].pos)) break;
        ++stats.flank_counts[{t[i].surface, t[i + gap + 1].surface, static_cast<int>(gap)}];
      }
    }
    for (const auto& s : distinct) ++stats.token_df[s];
  }
  for (const auto& [token, df] : stats.token_df)
    stats.token_idf[token] = std::log(static_cast<double>(stats.doc_count) / df);
  return stats;
}

double merge_significance(double count_uv, double count_u, double count_v, double total_tokens) {
  if (count_uv <= 0.0) return -std::numeric_limits<double>::infinity();
  const double expected = count_u * count_v / total_tokens;
  return (count_uv - expected) / std::sqrt(count_uv);
}

SignificantPhraseSet mine_significant_phrases(const std::vector<Document>& docs, const CorpusStats& stats,
                                              int min_support, double sig_threshold) {
  SignificantPhraseSet result;
  if (docs.empty()) return result;

  Vocabulary vocab;
  std::vector<std::vector<int>> encoded;
  encoded.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<int> ids;
    for (const auto& t : doc.tokens) ids.push_back(vocab.intern(t.surface));
    encoded.push_back(std::move(ids));
  }

  // Frequent contiguous sequences, grown level by level (apriori on prefix and suffix).
  std::unordered_map<std::vector<int>, int, VecHash> freq;
  std::vector<int> unigram(static_cast<std::size_t>(vocab.size()), 0);
  for (const auto& ids : encoded)
    for (int id : ids) ++unigram[static_cast<std::size_t>(id)];
  for (int id = 0; id < vocab.size(); ++id) freq[{id}] = unigram[static_cast<std::size_t>(id)];

  std::vector<std::vector<int>> active(encoded.size());
  for (std::size_t d = 0; d < encoded.size(); ++d)
    for (std::size_t i = 0; i < encoded[d].size(); ++i)
      if (unigram[static_cast<std::size_t>(encoded[d][i])] >= min_support) active[d].push_back(static_cast<int>(i));

  for (std::size_t len = 2;; ++len) {
    std::unordered_map<std::vector<int>, int, VecHash> level;
    for (std::size_t d = 0; d < encoded.size(); ++d) {
      const auto& act = active[d];
      for (std::size_t k = 0; k + 1 < act.size(); ++k) {
        const int i = act[k];
        if (act[k + 1] != i + 1 || static_cast<std::size_t>(i) + len > encoded[d].size()) continue;
        std::vector<int> gram(encoded[d].begin() + i, encoded[d].begin() + i + static_cast<int>(len));
        ++level[gram];
      }
    }
    bool any = false;
    for (auto& [gram, count] : level)
      if (count >= min_support) {
        freq[gram] = count;
        any = true;
      }
    if (!any) break;
    for (std::size_t d = 0; d < encoded.size(); ++d) {
      std::vector<int> next;
      for (std::size_t k = 0; k + 1 < active[d].size(); ++k) {
        const int i = active[d][k];
        if (active[d][k + 1] != i + 1 || static_cast<std::size_t>(i) + len > encoded[d].size()) continue;
        std::vector<int> gram(encoded[d].begin() + i, encoded[d].begin() + i + static_cast<int>(len));
        auto it = level.find(gram);
        if (it != level.end() && it->second >= min_support) next.push_back(i);
      }
      active[d] = std::move(next);
    }
  }

  const double total = static_cast<double>(stats.total_tokens);
  auto count_of = [&](const std::vector<int>& ids, int b, int e) -> int {
    auto it = freq.find(std::vector<int>(ids.begin() + b, ids.begin() + e));
    return it == freq.end() ? 0 : it->second;
  };

  std::map<std::string, SignificantPhrase> found;
  for (const auto& ids : encoded) {
    struct Unit {
      int begin, end;
      double score;
      int split;
    };
    std::vector<Unit> units;
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) units.push_back({i, i + 1, 0.0, 0});
    while (units.size() > 1) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_at = 0;
      for (std::size_t k = 0; k + 1 < units.size(); ++k) {
        const int c_uv = count_of(ids, units[k].begin, units[k + 1].end);
        if (c_uv < min_support) continue;
        const double sig = merge_significance(c_uv, count_of(ids, units[k].begin, units[k].end),
                                              count_of(ids, units[k + 1].begin, units[k + 1].end), total);
        if (sig >= sig_threshold && sig > best) {
          best = sig;
          best_at = k;
        }
      }
      if (best == -std::numeric_limits<double>::infinity()) break;
      Unit merged{units[best_at].begin, units[best_at + 1].end, best, units[best_at].end - units[best_at].begin};
      units[best_at] = merged;
      units.erase(units.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
    }
    std::unordered_set<std::string> in_doc;
    for (const auto& u : units) {
      if (u.end - u.begin < 2) continue;
      std::vector<std::string> words;
      for (int i = u.begin; i < u.end; ++i) words.push_back(vocab.name(ids[static_cast<std::size_t>(i)]));
      const auto key = join(words);
      auto& entry = found[key];
      if (u.score > entry.score || entry.doc_support == 0) {
        entry.score = u.score;
        entry.split = u.split;
      }
      entry.count = count_of(ids, u.begin, u.end);
      if (in_doc.insert(key).second) ++entry.doc_support;
    }
  }

  for (auto& [key, entry] : found) {
    if (entry.doc_support < min_support) continue;
    result.max_length = std::max(result.max_length, static_cast<int>(split_ws(key).size()));
    result.phrases.emplace(key, entry);
  }
  return result;
}

}  // namespace conceptx
