#include "conceptx/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace conceptx::synthetic {

namespace {

int block_word(Rng& rng, int cell, int n_cells, int vocab, double high_mass) {
  const int block = vocab / n_cells;
  if (uniform01(rng) < high_mass) return cell * block + uniform_index(rng, block);
  return uniform_index(rng, vocab);
}

}  // namespace

TypingCorpus typing_corpus(const TypingSpec& spec) {
  if (spec.n_phrases < 1 || spec.n_domains < 1) throw std::invalid_argument("typing_corpus: empty spec");
  const int cells = spec.n_domains * 2;
  if (spec.vocab < cells || spec.sig_vocab < cells) throw std::invalid_argument("typing_corpus: vocabulary too small");
  TypingCorpus c;
  c.dims = {spec.vocab, spec.sig_vocab, spec.n_indicative + spec.n_neutral, spec.n_domains * spec.venues_per_domain};
  c.indicative.resize(static_cast<std::size_t>(spec.n_indicative));
  std::iota(c.indicative.begin(), c.indicative.end(), 0);
  Rng rng(spec.seed);

  auto make = [&](int domain, int aspect, int venue) {
    EncodedPhrase p;
    const int cell = domain * 2 + aspect;
    const int n_words = 2 + uniform_index(rng, 3);
    for (int k = 0; k < n_words; ++k) p.words.push_back(block_word(rng, cell, cells, spec.vocab, spec.high_mass));
    if (uniform01(rng) < 0.5) p.sig.push_back(block_word(rng, cell, cells, spec.sig_vocab, spec.high_mass));
    p.venue = venue;
    c.phrases.push_back(p);
    c.aspect.push_back(aspect);
    c.domain.push_back(domain);
  };
  while (static_cast<int>(c.phrases.size()) < spec.n_phrases) {
    const int domain = uniform_index(rng, spec.n_domains);
    const int venue = domain * spec.venues_per_domain + uniform_index(rng, spec.venues_per_domain);
    const bool room = static_cast<int>(c.phrases.size()) + 2 <= spec.n_phrases;
    if (room && uniform01(rng) < spec.pair_rate) {
      const bool indicative = uniform01(rng) < spec.indicative_rate;
      const int rel = indicative ? uniform_index(rng, spec.n_indicative)
                                 : spec.n_indicative + uniform_index(rng, spec.n_neutral);
      // Neutral connectives join the two aspects in either order.
      const int first = indicative || uniform01(rng) < 0.5 ? 1 : 0;
      make(domain, first, venue);
      c.phrases.back().right = rel;
      make(domain, 1 - first, venue);
      c.phrases.back().left = rel;
    } else {
      make(domain, uniform_index(rng, 2), venue);
    }
  }
  return c;
}

double permutation_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted, int n_labels) {
  if (truth.size() != predicted.size() || truth.empty()) throw std::invalid_argument("permutation_accuracy: size mismatch");
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(n_labels), std::vector<int>(static_cast<std::size_t>(n_labels), 0));
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  std::vector<int> perm(static_cast<std::size_t>(n_labels));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (int t = 0; t < n_labels; ++t) hits += confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

std::vector<std::string> word_pool(int n, std::uint64_t seed) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  static const char* kCodas[] = {"", "n", "r", "s", "m", "x", "k"};
  Rng rng(seed);
  std::set<std::string> seen;
  std::vector<std::string> out;
  const auto& lexicon = Lexicon::bundled();
  while (static_cast<int>(out.size()) < n) {
    std::string w;
    const int syllables = 2 + uniform_index(rng, 2);
    for (int s = 0; s < syllables; ++s) {
      w += kOnsets[uniform_index(rng, static_cast<int>(std::size(kOnsets)))];
      w += kVowels[uniform_index(rng, static_cast<int>(std::size(kVowels)))];
    }
    w += kCodas[uniform_index(rng, static_cast<int>(std::size(kCodas)))];
    if (lexicon.lookup(w) || seen.contains(w)) continue;
    seen.insert(w);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<TypedPhrase> planted_concept_phrases(const std::vector<std::string>& concept_tokens, int n,
                                                 std::uint64_t seed, const std::string& aspect) {
  const auto pool = word_pool(4 * n + 8, seed);
  std::vector<std::string> words;
  for (const auto& w : pool)
    if (std::find(concept_tokens.begin(), concept_tokens.end(), w) == concept_tokens.end()) words.push_back(w);
  Rng rng(mix_seed(seed, 1));
  std::vector<TypedPhrase> out;
  std::size_t next = 0;
  for (int i = 0; i < n; ++i) {
    TypedPhrase t;
    auto& p = t.phrase;
    p.doc_id = "planted" + std::to_string(i);
    const int mod_len = 1 + uniform_index(rng, 2);
    for (int k = 0; k < mod_len; ++k) p.tokens.push_back(words.at(next++));
    p.tokens.insert(p.tokens.end(), concept_tokens.begin(), concept_tokens.end());
    p.span = {0, static_cast<int>(p.tokens.size())};
    p.p_w = p.tokens;
    p.venue = "synthetic";
    p.year = 2000;
    t.aspect = aspect;
    t.confidence = 1.0;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Document> titles(const TitleSpec& spec) {
  if (spec.n_docs < 0 || spec.n_concepts < 2 || spec.n_modifiers < 1 || spec.n_venues < 1 || spec.n_years < 1)
    throw std::invalid_argument("titles: bad spec");
  const auto pool = word_pool(2 * spec.n_concepts + spec.n_modifiers, spec.seed);
  std::vector<std::vector<std::string>> concepts;
  std::size_t at = 0;
  Rng rng(mix_seed(spec.seed, 2));
  for (int i = 0; i < spec.n_concepts; ++i) {
    std::vector<std::string> c{pool[at++]};
    if (uniform01(rng) < 0.7) c.push_back(pool[at++]);
    concepts.push_back(std::move(c));
  }
  std::vector<std::string> modifiers(pool.begin() + static_cast<std::ptrdiff_t>(at),
                                    pool.begin() + static_cast<std::ptrdiff_t>(at) + spec.n_modifiers);
  static const char* kRelations[] = {"using", "based on", "by applying", "via", "with", "for"};

  // Skewed concept popularity so some concepts recur often.
  auto pick_concept = [&] {
    const double u = uniform01(rng);
    return concepts[static_cast<std::size_t>(u * u * static_cast<double>(concepts.size()))];
  };
  auto phrase = [&](std::vector<std::string>& out) {
    if (uniform01(rng) < 0.4) out.push_back(modifiers[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(modifiers.size())))]);
    const auto c = pick_concept();
    out.insert(out.end(), c.begin(), c.end());
  };
  std::vector<Document> docs;
  for (int d = 0; d < spec.n_docs; ++d) {
    std::vector<std::string> words;
    phrase(words);
    if (uniform01(rng) < 0.75) {
      for (const auto& w : split_ws(kRelations[uniform_index(rng, static_cast<int>(std::size(kRelations)))]))
        words.push_back(w);
      phrase(words);
    }
    const int venue = uniform_index(rng, spec.n_venues);
    const int year = spec.first_year + uniform_index(rng, spec.n_years);
    docs.push_back(make_document("s" + std::to_string(d), join(words), "venue" + std::to_string(venue), year));
  }
  return docs;
}

std::string to_jsonl(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json j{{"id", d.id}, {"title", join(d.surfaces())}, {"venue", d.venue}, {"year", d.year}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace conceptx::synthetic
