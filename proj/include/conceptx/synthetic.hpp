#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conceptx/corpus.hpp"
#include "conceptx/extraction.hpp"
#include "conceptx/features.hpp"

namespace conceptx::synthetic {

/// Relation-phrase ids in generated typing corpora: the first
/// `n_indicative` ids are indicative (Application on the left, Technique on
/// the right), the rest are neutral.
struct TypingCorpus {
  std::vector<EncodedPhrase> phrases;
  FeatureDims dims;
  std::vector<int> aspect;  ///< planted; 0 = Technique, 1 = Application
  std::vector<int> domain;  ///< planted; all 0 for aspect-only corpora
  std::vector<int> indicative;
};

struct TypingSpec {
  int n_phrases = 2000;
  int n_domains = 1;
  int vocab = 200;        ///< unigram vocabulary, split evenly over cells
  int sig_vocab = 40;
  int venues_per_domain = 2;
  double high_mass = 0.9; ///< probability a word comes from its cell's block
  double pair_rate = 0.6; ///< share of titles with two phrases around a relation phrase
  double indicative_rate = 0.8;
  int n_indicative = 4;
  int n_neutral = 4;
  std::uint64_t seed = 7;
};

/// Titles are drawn one at a time: a pair title joined by an indicative
/// relation phrase places an Application phrase left of it and a Technique
/// phrase right of it; a neutral one takes either order. Other titles hold
/// a single phrase of uniform aspect. Each cell (domain, aspect)
/// owns a disjoint block of the vocabulary that receives `high_mass` of its
/// word draws. Documents pick a domain and a venue of that domain.
TypingCorpus typing_corpus(const TypingSpec& spec);

/// Best accuracy over all relabelings of `n_labels` predicted labels.
double permutation_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted, int n_labels);

/// Pronounceable made-up words that the tagger reads as nouns.
std::vector<std::string> word_pool(int n, std::uint64_t seed);

/// `n` phrases "<modifier...> <concept...>" with a fresh random modifier
/// of one or two words per phrase.
std::vector<TypedPhrase> planted_concept_phrases(const std::vector<std::string>& concept_tokens, int n,
                                                 std::uint64_t seed, const std::string& aspect = kTechnique);

struct TitleSpec {
  int n_docs = 1000;
  int n_concepts = 300;
  int n_modifiers = 120;
  int n_venues = 6;
  int first_year = 2000;
  int n_years = 10;
  std::uint64_t seed = 11;
};

/// Scientific-looking titles such as "<mod> <concept> using <concept>".
std::vector<Document> titles(const TitleSpec& spec);

/// JSON lines in the corpus input format.
std::string to_jsonl(const std::vector<Document>& docs);

}  // namespace conceptx::synthetic
