#include <doctest.h>

#include <cmath>
#include <limits>

#include "conceptx/segmentation.hpp"

using namespace conceptx;

namespace {

std::vector<std::string> texts(const std::vector<RelationPhrase>& rps) {
  std::vector<std::string> out;
  for (const auto& r : rps) out.push_back(r.text());
  return out;
}

// Corpus where "performance" and "ecn" co-occur only across the relation
// phrase of the first title, and rarely otherwise.
std::vector<Document> tcp_corpus() {
  std::vector<Document> docs;
  docs.push_back(make_document("t", "improving tcp performance by applying ecn", "v", 2000));
  for (int i = 0; i < 40; ++i) {
    docs.push_back(make_document("p" + std::to_string(i), "performance analysis of system" + std::to_string(i), "v", 2000));
    docs.push_back(make_document("e" + std::to_string(i), "ecn marking in router" + std::to_string(i), "v", 2000));
  }
  return docs;
}

}  // namespace

TEST_SUITE("segmentation") {

TEST_CASE("relation phrase by applying is detected") {
  const auto doc = make_document("d", "improving tcp performance by applying ecn", "v", 2000);
  const auto rps = detect_relation_phrases(doc);
  REQUIRE(rps.size() == 1);
  CHECK(rps[0].tokens == std::vector<std::string>{"by", "applying"});
  CHECK(rps[0].span == Span{3, 5});
}

TEST_CASE("title without verbs or prepositions has no relation phrase") {
  CHECK(detect_relation_phrases(make_document("d", "neural network language model", "v", 2000)).empty());
}

TEST_CASE("detection still reports PMI-suppressed candidates") {
  const auto rps = detect_relation_phrases(make_document("d", "analysis of peer to peer network", "v", 2000));
  CHECK(texts(rps) == std::vector<std::string>{"of", "to"});
}

TEST_CASE("relation phrases never start or end a title and are never adjacent") {
  for (const char* title : {"using graphs for mining with", "for the people", "with and via using graph"}) {
    const auto doc = make_document("d", title, "v", 2000);
    const auto rps = detect_relation_phrases(doc);
    const int n = static_cast<int>(doc.tokens.size());
    for (std::size_t k = 0; k < rps.size(); ++k) {
      CHECK(rps[k].span.begin > 0);
      CHECK(rps[k].span.end < n);
      CHECK(rps[k].span.size() <= 4);
      if (k > 0) CHECK(rps[k].span.begin > rps[k - 1].span.end);
    }
  }
}

TEST_CASE("pmi formula and sentinels") {
  std::vector<Document> docs;
  // c(x)=10, c(y)=10, c(x,y)=5, T=100.
  for (int i = 0; i < 5; ++i) docs.push_back(make_document("a" + std::to_string(i), "x y", "v", 2000));
  for (int i = 0; i < 5; ++i) docs.push_back(make_document("b" + std::to_string(i), "x q y", "v", 2000));
  std::string pad;
  for (int i = 0; i < 100 - 10 - 15; ++i) pad += " z" + std::to_string(i);
  docs.push_back(make_document("pad", pad, "v", 2000));
  const auto s = compute_stats(docs);
  REQUIRE(s.total_tokens == 100);
  CHECK(pmi("x", "y", s) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(pmi("y", "x", s) == kNeverCooccur);
  CHECK_THROWS_AS(pmi("x", "unseen", s), MissingStatistics);

  const auto one = compute_stats({make_document("o", "w", "v", 2000)});
  CHECK(pmi("w", "w", one) == kNeverCooccur);
}

TEST_CASE("low flanking PMI splits the title into two phrases") {
  const auto docs = tcp_corpus();
  const auto stats = compute_stats(docs);
  const auto& doc = docs[0];
  const auto rps = detect_relation_phrases(doc);
  const auto phrases = segment_title(doc, rps, stats, 2.0);
  REQUIRE(phrases.size() == 2);
  CHECK(phrases[0].tokens == std::vector<std::string>{"improving", "tcp", "performance"});
  CHECK_FALSE(phrases[0].p_l.has_value());
  REQUIRE(phrases[0].p_r.has_value());
  CHECK(phrases[0].p_r->text() == "by applying");
  CHECK(phrases[1].tokens == std::vector<std::string>{"ecn"});
  REQUIRE(phrases[1].p_l.has_value());
  CHECK(*phrases[1].p_l == *phrases[0].p_r);
  CHECK_FALSE(phrases[1].p_r.has_value());
}

TEST_CASE("cohesive flanks are not split") {
  std::vector<Document> docs;
  for (int i = 0; i < 20; ++i) docs.push_back(make_document("d" + std::to_string(i), "precision and recall", "v", 2000));
  // Filler keeps T large enough that the flank PMI clears the threshold.
  std::string filler;
  for (int i = 0; i < 200; ++i) filler += " f" + std::to_string(i);
  docs.push_back(make_document("x", filler, "v", 2000));
  const auto stats = compute_stats(docs);
  const auto phrases = segment_title(docs[0], detect_relation_phrases(docs[0]), stats, 2.0);
  REQUIRE(phrases.size() == 1);
  CHECK(phrases[0].tokens.size() == 3);
  CHECK_FALSE(phrases[0].p_l.has_value());
  CHECK_FALSE(phrases[0].p_r.has_value());
}

TEST_CASE("threshold extremes") {
  const auto docs = tcp_corpus();
  const auto stats = compute_stats(docs);
  const auto doc = make_document("t", "analysis of ecn marking in router for tcp performance", "v", 2000);
  std::vector<Document> all = docs;
  all.push_back(doc);
  const auto s2 = compute_stats(all);
  const auto rps = detect_relation_phrases(doc);
  REQUIRE(rps.size() == 3);
  CHECK(segment_title(doc, rps, s2, -std::numeric_limits<double>::infinity()).size() == 1);
  CHECK(segment_title(doc, rps, s2, std::numeric_limits<double>::infinity()).size() == 4);
}

TEST_CASE("phrase spans and relation phrases tile the title") {
  const auto docs = tcp_corpus();
  std::vector<Document> all = docs;
  all.push_back(make_document("t2", "analysis of ecn marking in router for tcp performance", "v", 2000));
  const auto stats = compute_stats(all);
  for (const auto& doc : all) {
    const auto rps = detect_relation_phrases(doc);
    const auto phrases = segment_title(doc, rps, stats, std::numeric_limits<double>::infinity());
    int pos = 0;
    for (std::size_t k = 0; k < phrases.size(); ++k) {
      const auto& p = phrases[k];
      CHECK_FALSE(p.span.empty());
      if (p.p_l) {
        CHECK(p.p_l->span.begin == pos);
        pos = p.p_l->span.end;
      }
      CHECK(p.span.begin == pos);
      pos = p.span.end;
      if (k + 1 < phrases.size()) CHECK(phrases[k + 1].p_l == p.p_r);
    }
    CHECK(pos == static_cast<int>(doc.tokens.size()));
  }
}

TEST_CASE("features drop stopwords and low-idf tokens and collect significant phrases") {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(make_document("d" + std::to_string(i), "the language model common x" + std::to_string(i), "v", 2000));
  const auto stats = compute_stats(docs);
  SignificantPhraseSet sig;
  sig.phrases["language model"] = {};
  sig.max_length = 2;
  FeatureFilter filter;
  filter.stats = &stats;
  filter.significant = &sig;
  Phrase p;
  p.tokens = {"the", "language", "model", "common", "x3"};
  p.span = {0, 5};
  fill_features(p, filter);
  // "common" and "language" appear in every document (idf 0).
  CHECK(p.p_w == std::vector<std::string>{"x3"});
  CHECK(p.p_sp == std::vector<std::string>{"language model"});
}

TEST_CASE("phrase json round trip") {
  const auto docs = tcp_corpus();
  const auto stats = compute_stats(docs);
  for (const auto& p : segment_title(docs[0], detect_relation_phrases(docs[0]), stats, 2.0))
    CHECK(phrase_from_json(to_json(p)) == p);
}

TEST_CASE("segmentation is deterministic") {
  const auto docs = tcp_corpus();
  const auto stats = compute_stats(docs);
  const auto rps = detect_relation_phrases(docs[0]);
  CHECK(segment_title(docs[0], rps, stats, 2.0) == segment_title(docs[0], rps, stats, 2.0));
}

}  // TEST_SUITE
