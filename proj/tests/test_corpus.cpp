#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "conceptx/corpus.hpp"

using namespace conceptx;

namespace {

std::vector<Document> docs_of(const std::vector<std::string>& titles) {
  std::vector<Document> out;
  for (std::size_t i = 0; i < titles.size(); ++i) out.push_back(make_document("d" + std::to_string(i), titles[i], "v", 2000));
  return out;
}

std::vector<Pos> tags(const std::vector<std::string>& words) {
  std::vector<Pos> out;
  for (const auto& t : pos_tag(words)) out.push_back(t.pos);
  return out;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("load_corpus lowercases and tokenizes the title") {
  std::istringstream in(R"({"id":"d1","title":"Improving TCP Performance","venue":"INFOCOM","year":2001})");
  const auto r = load_corpus(in);
  REQUIRE(r.errors.empty());
  REQUIRE(r.documents.size() == 1);
  const auto& d = r.documents[0];
  CHECK(d.id == "d1");
  CHECK(d.surfaces() == std::vector<std::string>{"improving", "tcp", "performance"});
  CHECK(d.venue == "INFOCOM");
  CHECK(d.year == 2001);
}

TEST_CASE("bad records are skipped and reported with their line") {
  std::istringstream in(
      "{\"id\":\"a\",\"title\":\"graph mining\",\"venue\":\"KDD\",\"year\":2010}\n"
      "{\"id\":\"b\",\"title\":\"\",\"venue\":\"KDD\",\"year\":2010}\n"
      "not json\n"
      "{\"id\":\"c\",\"title\":\"query processing\",\"venue\":\"VLDB\",\"year\":2011}\n"
      "{\"id\":\"a\",\"title\":\"duplicate id\",\"venue\":\"KDD\",\"year\":2010}\n"
      "{\"id\":\"d\",\"title\":\"missing year\",\"venue\":\"KDD\"}\n");
  const auto r = load_corpus(in);
  REQUIRE(r.documents.size() == 2);
  CHECK(r.documents[0].id == "a");
  CHECK(r.documents[1].id == "c");
  std::set<int> lines;
  for (const auto& e : r.errors) lines.insert(e.line);
  CHECK(lines == std::set<int>{2, 3, 5, 6});
}

TEST_CASE("three valid lines give three documents with distinct ids") {
  std::istringstream in(
      "{\"id\":\"x\",\"title\":\"a b\",\"venue\":\"V\",\"year\":1}\n"
      "{\"id\":\"y\",\"title\":\"c d\",\"venue\":\"V\",\"year\":1}\n"
      "{\"id\":\"z\",\"title\":\"e f\",\"venue\":\"V\",\"year\":1}\n");
  const auto r = load_corpus(in);
  CHECK(r.documents.size() == 3);
  std::set<std::string> ids;
  for (const auto& d : r.documents) ids.insert(d.id);
  CHECK(ids.size() == 3);
}

TEST_CASE("unreadable corpus file throws") {
  CHECK_THROWS_AS(load_corpus(std::filesystem::path("/nonexistent/corpus.jsonl")), InputError);
}

TEST_CASE("empty title is an ingestion error") {
  CHECK_THROWS_AS(make_document("d", "  ?! ", "v", 2000), InputError);
}

TEST_CASE("tokenizer keeps intra-word hyphens only") {
  CHECK(tokenize("Peer-to-Peer Networks: A Survey -- Part 2") ==
        std::vector<std::string>{"peer-to-peer", "networks", "a", "survey", "part", "2"});
  CHECK(tokenize("-lead trail-") == std::vector<std::string>{"lead", "trail"});
}

TEST_CASE("pos_tag uses the lexicon, suffix rules and the noun default") {
  CHECK(tags({"based", "on"}) == std::vector<Pos>{Pos::Verb, Pos::Prep});
  CHECK(tags({"clustering"}) == std::vector<Pos>{Pos::Noun});
  CHECK(tags({"the"}) == std::vector<Pos>{Pos::Det});
  CHECK(tags({"improving", "learned", "quickly", "2001", "graph"}) ==
        std::vector<Pos>{Pos::Verb, Pos::Verb, Pos::Adv, Pos::Num, Pos::Noun});
  CHECK(tags({"by", "using", "and", "via"}) == std::vector<Pos>{Pos::Prep, Pos::Verb, Pos::Conj, Pos::Prep});
}

TEST_CASE("pos_tag is deterministic") {
  const std::vector<std::string> words{"mining", "frequent", "patterns", "with", "fp", "trees"};
  CHECK(tags(words) == tags(words));
}

TEST_CASE("custom lexicons parse from tsv") {
  std::istringstream in("# comment\nfoo\tVERB\nbar\tPREP\n");
  const auto lex = Lexicon::from_tsv(in);
  CHECK(lex.size() == 2);
  CHECK(lex.lookup("foo") == Pos::Verb);
  CHECK(pos_tag({"bar"}, lex)[0].pos == Pos::Prep);
  std::istringstream bad("foo\tNOTATAG\n");
  CHECK_THROWS(Lexicon::from_tsv(bad));
}

TEST_CASE("document frequencies and idf") {
  const auto docs = docs_of({"a b", "a c"});
  const auto s = compute_stats(docs);
  CHECK(s.doc_count == 2);
  CHECK(s.token_df.at("a") == 2);
  CHECK(s.token_df.at("b") == 1);
  CHECK(s.token_df.at("c") == 1);
  CHECK(s.idf("a") == doctest::Approx(0.0));
  CHECK(s.idf("b") == doctest::Approx(std::log(2.0)));
  CHECK(s.bigram("a", "b") == 1);
  CHECK(s.bigram("b", "a") == 0);
  CHECK(s.total_tokens == 4);
  CHECK_THROWS_AS(s.idf("zzz"), MissingStatistics);
}

TEST_CASE("idf of a token in 1 of 100 docs and in all 100") {
  std::vector<std::string> titles;
  for (int i = 0; i < 100; ++i) titles.push_back(i == 0 ? "common rare" : "common word" + std::to_string(i));
  const auto s = compute_stats(docs_of(titles));
  CHECK(s.idf("common") == doctest::Approx(0.0));
  CHECK(s.idf("rare") == doctest::Approx(std::log(100.0)).epsilon(1e-12));
  CHECK(std::abs(s.idf("rare") - 4.605) < 1e-3);
}

TEST_CASE("idf decreases with document frequency") {
  const auto s = compute_stats(docs_of({"x y z", "x y", "x", "x w"}));
  CHECK(s.idf("z") > s.idf("y"));
  CHECK(s.idf("y") > s.idf("x"));
  CHECK(s.idf("w") == doctest::Approx(s.idf("z")));
}

TEST_CASE("merge significance formula") {
  const double z = merge_significance(500, 600, 800, 1e6);
  CHECK(z == doctest::Approx((500 - 0.48) / std::sqrt(500.0)).epsilon(1e-12));
  CHECK(std::abs(z - 22.34) < 0.01);
  CHECK(merge_significance(4, 20, 20, 100) == doctest::Approx(0.0));
  CHECK(std::isinf(merge_significance(0, 3, 3, 10)));
}

TEST_CASE("significant phrases on a small corpus") {
  std::vector<std::string> titles;
  for (int i = 0; i < 30; ++i) titles.push_back("language model topic" + std::to_string(i));
  for (int i = 0; i < 30; ++i) titles.push_back("neural parsing item" + std::to_string(i));
  const auto docs = docs_of(titles);
  const auto stats = compute_stats(docs);
  const auto set = mine_significant_phrases(docs, stats, 5, 2.0);
  CHECK(set.contains("language model"));
  CHECK(set.contains("neural parsing"));
  CHECK_FALSE(set.contains("model topic1"));

  SUBCASE("members meet min_support and the threshold, checked by rescanning titles") {
    for (const auto& [joined, info] : set.phrases) {
      CHECK(info.score >= 2.0);
      CHECK(info.doc_support >= 5);
      int docs_with = 0;
      for (const auto& t : titles)
        if ((" " + t + " ").find(" " + joined + " ") != std::string::npos) ++docs_with;
      CHECK(docs_with >= 5);
    }
  }
  SUBCASE("score of a two-token phrase matches a brute-force recount") {
    const auto& info = set.phrases.at("language model");
    std::int64_t uv = 0, u = 0, v = 0, total = 0;
    for (const auto& d : docs) {
      const auto s = d.surfaces();
      total += static_cast<std::int64_t>(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        u += s[i] == "language";
        v += s[i] == "model";
        if (i + 1 < s.size()) uv += s[i] == "language" && s[i + 1] == "model";
      }
    }
    const double expected = (uv - static_cast<double>(u) * v / total) / std::sqrt(static_cast<double>(uv));
    CHECK(info.score == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("merging keeps the longest cohesive unit") {
  std::vector<std::string> titles;
  for (int i = 0; i < 30; ++i) titles.push_back("language model for topic" + std::to_string(i));
  const auto docs = docs_of(titles);
  const auto set = mine_significant_phrases(docs, compute_stats(docs), 5, 2.0);
  CHECK(set.contains("language model for"));
  CHECK_FALSE(set.contains("language model"));
}

TEST_CASE("no phrase when no bigram reaches min_support") {
  const auto docs = docs_of({"a b c", "d e f", "g h i"});
  const auto set = mine_significant_phrases(docs, compute_stats(docs), 5, 5.0);
  CHECK(set.size() == 0);
}

TEST_CASE("pair at its independence expectation is rejected") {
  // c(x)=c(y)=10, c(xy)=1, T=100: expectation 1, score 0.
  std::vector<std::string> titles;
  titles.push_back("x y");
  for (int i = 0; i < 9; ++i) titles.push_back("x f" + std::to_string(i) + " g" + std::to_string(i));
  for (int i = 0; i < 9; ++i) titles.push_back("h" + std::to_string(i) + " y");
  std::string pad;
  for (int i = 0; i < 100 - 2 - 27 - 18; ++i) pad += " p" + std::to_string(i);
  titles.push_back(pad);
  const auto docs = docs_of(titles);
  const auto stats = compute_stats(docs);
  REQUIRE(stats.total_tokens == 100);
  CHECK(merge_significance(1, 10, 10, 100) == doctest::Approx(0.0));
  CHECK_FALSE(mine_significant_phrases(docs, stats, 1, 5.0).contains("x y"));
}

}  // TEST_SUITE
