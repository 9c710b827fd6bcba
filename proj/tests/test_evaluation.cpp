#include <doctest.h>

#include <sstream>

#include "conceptx/evaluation.hpp"
#include "oracles.hpp"

using namespace conceptx;

namespace {

void check_prf(const PRF& got, const oracle::Expected& want) {
  CHECK(got.defined == want.defined);
  CHECK(std::abs(got.precision - want.p) <= 1e-12);
  CHECK(std::abs(got.recall - want.r) <= 1e-12);
  CHECK(std::abs(got.f1 - want.f1) <= 1e-12);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("hand-scored fixtures") {
  for (const auto& f : oracle::metric_fixtures()) {
    CAPTURE(f.name);
    check_prf(concept_quality(f.predicted, f.gold), f.concept_quality);
    const auto t = typed_quality(f.predicted, f.gold);
    check_prf(t.overall, f.typed_overall);
    check_prf(t.technique, f.typed_technique);
    check_prf(t.application, f.typed_application);
  }
}

TEST_CASE("make_prf edge cases") {
  const auto p = make_prf(2, 3, 4);
  CHECK(p.precision == doctest::Approx(2.0 / 3));
  CHECK(p.f1 == doctest::Approx(4.0 / 7));
  const auto none = make_prf(0, 0, 5);
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK_FALSE(make_prf(0, 3, 0).defined);
}

TEST_CASE("gold tsv with header and mixed aspect labels") {
  std::istringstream in("doc_id\tmention\taspect\nd1\tNeural Network\tT\nd1\timage classification\tapplication\n\n");
  const auto gold = load_gold(in);
  REQUIRE(gold.size() == 2);
  CHECK(gold[0] == EvalMention{"d1", {"neural", "network"}, "Technique"});
  CHECK(gold[1].aspect == "Application");
}

TEST_CASE("gold json lines accept strings and token arrays") {
  std::istringstream in(R"({"doc_id":"d1","mention":"peer-to-peer network","aspect":"Technique"}
{"doc_id":"d2","mention":["svm"],"aspect":"A"}
)");
  const auto gold = load_gold(in);
  REQUIRE(gold.size() == 2);
  CHECK(gold[0].tokens == std::vector<std::string>{"peer-to-peer", "network"});
  CHECK(gold[1].tokens == std::vector<std::string>{"svm"});
  CHECK(gold[1].aspect == "Application");
}

TEST_CASE("malformed gold is an input error") {
  std::istringstream bad_aspect("d1\tsvm\tMethod\n");
  CHECK_THROWS_AS(load_gold(bad_aspect), InputError);
  std::istringstream short_row("d1\tsvm\n");
  CHECK_THROWS_AS(load_gold(short_row), InputError);
  CHECK_THROWS_AS(load_gold(std::filesystem::path("/nonexistent/gold.tsv")), InputError);
  CHECK_THROWS_AS(normalize_aspect("x"), InputError);
  CHECK(normalize_aspect("TECHNIQUE") == "Technique");
}

TEST_CASE("gold for a document outside the corpus is rejected") {
  const std::vector<EvalMention> gold{{"d1", {"svm"}, "Technique"}, {"ghost", {"crf"}, "Technique"}};
  const std::set<std::string> docs{"d1"};
  CHECK_THROWS_AS(concept_quality({}, gold, &docs), InputError);
  CHECK_THROWS_AS(typed_quality({}, gold, &docs), InputError);
  const std::set<std::string> both{"d1", "ghost"};
  CHECK_NOTHROW(concept_quality({}, gold, &both));
}

TEST_CASE("metrics are bounded and invariant to order") {
  for (const auto& f : oracle::metric_fixtures()) {
    auto pred = f.predicted;
    std::reverse(pred.begin(), pred.end());
    auto gold = f.gold;
    std::reverse(gold.begin(), gold.end());
    const auto a = concept_quality(f.predicted, f.gold);
    const auto b = concept_quality(pred, gold);
    CHECK(a.precision == b.precision);
    CHECK(a.recall == b.recall);
    for (double x : {a.precision, a.recall, a.f1}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    // Typed correctness implies untyped correctness.
    CHECK(typed_quality(f.predicted, f.gold).overall.correct <= a.correct);
  }
}

TEST_CASE("predictions converted from mentions") {
  TypedConceptMention m;
  m.doc_id = "d";
  m.concept_tokens = {"graph", "mining"};
  m.aspect = kTechnique;
  CHECK(to_eval({m}) == std::vector<EvalMention>{{"d", {"graph", "mining"}, "Technique"}});
}

TEST_CASE("report formats") {
  const auto prf = make_prf(1, 2, 2);
  const auto j = to_json(prf);
  CHECK(j.at("precision").get<double>() == 0.5);
  TypedReport t;
  t.overall = prf;
  t.technique = make_prf(0, 0, 0);
  const auto text = format_metrics_table(prf, t);
  CHECK(text.find("typed technique") != std::string::npos);
  CHECK(text.find("undefined") != std::string::npos);
  CHECK(text.find("0.5000") != std::string::npos);
}

}  // TEST_SUITE
