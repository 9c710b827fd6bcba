#include "conceptx/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace conceptx {

const std::vector<PosPattern>& default_relation_patterns() {
  static const std::vector<PosPattern> patterns = {
      {Pos::Prep, Pos::Verb}, {Pos::Verb, Pos::Prep}, {Pos::Prep, Pos::Det},
      {Pos::Prep},            {Pos::Verb},            {Pos::Conj},
  };
  return patterns;
}

std::vector<RelationPhrase> detect_relation_phrases(const Document& doc, const std::vector<PosPattern>& patterns) {
  std::vector<const PosPattern*> ordered;
  for (const auto& p : patterns)
    if (!p.empty() && p.size() <= 4) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const PosPattern* a, const PosPattern* b) { return a->size() > b->size(); });

  std::vector<RelationPhrase> out;
  const int n = static_cast<int>(doc.tokens.size());
  int i = 1;
  while (i < n - 1) {
    const PosPattern* hit = nullptr;
    for (const auto* p : ordered) {
      const int len = static_cast<int>(p->size());
      if (i + len > n - 1) continue;
      bool ok = true;
      for (int k = 0; k < len && ok; ++k) ok = doc.tokens[static_cast<std::size_t>(i + k)].pos == (*p)[static_cast<std::size_t>(k)];
      if (ok) {
        hit = p;
        break;
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    const int len = static_cast<int>(hit->size());
    RelationPhrase rp;
    rp.span = {i, i + len};
    for (int k = i; k < i + len; ++k) rp.tokens.push_back(doc.tokens[static_cast<std::size_t>(k)].surface);
    out.push_back(std::move(rp));
    // Adjacent relation phrases would leave an empty phrase between them.
    i += len + 1;
  }
  return out;
}

namespace {

double pmi_from_counts(double joint, double cx, double cy, double total) {
  if (joint <= 0) return kNeverCooccur;
  return std::log(joint * total / (cx * cy));
}

void require_seen(std::string_view token, const CorpusStats& stats) {
  if (stats.unigram(token) == 0) throw MissingStatistics("token '" + std::string(token) + "' not in corpus statistics");
}

}  // namespace

double pmi(std::string_view x, std::string_view y, const CorpusStats& stats) {
  require_seen(x, stats);
  require_seen(y, stats);
  return pmi_from_counts(static_cast<double>(stats.bigram(x, y)), static_cast<double>(stats.unigram(x)),
                         static_cast<double>(stats.unigram(y)), static_cast<double>(stats.total_tokens));
}

double flank_pmi(std::string_view x, std::string_view y, int gap, const CorpusStats& stats) {
  if (gap == 0) return pmi(x, y, stats);
  require_seen(x, stats);
  require_seen(y, stats);
  return pmi_from_counts(static_cast<double>(stats.flank(x, y, gap)), static_cast<double>(stats.unigram(x)),
                         static_cast<double>(stats.unigram(y)), static_cast<double>(stats.total_tokens));
}

void fill_features(Phrase& phrase, const FeatureFilter& filter) {
  phrase.p_w.clear();
  phrase.p_sp.clear();
  for (const auto& t : phrase.tokens) {
    if (filter.stopwords && filter.stopwords->count(t)) continue;
    if (filter.stats && filter.stats->token_idf.count(t) && filter.stats->idf(t) < filter.idf_min) continue;
    phrase.p_w.push_back(t);
  }
  if (!filter.significant || filter.significant->phrases.empty()) return;
  const int n = static_cast<int>(phrase.tokens.size());
  const int longest = filter.significant->max_length;
  std::unordered_set<std::string> seen;
  for (int b = 0; b < n; ++b) {
    for (int len = 2; len <= longest && b + len <= n; ++len) {
      std::vector<std::string> sub(phrase.tokens.begin() + b, phrase.tokens.begin() + b + len);
      auto joined = join(sub);
      if (filter.significant->contains(joined) && seen.insert(joined).second) phrase.p_sp.push_back(joined);
    }
  }
}

std::vector<Phrase> segment_title(const Document& doc, const std::vector<RelationPhrase>& relation_phrases,
                                  const CorpusStats& stats, double pmi_threshold, const FeatureFilter& filter) {
  const int n = static_cast<int>(doc.tokens.size());
  std::vector<const RelationPhrase*> splits;
  for (const auto& rp : relation_phrases) {
    if (rp.span.begin <= 0 || rp.span.end >= n) continue;
    const auto& before = doc.tokens[static_cast<std::size_t>(rp.span.begin - 1)].surface;
    const auto& after = doc.tokens[static_cast<std::size_t>(rp.span.end)].surface;
    if (flank_pmi(before, after, rp.span.size(), stats) < pmi_threshold) splits.push_back(&rp);
  }

  std::vector<Phrase> out;
  auto emit = [&](int begin, int end, const RelationPhrase* left, const RelationPhrase* right) {
    if (end <= begin) return;
    Phrase p;
    p.doc_id = doc.id;
    p.span = {begin, end};
    for (int i = begin; i < end; ++i) p.tokens.push_back(doc.tokens[static_cast<std::size_t>(i)].surface);
    if (left) p.p_l = *left;
    if (right) p.p_r = *right;
    p.venue = doc.venue;
    p.year = doc.year;
    p.time_slice = doc.time_slice;
    FeatureFilter f = filter;
    if (!f.stats) f.stats = &stats;
    fill_features(p, f);
    out.push_back(std::move(p));
  };

  int begin = 0;
  const RelationPhrase* left = nullptr;
  for (const auto* rp : splits) {
    emit(begin, rp->span.begin, left, rp);
    begin = rp->span.end;
    left = rp;
  }
  emit(begin, n, left, nullptr);
  return out;
}

namespace {

nlohmann::json rp_to_json(const std::optional<RelationPhrase>& rp) {
  if (!rp) return nullptr;
  return {{"text", rp->text()}, {"span", {rp->span.begin, rp->span.end}}};
}

std::optional<RelationPhrase> rp_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  RelationPhrase rp;
  rp.tokens = split_ws(j.at("text").get<std::string>());
  rp.span = {j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()};
  return rp;
}

}  // namespace

nlohmann::json to_json(const Phrase& p) {
  nlohmann::json j;
  j["doc_id"] = p.doc_id;
  j["span"] = {p.span.begin, p.span.end};
  j["tokens"] = p.tokens;
  j["p_w"] = p.p_w;
  j["p_sp"] = p.p_sp;
  j["p_l"] = rp_to_json(p.p_l);
  j["p_r"] = rp_to_json(p.p_r);
  j["venue"] = p.venue;
  j["year"] = p.year;
  j["time_slice"] = p.time_slice;
  return j;
}

Phrase phrase_from_json(const nlohmann::json& j) {
  Phrase p;
  p.doc_id = j.at("doc_id").get<std::string>();
  p.span = {j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()};
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  p.p_w = j.at("p_w").get<std::vector<std::string>>();
  p.p_sp = j.at("p_sp").get<std::vector<std::string>>();
  p.p_l = rp_from_json(j.at("p_l"));
  p.p_r = rp_from_json(j.at("p_r"));
  p.venue = j.at("venue").get<std::string>();
  p.year = j.at("year").get<int>();
  p.time_slice = j.at("time_slice").get<int>();
  if (p.tokens.empty() || p.span.size() != static_cast<int>(p.tokens.size()))
    throw InputError("phrase " + p.key() + ": span and tokens disagree");
  return p;
}

}  // namespace conceptx
