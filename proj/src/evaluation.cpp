#include "conceptx/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>

#include "conceptx/corpus.hpp"

namespace conceptx {

PRF make_prf(int correct, int predicted, int gold) {
  PRF r;
  r.correct = correct;
  r.predicted = predicted;
  r.gold = gold;
  r.defined = gold > 0;
  r.precision = predicted > 0 ? static_cast<double>(correct) / predicted : 0.0;
  r.recall = gold > 0 ? static_cast<double>(correct) / gold : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

namespace {

using Key = std::pair<std::string, std::vector<std::string>>;

std::set<std::string> gold_documents(const std::vector<GoldAnnotation>& gold, const std::set<std::string>* corpus_docs) {
  std::set<std::string> docs;
  for (const auto& g : gold) {
    if (corpus_docs != nullptr && !corpus_docs->contains(g.doc_id))
      throw InputError("gold annotation for unknown document '" + g.doc_id + "'");
    docs.insert(g.doc_id);
  }
  return docs;
}

// Counts one-to-one matches between two multisets keyed by `key_of`.
template <typename KeyOf>
PRF match(const std::vector<const EvalMention*>& predicted, const std::vector<const EvalMention*>& gold, KeyOf key_of) {
  std::map<decltype(key_of(*gold.front())), int> remaining;
  for (const auto* g : gold) ++remaining[key_of(*g)];
  int correct = 0;
  for (const auto* p : predicted) {
    auto it = remaining.find(key_of(*p));
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++correct;
    }
  }
  return make_prf(correct, static_cast<int>(predicted.size()), static_cast<int>(gold.size()));
}

std::vector<const EvalMention*> restrict(const std::vector<EvalMention>& xs, const std::set<std::string>& docs,
                                         const std::string* aspect) {
  std::vector<const EvalMention*> out;
  for (const auto& x : xs)
    if (docs.contains(x.doc_id) && (aspect == nullptr || x.aspect == *aspect)) out.push_back(&x);
  return out;
}

}  // namespace

PRF concept_quality(const std::vector<EvalMention>& predicted, const std::vector<GoldAnnotation>& gold,
                    const std::set<std::string>* corpus_docs) {
  const auto docs = gold_documents(gold, corpus_docs);
  const auto p = restrict(predicted, docs, nullptr);
  const auto g = restrict(gold, docs, nullptr);
  if (g.empty()) return make_prf(0, static_cast<int>(p.size()), 0);
  return match(p, g, [](const EvalMention& m) { return Key{m.doc_id, m.tokens}; });
}

TypedReport typed_quality(const std::vector<EvalMention>& predicted, const std::vector<GoldAnnotation>& gold,
                          const std::set<std::string>* corpus_docs) {
  const auto docs = gold_documents(gold, corpus_docs);
  auto key = [](const EvalMention& m) { return std::make_tuple(m.doc_id, m.tokens, m.aspect); };
  auto run = [&](const std::string* aspect) {
    const auto p = restrict(predicted, docs, aspect);
    const auto g = restrict(gold, docs, aspect);
    if (g.empty()) return make_prf(0, static_cast<int>(p.size()), 0);
    return match(p, g, key);
  };
  const std::string technique = kTechnique;
  const std::string application = kApplication;
  return {run(nullptr), run(&technique), run(&application)};
}

std::vector<EvalMention> to_eval(const std::vector<TypedConceptMention>& mentions) {
  std::vector<EvalMention> out;
  out.reserve(mentions.size());
  for (const auto& m : mentions) out.push_back({m.doc_id, m.concept_tokens, m.aspect});
  return out;
}

std::string normalize_aspect(std::string_view label) {
  std::string lower;
  for (char c : label) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "technique" || lower == "t") return kTechnique;
  if (lower == "application" || lower == "a") return kApplication;
  throw InputError("unknown aspect label '" + std::string(label) + "'");
}

std::vector<GoldAnnotation> load_gold(std::istream& in) {
  std::vector<GoldAnnotation> out;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError("gold line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    GoldAnnotation g;
    if (line[first] == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        g.doc_id = j.at("doc_id").get<std::string>();
        const auto& mention = j.at("mention");
        g.tokens = mention.is_array() ? tokenize(join(mention.get<std::vector<std::string>>()))
                                      : tokenize(mention.get<std::string>());
        g.aspect = normalize_aspect(j.at("aspect").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        fail(e.what());
      }
    } else {
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
        cols.push_back(line.substr(start, tab - start));
      cols.push_back(line.substr(start));
      if (line_no == 1 && cols.size() >= 1 && cols[0] == "doc_id") continue;
      if (cols.size() != 3) fail("expected 3 tab-separated columns, got " + std::to_string(cols.size()));
      g.doc_id = cols[0];
      g.tokens = tokenize(cols[1]);
      g.aspect = normalize_aspect(cols[2]);
    }
    if (g.doc_id.empty()) fail("empty doc_id");
    if (g.tokens.empty()) fail("empty mention");
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open gold file: " + path.string());
  return load_gold(in);
}

nlohmann::json to_json(const PRF& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},     {"predicted", r.predicted},
          {"gold", r.gold},           {"correct", r.correct}, {"defined", r.defined}};
}

nlohmann::json to_json(const TypedReport& r) {
  return {{"overall", to_json(r.overall)}, {"technique", to_json(r.technique)}, {"application", to_json(r.application)}};
}

std::string format_metrics_table(const PRF& concept_prf, const TypedReport& typed) {
  std::string out = "metric                 precision  recall     f1         correct/pred/gold\n";
  auto row = [&](const char* name, const PRF& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %-10.4f %-10.4f %-10.4f %d/%d/%d%s\n", name, r.precision, r.recall, r.f1,
                  r.correct, r.predicted, r.gold, r.defined ? "" : "  (undefined: no gold)");
    out += buf;
  };
  row("concept", concept_prf);
  row("typed overall", typed.overall);
  row("typed technique", typed.technique);
  row("typed application", typed.application);
  return out;
}

}  // namespace conceptx
