#include "conceptx/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace conceptx {

nlohmann::json to_json(const TypedPhrase& t) {
  nlohmann::json j = to_json(t.phrase);
  j["aspect"] = t.aspect;
  j["domain"] = t.domain ? nlohmann::json(*t.domain) : nlohmann::json(nullptr);
  j["confidence"] = t.confidence;
  return j;
}

TypedPhrase typed_phrase_from_json(const nlohmann::json& j) {
  TypedPhrase t;
  t.phrase = phrase_from_json(j);
  t.aspect = j.at("aspect").get<std::string>();
  if (!j.at("domain").is_null()) t.domain = j.at("domain").get<int>();
  t.confidence = j.at("confidence").get<double>();
  return t;
}

nlohmann::json to_json(const TypedConceptMention& m) {
  nlohmann::json j;
  j["doc_id"] = m.doc_id;
  j["span"] = {m.span.begin, m.span.end};
  j["concept"] = m.concept_text();
  j["concept_span"] = {m.concept_span.begin, m.concept_span.end};
  auto mods = nlohmann::json::array();
  for (const auto& mod : m.modifiers)
    mods.push_back({{"text", join(mod.tokens)},
                    {"position", mod.position == ModifierPosition::Pre ? "pre" : "post"},
                    {"span", {mod.span.begin, mod.span.end}}});
  j["modifiers"] = mods;
  j["aspect"] = m.aspect;
  j["domain"] = m.domain ? nlohmann::json(*m.domain) : nlohmann::json(nullptr);
  j["time_slice"] = m.time_slice;
  return j;
}

TypedConceptMention mention_from_json(const nlohmann::json& j) {
  TypedConceptMention m;
  m.doc_id = j.at("doc_id").get<std::string>();
  m.span = {j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()};
  m.concept_tokens = split_ws(j.at("concept").get<std::string>());
  m.concept_span = {j.at("concept_span").at(0).get<int>(), j.at("concept_span").at(1).get<int>()};
  for (const auto& mj : j.at("modifiers")) {
    Modifier mod;
    mod.tokens = split_ws(mj.at("text").get<std::string>());
    const auto pos = mj.at("position").get<std::string>();
    if (pos != "pre" && pos != "post") throw InputError("modifier position must be pre or post");
    mod.position = pos == "pre" ? ModifierPosition::Pre : ModifierPosition::Post;
    mod.span = {mj.at("span").at(0).get<int>(), mj.at("span").at(1).get<int>()};
    m.modifiers.push_back(std::move(mod));
  }
  m.aspect = j.at("aspect").get<std::string>();
  if (!j.at("domain").is_null()) m.domain = j.at("domain").get<int>();
  m.time_slice = j.at("time_slice").get<int>();
  if (m.concept_tokens.empty()) throw InputError("mention with an empty concept in " + m.doc_id);
  return m;
}

bool tiles_phrase(const TypedConceptMention& m, const std::vector<std::string>& phrase_tokens) {
  if (m.concept_tokens.empty()) return false;
  if (m.span.size() != static_cast<int>(phrase_tokens.size())) return false;
  std::vector<std::pair<Span, const std::vector<std::string>*>> pieces;
  pieces.push_back({m.concept_span, &m.concept_tokens});
  for (const auto& mod : m.modifiers) pieces.push_back({mod.span, &mod.tokens});
  std::sort(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) { return x.first.begin < y.first.begin; });
  int at = m.span.begin;
  for (const auto& [span, tokens] : pieces) {
    if (span.begin != at || span.empty() || span.size() != static_cast<int>(tokens->size())) return false;
    for (int k = 0; k < span.size(); ++k)
      if ((*tokens)[static_cast<std::size_t>(k)] != phrase_tokens[static_cast<std::size_t>(span.begin - m.span.begin + k)])
        return false;
    at = span.end;
  }
  return at == m.span.end;
}

std::optional<TypedConceptMention> read_mention(const DerivationTree& tree, const Grammar& grammar,
                                                const TypedPhrase& typed, const ExtractionOptions& options) {
  const int concept_sym = grammar.nonterminal(options.concept_symbol);
  const int mod_sym = grammar.nonterminal(options.modifier_symbol);
  struct Piece {
    bool is_concept;
    int begin, end;
  };
  std::vector<Piece> pieces;
  int offset = 0;
  auto walk = [&](auto&& self, const DerivationTree& node) -> void {
    if (node.is_leaf()) {
      ++offset;
      return;
    }
    if (node.symbol == concept_sym || (mod_sym >= 0 && node.symbol == mod_sym)) {
      const int begin = offset;
      offset += static_cast<int>(node.yield().size());
      pieces.push_back({node.symbol == concept_sym, begin, offset});
      return;
    }
    for (const auto& c : node.children) self(self, c);
  };
  walk(walk, tree);

  const auto n_concepts = std::count_if(pieces.begin(), pieces.end(), [](const Piece& p) { return p.is_concept; });
  if (n_concepts != 1) return std::nullopt;
  const auto& phrase = typed.phrase;
  auto slice = [&](int b, int e) {
    return std::vector<std::string>(phrase.tokens.begin() + b, phrase.tokens.begin() + e);
  };
  TypedConceptMention m;
  m.doc_id = phrase.doc_id;
  m.span = phrase.span;
  m.aspect = typed.aspect;
  m.domain = typed.domain;
  m.time_slice = phrase.time_slice;
  const auto concept_it = std::find_if(pieces.begin(), pieces.end(), [](const Piece& p) { return p.is_concept; });
  m.concept_tokens = slice(concept_it->begin, concept_it->end);
  m.concept_span = {phrase.span.begin + concept_it->begin, phrase.span.begin + concept_it->end};
  for (const auto& p : pieces) {
    if (p.is_concept) continue;
    Modifier mod;
    mod.tokens = slice(p.begin, p.end);
    mod.position = p.end <= concept_it->begin ? ModifierPosition::Pre : ModifierPosition::Post;
    mod.span = {phrase.span.begin + p.begin, phrase.span.begin + p.end};
    m.modifiers.push_back(std::move(mod));
  }
  return m;
}

PartitionResult extract_partition(const std::vector<TypedPhrase>& phrases, const Grammar& grammar,
                                  const ExtractionOptions& options) {
  if (phrases.empty()) throw std::invalid_argument("extract_partition: empty partition");
  if (grammar.nonterminal(options.concept_symbol) < 0)
    throw std::invalid_argument("grammar has no concept symbol '" + options.concept_symbol + "'");
  PartitionResult out;
  out.aspect = phrases.front().aspect;
  out.domain = phrases.front().domain;
  out.phrases = static_cast<int>(phrases.size());
  out.sparse = out.phrases < options.sparse_warning;

  std::vector<std::vector<std::string>> yields;
  yields.reserve(phrases.size());
  for (const auto& p : phrases) yields.push_back(p.phrase.tokens);
  const auto state = run_sampler(yields, grammar, options.iterations, options.seed, &out.sampler);
  if (const auto* cache = state.cache_for(state.grammar.nonterminal(options.concept_symbol)))
    out.tables = cache->n_tables();

  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const auto& typed = phrases[i];
    const auto key = typed.phrase.key();
    if (typed.phrase.tokens.empty()) {
      out.excluded.push_back({key, "empty phrase"});
      continue;
    }
    const auto it = state.parses.find(static_cast<int>(i));
    if (it == state.parses.end()) {
      out.excluded.push_back({key, options.iterations == 0 ? "not sampled" : "unparseable"});
      continue;
    }
    auto mention = read_mention(it->second, state.grammar, typed, options);
    if (!mention) {
      out.excluded.push_back({key, "parse has no single concept node"});
      continue;
    }
    if (!tiles_phrase(*mention, typed.phrase.tokens)) {
      out.excluded.push_back({key, "concept and modifiers do not tile the phrase"});
      continue;
    }
    out.mentions.push_back(std::move(*mention));
  }
  return out;
}

std::vector<TypedConceptMention> ExtractionResult::mentions() const {
  std::vector<TypedConceptMention> all;
  for (const auto& p : partitions) all.insert(all.end(), p.mentions.begin(), p.mentions.end());
  return all;
}

std::uint64_t partition_seed(std::uint64_t seed, const std::string& aspect, std::optional<int> domain) {
  return mix_seed(seed, hash_string(aspect + "/" + std::to_string(domain.value_or(-1))));
}

ExtractionResult extract_all(const std::vector<TypedPhrase>& phrases, const Grammar& grammar,
                             const ExtractionOptions& options, int jobs) {
  std::map<std::pair<std::string, int>, std::vector<TypedPhrase>> groups;
  for (const auto& p : phrases) groups[{p.aspect, p.domain.value_or(-1)}].push_back(p);
  std::vector<const std::vector<TypedPhrase>*> work;
  for (const auto& [key, group] : groups) work.push_back(&group);

  ExtractionResult result;
  result.partitions.resize(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) {
      try {
        const auto& group = *work[k];
        ExtractionOptions opts = options;
        opts.seed = partition_seed(options.seed, group.front().aspect, group.front().domain);
        result.partitions[k] = extract_partition(group, grammar, opts);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, static_cast<int>(work.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

std::vector<ConceptReport> build_reports(const std::vector<TypedConceptMention>& mentions) {
  std::map<std::string, ConceptReport> by_concept;
  std::map<std::string, std::map<std::string, int>> modifier_counts;
  for (const auto& m : mentions) {
    const auto text = m.concept_text();
    auto& r = by_concept[text];
    r.concept_text = text;
    ++r.mentions;
    ++r.by_aspect[m.aspect];
    if (m.domain) ++r.by_domain[*m.domain];
    for (const auto& mod : m.modifiers) ++modifier_counts[text][join(mod.tokens)];
  }
  std::vector<ConceptReport> out;
  for (auto& [text, r] : by_concept) {
    for (const auto& [mod, count] : modifier_counts[text]) r.modifiers.push_back({mod, count});
    std::stable_sort(r.modifiers.begin(), r.modifiers.end(),
                     [](const ModifierCount& a, const ModifierCount& b) { return a.count > b.count; });
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ConceptReport& a, const ConceptReport& b) { return a.mentions > b.mentions; });
  return out;
}

std::vector<DomainSummary> build_domain_summaries(const std::vector<TypedConceptMention>& mentions,
                                                  const std::vector<std::vector<int>>& venue_counts,
                                                  const std::vector<std::string>& venue_names, double beta_v,
                                                  int top_k) {
  std::vector<DomainSummary> out;
  const auto k = static_cast<std::size_t>(std::max(0, top_k));
  for (std::size_t d = 0; d < venue_counts.size(); ++d) {
    DomainSummary s;
    s.domain = static_cast<int>(d);
    const auto& row = venue_counts[d];
    double total = 0.0;
    for (int c : row) total += c;
    const double denom = total + beta_v * static_cast<double>(row.size());
    for (std::size_t v = 0; v < row.size(); ++v)
      s.top_venues.push_back({v < venue_names.size() ? venue_names[v] : std::to_string(v), (row[v] + beta_v) / denom});
    std::stable_sort(s.top_venues.begin(), s.top_venues.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (s.top_venues.size() > k) s.top_venues.resize(k);

    std::map<std::string, int> concepts;
    for (const auto& m : mentions)
      if (m.domain && *m.domain == s.domain) {
        ++concepts[m.concept_text()];
        ++s.mentions;
      }
    s.top_concepts.assign(concepts.begin(), concepts.end());
    std::stable_sort(s.top_concepts.begin(), s.top_concepts.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (s.top_concepts.size() > k) s.top_concepts.resize(k);
    out.push_back(std::move(s));
  }
  return out;
}

void write_concepts_tsv(std::ostream& out, const std::vector<ConceptReport>& reports, int top_modifiers) {
  out << "concept\tmentions\taspects\tdomains\ttop_modifiers\n";
  for (const auto& r : reports) {
    out << r.concept_text << '\t' << r.mentions << '\t';
    bool first = true;
    for (const auto& [aspect, n] : r.by_aspect) {
      out << (first ? "" : ";") << aspect << '=' << n;
      first = false;
    }
    out << '\t';
    first = true;
    for (const auto& [d, n] : r.by_domain) {
      out << (first ? "" : ";") << d << '=' << n;
      first = false;
    }
    out << '\t';
    for (std::size_t k = 0; k < r.modifiers.size() && static_cast<int>(k) < top_modifiers; ++k)
      out << (k ? "; " : "") << r.modifiers[k].text << " (" << r.modifiers[k].count << ')';
    out << '\n';
  }
}

void write_domains_tsv(std::ostream& out, const std::vector<DomainSummary>& summaries) {
  out << "domain\tmentions\ttop_venues\ttop_concepts\n";
  for (const auto& s : summaries) {
    out << s.domain << '\t' << s.mentions << '\t';
    for (std::size_t k = 0; k < s.top_venues.size(); ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", s.top_venues[k].second);
      out << (k ? "; " : "") << s.top_venues[k].first << " (" << buf << ')';
    }
    out << '\t';
    for (std::size_t k = 0; k < s.top_concepts.size(); ++k)
      out << (k ? "; " : "") << s.top_concepts[k].first << " (" << s.top_concepts[k].second << ')';
    out << '\n';
  }
}

void write_coverage_tsv(std::ostream& out, const ExtractionResult& result) {
  out << "aspect\tdomain\tphrases\tmentions\texcluded\tconcept_tables\tmh_proposals\tmh_accepted\tsparse\n";
  for (const auto& p : result.partitions) {
    out << p.aspect << '\t' << (p.domain ? std::to_string(*p.domain) : "-") << '\t' << p.phrases << '\t'
        << p.mentions.size() << '\t' << p.excluded.size() << '\t' << p.tables << '\t' << p.sampler.proposals << '\t'
        << p.sampler.accepted << '\t' << (p.sparse ? "yes" : "no") << '\n';
  }
}

}  // namespace conceptx
