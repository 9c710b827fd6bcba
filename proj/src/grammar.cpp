#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "conceptx/adaptor_grammar.hpp"

namespace conceptx {

namespace resources {
extern const std::string_view kGrammarAdaptor;
extern const std::string_view kGrammarAdaptorMod;
}  // namespace resources

void PitmanYor::validate() const {
  if (!(b >= 0.0 && b < 1.0)) throw std::invalid_argument("Pitman-Yor discount b must lie in [0, 1)");
  if (!(a > -b)) throw std::invalid_argument("Pitman-Yor scale a must exceed -b");
}

std::string to_string(GrammarVariant v) { return v == GrammarVariant::Adaptor ? "adaptor" : "adaptor_mod"; }

GrammarVariant parse_grammar_variant(std::string_view name) {
  if (name == "adaptor") return GrammarVariant::Adaptor;
  if (name == "adaptor_mod" || name == "adaptor:mod") return GrammarVariant::AdaptorMod;
  throw std::invalid_argument("unknown grammar variant '" + std::string(name) + "' (expected adaptor or adaptor_mod)");
}

int Grammar::add_nonterminal(std::string_view name) {
  if (const int id = nonterminal(name); id >= 0) return id;
  nonterminals_.emplace_back(name);
  by_lhs_.emplace_back();
  alpha_total_.push_back(0.0);
  return n_nonterminals() - 1;
}

int Grammar::nonterminal(std::string_view name) const {
  for (std::size_t i = 0; i < nonterminals_.size(); ++i)
    if (nonterminals_[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<int>& Grammar::lexical_rules(int terminal) const {
  static const std::vector<int> kNone;
  if (terminal < 0 || terminal >= static_cast<int>(lexical_.size())) return kNone;
  return lexical_[static_cast<std::size_t>(terminal)];
}

int Grammar::add_terminal(std::string_view token) {
  const int before = terminals_.size();
  const int id = terminals_.intern(token);
  if (id < before) return id;
  lexical_.resize(static_cast<std::size_t>(terminals_.size()));
  for (const auto& [lhs, alpha] : wildcards_) {
    Rule r;
    r.lhs = lhs;
    r.rhs = {Symbol{true, id}};
    r.alpha = alpha;
    r.from_wildcard = true;
    add_rule(std::move(r));
  }
  return id;
}

int Grammar::add_rule(Rule rule) {
  if (rule.lhs < 0 || rule.lhs >= n_nonterminals()) throw std::invalid_argument("rule head is not a nonterminal");
  if (rule.rhs.empty()) throw std::invalid_argument("rule with empty right-hand side");
  for (const auto& s : rule.rhs) {
    if (s.terminal && (s.id < 0 || s.id >= terminals_.size())) throw std::invalid_argument("unknown terminal in rule");
    if (!s.terminal && (s.id < 0 || s.id >= n_nonterminals()))
      throw std::invalid_argument("unknown nonterminal in rule");
  }
  const int id = static_cast<int>(rules_.size());
  by_lhs_[static_cast<std::size_t>(rule.lhs)].push_back(id);
  alpha_total_[static_cast<std::size_t>(rule.lhs)] += rule.alpha;
  if (rule.rhs.size() == 1 && rule.rhs[0].terminal) {
    lexical_.resize(static_cast<std::size_t>(terminals_.size()));
    lexical_[static_cast<std::size_t>(rule.rhs[0].id)].push_back(id);
  } else {
    structural_.push_back(id);
  }
  rules_.push_back(std::move(rule));
  return id;
}

void Grammar::add_wildcard(int lhs, double alpha, bool expand) {
  if (lhs < 0 || lhs >= n_nonterminals()) throw std::invalid_argument("wildcard head is not a nonterminal");
  if (wildcards_.contains(lhs)) return;
  wildcards_[lhs] = alpha;
  if (!expand) return;
  for (int t = 0; t < terminals_.size(); ++t) {
    Rule r;
    r.lhs = lhs;
    r.rhs = {Symbol{true, t}};
    r.alpha = alpha;
    r.from_wildcard = true;
    add_rule(std::move(r));
  }
}

void Grammar::set_adaptor(int nonterminal, PitmanYor params) {
  if (nonterminal < 0 || nonterminal >= n_nonterminals()) throw std::invalid_argument("adaptor is not a nonterminal");
  params.validate();
  adaptors_[nonterminal] = params;
}

void Grammar::validate() const {
  if (start_ < 0 || start_ >= n_nonterminals()) throw std::invalid_argument("grammar has no start symbol");
  for (const auto& [lhs, alpha] : wildcards_)
    if (!(alpha > 0)) throw std::invalid_argument("wildcard prior must be positive");
  for (const auto& r : rules_)
    if (!(r.alpha > 0)) throw std::invalid_argument("rule prior must be positive: " + nonterminal_name(r.lhs));
  for (const auto& [nt, params] : adaptors_) params.validate();

  const int n = n_nonterminals();
  auto has_rules = [&](int a) { return !by_lhs_[static_cast<std::size_t>(a)].empty() || wildcards_.contains(a); };
  auto reachable_from = [&](int root, bool include_root) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{root};
    std::vector<int> out;
    bool first = true;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      if (!first || include_root) {
        if (seen[static_cast<std::size_t>(a)]) continue;
        seen[static_cast<std::size_t>(a)] = 1;
        out.push_back(a);
      }
      first = false;
      for (int r : by_lhs_[static_cast<std::size_t>(a)])
        for (const auto& s : rules_[static_cast<std::size_t>(r)].rhs)
          if (!s.terminal && !seen[static_cast<std::size_t>(s.id)]) stack.push_back(s.id);
    }
    return out;
  };

  for (int a : reachable_from(start_, true))
    if (!has_rules(a)) throw std::invalid_argument("nonterminal without rules: " + nonterminal_name(a));
  for (const auto& [c, params] : adaptors_)
    for (int a : reachable_from(c, false))
      if (is_adapted(a))
        throw std::invalid_argument("adaptor " + nonterminal_name(c) + " derives adaptor " + nonterminal_name(a));

  // Unary nonterminal rules must form a DAG for the chart to be well defined.
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  std::function<void(int)> visit = [&](int a) {
    state[static_cast<std::size_t>(a)] = 1;
    for (int r : by_lhs_[static_cast<std::size_t>(a)]) {
      const auto& rhs = rules_[static_cast<std::size_t>(r)].rhs;
      if (rhs.size() != 1 || rhs[0].terminal) continue;
      const int b = rhs[0].id;
      if (state[static_cast<std::size_t>(b)] == 1)
        throw std::invalid_argument("cycle of unary rules through " + nonterminal_name(b));
      if (state[static_cast<std::size_t>(b)] == 0) visit(b);
    }
    state[static_cast<std::size_t>(a)] = 2;
  };
  for (int a = 0; a < n; ++a)
    if (state[static_cast<std::size_t>(a)] == 0) visit(a);
}

std::string Grammar::rule_text(int rule) const {
  const auto& r = rules_.at(static_cast<std::size_t>(rule));
  std::string out = nonterminal_name(r.lhs) + " ->";
  for (const auto& s : r.rhs) out += " " + (s.terminal ? terminals_.name(s.id) : nonterminal_name(s.id));
  return out;
}

namespace {

struct ParsedRule {
  std::string lhs;
  std::vector<std::string> rhs;
  int line;
};

[[noreturn]] void grammar_error(int line, const std::string& msg) {
  throw std::invalid_argument("grammar line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) grammar_error(line, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    grammar_error(line, "bad number '" + s + "'");
  }
}

}  // namespace

Grammar parse_grammar(std::istream& in) {
  std::vector<ParsedRule> rules;
  std::vector<std::pair<std::string, std::pair<PitmanYor, int>>> adapts;
  std::map<std::string, double> nt_prior;
  double default_prior = 0.01;
  std::string start;
  int line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto words = split_ws(line);
    if (words.empty()) continue;
    if (words[0] == "start") {
      if (words.size() != 2) grammar_error(line_no, "expected 'start NONTERMINAL'");
      start = words[1];
    } else if (words[0] == "prior") {
      if (words.size() == 2) {
        default_prior = parse_number(words[1], line_no);
      } else if (words.size() == 3) {
        nt_prior[words[1]] = parse_number(words[2], line_no);
      } else {
        grammar_error(line_no, "expected 'prior ALPHA' or 'prior NONTERMINAL ALPHA'");
      }
    } else if (words[0] == "adapt") {
      if (words.size() < 2) grammar_error(line_no, "expected 'adapt NONTERMINAL a=.. b=..'");
      PitmanYor py;
      for (std::size_t k = 2; k < words.size(); ++k) {
        const auto eq = words[k].find('=');
        if (eq == std::string::npos) grammar_error(line_no, "expected key=value, got '" + words[k] + "'");
        const auto key = words[k].substr(0, eq);
        const double v = parse_number(words[k].substr(eq + 1), line_no);
        if (key == "a") {
          py.a = v;
        } else if (key == "b") {
          py.b = v;
        } else {
          grammar_error(line_no, "unknown adaptor parameter '" + key + "'");
        }
      }
      adapts.push_back({words[1], {py, line_no}});
    } else {
      if (words.size() < 2 || words[1] != "->") grammar_error(line_no, "expected 'LHS -> RHS...'");
      if (words.size() == 2) grammar_error(line_no, "empty right-hand side");
      rules.push_back({words[0], {words.begin() + 2, words.end()}, line_no});
    }
  }

  Grammar g;
  for (const auto& r : rules) g.add_nonterminal(r.lhs);
  for (const auto& r : rules) {
    const double alpha = nt_prior.contains(r.lhs) ? nt_prior[r.lhs] : default_prior;
    const int lhs = g.nonterminal(r.lhs);
    if (r.rhs.size() == 1 && r.rhs[0] == "*") {
      g.add_wildcard(lhs, alpha);
      continue;
    }
    Rule rule;
    rule.lhs = lhs;
    rule.alpha = alpha;
    for (const auto& s : r.rhs) {
      if (s == "*") grammar_error(r.line, "wildcard must be the whole right-hand side");
      const int nt = g.nonterminal(s);
      rule.rhs.push_back(nt >= 0 ? Symbol{false, nt} : Symbol{true, g.add_terminal(s)});
    }
    g.add_rule(std::move(rule));
  }
  for (const auto& [name, entry] : adapts) {
    const int nt = g.nonterminal(name);
    if (nt < 0) grammar_error(entry.second, "adaptor '" + name + "' has no rules");
    try {
      g.set_adaptor(nt, entry.first);
    } catch (const std::invalid_argument& e) {
      grammar_error(entry.second, e.what());
    }
  }
  for (const auto& [name, alpha] : nt_prior)
    if (g.nonterminal(name) < 0) throw std::invalid_argument("prior for unknown nonterminal '" + name + "'");
  if (start.empty()) throw std::invalid_argument("grammar has no 'start' declaration");
  const int s = g.nonterminal(start);
  if (s < 0) throw std::invalid_argument("start symbol '" + start + "' has no rules");
  g.set_start(s);
  g.validate();
  return g;
}

Grammar parse_grammar(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_grammar(in);
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grammar file: " + path);
  return parse_grammar(in);
}

std::string_view default_grammar_text(GrammarVariant variant) {
  return variant == GrammarVariant::Adaptor ? resources::kGrammarAdaptor : resources::kGrammarAdaptorMod;
}

Grammar default_grammar(GrammarVariant variant) { return parse_grammar(default_grammar_text(variant)); }

std::vector<int> DerivationTree::yield() const {
  std::vector<int> out;
  append_yield(out);
  return out;
}

void DerivationTree::append_yield(std::vector<int>& out) const {
  if (is_leaf()) {
    out.push_back(terminal);
    return;
  }
  for (const auto& c : children) c.append_yield(out);
}

std::string to_string(const DerivationTree& tree, const Grammar& grammar) {
  if (tree.is_leaf()) return grammar.terminals().name(tree.terminal);
  std::string out = "(" + grammar.nonterminal_name(tree.symbol);
  for (const auto& c : tree.children) out += " " + to_string(c, grammar);
  return out + ")";
}

nlohmann::json to_json(const Grammar& g) {
  nlohmann::json j;
  std::vector<std::string> nts;
  for (int a = 0; a < g.n_nonterminals(); ++a) nts.push_back(g.nonterminal_name(a));
  j["nonterminals"] = nts;
  j["terminals"] = g.terminals().names();
  j["start"] = g.start();
  // All rules in id order, including materialized wildcard rules, so that
  // rule ids stored in parses stay valid after reloading.
  auto rules = nlohmann::json::array();
  for (const auto& r : g.rules()) {
    auto rhs = nlohmann::json::array();
    for (const auto& s : r.rhs) rhs.push_back({s.terminal ? "t" : "n", s.id});
    rules.push_back({{"lhs", r.lhs}, {"rhs", rhs}, {"alpha", r.alpha}, {"wildcard", r.from_wildcard}});
  }
  j["rules"] = rules;
  auto wild = nlohmann::json::array();
  for (const auto& [lhs, alpha] : g.wildcards()) wild.push_back({{"lhs", lhs}, {"alpha", alpha}});
  j["wildcards"] = wild;
  auto adapt = nlohmann::json::array();
  for (const auto& [nt, p] : g.adaptors()) adapt.push_back({{"nonterminal", nt}, {"a", p.a}, {"b", p.b}});
  j["adaptors"] = adapt;
  return j;
}

Grammar grammar_from_json(const nlohmann::json& j) {
  Grammar g;
  for (const auto& n : j.at("nonterminals")) g.add_nonterminal(n.get<std::string>());
  // Terminals go in before any wildcard is registered so nothing expands twice.
  for (const auto& t : j.at("terminals")) g.add_terminal(t.get<std::string>());
  for (const auto& r : j.at("rules")) {
    Rule rule;
    rule.lhs = r.at("lhs").get<int>();
    rule.alpha = r.at("alpha").get<double>();
    rule.from_wildcard = r.value("wildcard", false);
    for (const auto& s : r.at("rhs")) rule.rhs.push_back({s.at(0).get<std::string>() == "t", s.at(1).get<int>()});
    g.add_rule(std::move(rule));
  }
  for (const auto& w : j.at("wildcards"))
    g.add_wildcard(w.at("lhs").get<int>(), w.at("alpha").get<double>(), /*expand=*/false);
  for (const auto& a : j.at("adaptors"))
    g.set_adaptor(a.at("nonterminal").get<int>(), {a.at("a").get<double>(), a.at("b").get<double>()});
  g.set_start(j.at("start").get<int>());
  g.validate();
  return g;
}

}  // namespace conceptx
