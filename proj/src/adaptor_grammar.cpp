#include "conceptx/adaptor_grammar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace conceptx {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double hi = std::max(x, y);
  return hi + std::log1p(std::exp(std::min(x, y) - hi));
}

double rule_weight(const AdaptedGrammarState& s, int rule) {
  if (rule < 0) return 0.0;  // binarization bookkeeping
  const auto& r = s.grammar.rules()[static_cast<std::size_t>(rule)];
  return std::log((s.rule_counts[static_cast<std::size_t>(rule)] + r.alpha) /
                  (s.lhs_counts[static_cast<std::size_t>(r.lhs)] + s.grammar.alpha_total(r.lhs)));
}

}  // namespace

std::vector<int> AdaptorCache::occupancy() const {
  std::vector<int> out;
  out.reserve(tables.size());
  for (const auto& [id, t] : tables) out.push_back(t.customers);
  return out;
}

AdaptedGrammarState::AdaptedGrammarState(Grammar g) : grammar(std::move(g)) {
  for (const auto& [nt, params] : grammar.adaptors()) {
    cache_of[nt] = static_cast<int>(caches.size());
    AdaptorCache c;
    c.symbol = nt;
    c.params = params;
    caches.push_back(std::move(c));
  }
  sync_rules();
}

void AdaptedGrammarState::sync_rules() {
  rule_counts.resize(grammar.rules().size(), 0);
  lhs_counts.resize(static_cast<std::size_t>(grammar.n_nonterminals()), 0);
}

std::vector<int> AdaptedGrammarState::encode(const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    int id = grammar.terminals().find(t);
    if (id < 0 && grammar.has_wildcard()) id = grammar.add_terminal(t);
    ids.push_back(id);
  }
  sync_rules();
  return ids;
}

const AdaptorCache* AdaptedGrammarState::cache_for(int nonterminal) const {
  const auto it = cache_of.find(nonterminal);
  return it == cache_of.end() ? nullptr : &caches[static_cast<std::size_t>(it->second)];
}

AdaptorCache* AdaptedGrammarState::cache_for(int nonterminal) {
  const auto it = cache_of.find(nonterminal);
  return it == cache_of.end() ? nullptr : &caches[static_cast<std::size_t>(it->second)];
}

// ---------------------------------------------------------------------------
// Closed-form probabilities

double crp_seat_prob(std::span<const int> occupancy, const PitmanYor& params, int choice) {
  params.validate();
  const int n = std::accumulate(occupancy.begin(), occupancy.end(), 0);
  const double k = static_cast<double>(occupancy.size());
  if (choice < 0) return n == 0 ? 1.0 : (k * params.b + params.a) / (n + params.a);
  if (choice >= static_cast<int>(occupancy.size()) || occupancy[static_cast<std::size_t>(choice)] < 1)
    throw std::out_of_range("crp_seat_prob: table " + std::to_string(choice) + " is not occupied");
  return (occupancy[static_cast<std::size_t>(choice)] - params.b) / (n + params.a);
}

double crp_seat_prob(const AdaptorCache& cache, std::int64_t choice) {
  const auto& p = cache.params;
  if (choice == kNewTable)
    return cache.customers == 0 ? 1.0 : (cache.n_tables() * p.b + p.a) / (cache.customers + p.a);
  const auto it = cache.tables.find(choice);
  if (it == cache.tables.end() || it->second.customers < 1)
    throw std::out_of_range("crp_seat_prob: table " + std::to_string(choice) + " is not occupied");
  return (it->second.customers - p.b) / (cache.customers + p.a);
}

double log_p_pyp(std::span<const int> occupancy, const PitmanYor& params) {
  params.validate();
  const auto& [a, b] = params;
  double lp = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < occupancy.size(); ++k) {
    const int m = occupancy[k];
    if (m < 1) throw std::invalid_argument("p_pyp: every table needs at least one customer");
    // The first table's factor a cancels the first denominator factor (0 + a).
    if (k > 0) lp += std::log(b * static_cast<double>(k) + a);
    for (int j = 1; j < m; ++j) lp += std::log(j - b);
    n += m;
  }
  for (int i = 1; i < n; ++i) lp -= std::log(i + a);
  return lp;
}

double p_pyp(std::span<const int> occupancy, const PitmanYor& params) {
  return std::exp(log_p_pyp(occupancy, params));
}

double log_p_dir(std::span<const int> counts, std::span<const double> alpha) {
  if (counts.size() != alpha.size()) throw std::invalid_argument("p_dir: count and prior vectors differ in length");
  double sum_a = 0.0;
  double sum_fa = 0.0;
  double lp = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (!(alpha[k] > 0)) throw std::invalid_argument("p_dir: prior entries must be positive");
    if (counts[k] < 0) throw std::invalid_argument("p_dir: negative count");
    sum_a += alpha[k];
    sum_fa += counts[k] + alpha[k];
    if (counts[k] > 0) lp += std::lgamma(counts[k] + alpha[k]) - std::lgamma(alpha[k]);
  }
  return lp + std::lgamma(sum_a) - std::lgamma(sum_fa);
}

double p_dir(std::span<const int> counts, std::span<const double> alpha) { return std::exp(log_p_dir(counts, alpha)); }

double joint_log_prob(const AdaptedGrammarState& s) {
  double lp = 0.0;
  const auto& g = s.grammar;
  for (int a = 0; a < g.n_nonterminals(); ++a) {
    if (g.is_adapted(a)) continue;
    // Sparse form of log_p_dir: zero-count rules contribute nothing.
    double part = std::lgamma(g.alpha_total(a)) -
                  std::lgamma(s.lhs_counts[static_cast<std::size_t>(a)] + g.alpha_total(a));
    for (int r : g.rules_of(a)) {
      const int f = s.rule_counts[static_cast<std::size_t>(r)];
      if (f > 0) {
        const double alpha = g.rules()[static_cast<std::size_t>(r)].alpha;
        part += std::lgamma(f + alpha) - std::lgamma(alpha);
      }
    }
    lp += part;
  }
  for (const auto& c : s.caches) lp += log_p_pyp(c.occupancy(), c.params);
  return lp;
}

// ---------------------------------------------------------------------------
// Inside chart

InsideChart::InsideChart(const AdaptedGrammarState& state, std::span<const int> yield)
    : state_(state), yield_(yield.begin(), yield.end()), n_(static_cast<int>(yield.size())) {
  const auto& g = state.grammar;
  if (n_ == 0) throw std::invalid_argument("inside chart over an empty yield");
  if (g.start() < 0) throw std::invalid_argument("grammar has no start symbol");
  for (int t : yield_)
    if (t < 0 || t >= g.terminals().size()) throw std::invalid_argument("token outside the grammar's terminals");
  if (state.rule_counts.size() != g.rules().size()) throw std::logic_error("rule counts out of sync with grammar");

  n_symbols_ = g.n_nonterminals();
  auto fresh_symbol = [&] { return n_symbols_++; };
  for (int r : g.structural_rules()) {
    const auto& rule = g.rules()[static_cast<std::size_t>(r)];
    std::vector<int> syms;
    for (const auto& s : rule.rhs) {
      if (!s.terminal) {
        syms.push_back(s.id);
      } else {
        const int pre = fresh_symbol();
        lexical_.push_back({pre, s.id, -1});
        syms.push_back(pre);
      }
    }
    if (syms.size() == 1) {
      unary_.push_back({rule.lhs, syms[0], r});
      continue;
    }
    int lhs = rule.lhs;
    int owner = r;
    for (std::size_t k = 0; k + 2 < syms.size(); ++k) {
      const int mid = fresh_symbol();
      binary_.push_back({lhs, syms[k], mid, owner});
      lhs = mid;
      owner = -1;
    }
    binary_.push_back({lhs, syms[syms.size() - 2], syms.back(), owner});
  }

  binary_of_.assign(static_cast<std::size_t>(n_symbols_), {});
  unary_of_.assign(static_cast<std::size_t>(n_symbols_), {});
  for (std::size_t k = 0; k < binary_.size(); ++k)
    binary_of_[static_cast<std::size_t>(binary_[k].lhs)].push_back(static_cast<int>(k));
  for (std::size_t k = 0; k < unary_.size(); ++k)
    unary_of_[static_cast<std::size_t>(unary_[k].lhs)].push_back(static_cast<int>(k));

  // Children of unary rules come first; the grammar guarantees no unary cycle.
  std::vector<char> done(static_cast<std::size_t>(n_symbols_), 0);
  std::function<void(int)> visit = [&](int a) {
    done[static_cast<std::size_t>(a)] = 1;
    for (int u : unary_of_[static_cast<std::size_t>(a)]) {
      const int c = unary_[static_cast<std::size_t>(u)].child;
      if (!done[static_cast<std::size_t>(c)]) visit(c);
    }
    order_.push_back(a);
  };
  for (int a = 0; a < n_symbols_; ++a)
    if (!done[static_cast<std::size_t>(a)]) visit(a);

  const std::size_t size = static_cast<std::size_t>(n_symbols_) * (n_ + 1) * (n_ + 1);
  base_.assign(size, kNegInf);
  inside_.assign(size, kNegInf);
  std::vector<double> acc(static_cast<std::size_t>(n_symbols_));
  std::vector<int> span_yield;
  for (int len = 1; len <= n_; ++len) {
    for (int i = 0; i + len <= n_; ++i) {
      const int j = i + len;
      std::fill(acc.begin(), acc.end(), kNegInf);
      if (len == 1) {
        const int t = yield_[static_cast<std::size_t>(i)];
        for (int r : g.lexical_rules(t)) {
          const int lhs = g.rules()[static_cast<std::size_t>(r)].lhs;
          acc[static_cast<std::size_t>(lhs)] = log_add(acc[static_cast<std::size_t>(lhs)], rule_weight(state, r));
        }
        for (const auto& lx : lexical_)
          if (lx.terminal == t) acc[static_cast<std::size_t>(lx.lhs)] = log_add(acc[static_cast<std::size_t>(lx.lhs)], 0.0);
      } else {
        for (const auto& b : binary_) {
          const double w = rule_weight(state, b.rule);
          double& slot = acc[static_cast<std::size_t>(b.lhs)];
          for (int k = i + 1; k < j; ++k) {
            const double l = inside_[cell(b.left, i, k)];
            if (l == kNegInf) continue;
            const double r = inside_[cell(b.right, k, j)];
            if (r == kNegInf) continue;
            slot = log_add(slot, w + l + r);
          }
        }
      }
      for (int a : order_) {
        double& slot = acc[static_cast<std::size_t>(a)];
        for (int u : unary_of_[static_cast<std::size_t>(a)]) {
          const auto& ur = unary_[static_cast<std::size_t>(u)];
          const double c = inside_[cell(ur.child, i, j)];
          if (c != kNegInf) slot = log_add(slot, rule_weight(state, ur.rule) + c);
        }
        base_[cell(a, i, j)] = slot;
        const AdaptorCache* cache = a < g.n_nonterminals() ? state.cache_for(a) : nullptr;
        if (cache == nullptr || cache->customers == 0) {
          inside_[cell(a, i, j)] = slot;
          continue;
        }
        double total = slot == kNegInf ? kNegInf : new_table_log_weight(*cache) + slot;
        span_yield.assign(yield_.begin() + i, yield_.begin() + j);
        if (const auto it = cache->by_yield.find(span_yield); it != cache->by_yield.end())
          for (auto id : it->second) total = log_add(total, table_log_weight(*cache, cache->tables.at(id)));
        inside_[cell(a, i, j)] = total;
      }
    }
  }
}

std::size_t InsideChart::cell(int sym, int i, int j) const {
  return (static_cast<std::size_t>(sym) * (n_ + 1) + static_cast<std::size_t>(i)) * (n_ + 1) +
         static_cast<std::size_t>(j);
}

double InsideChart::log_inside(int nonterminal, int i, int j) const {
  if (nonterminal < 0 || nonterminal >= n_symbols_ || i < 0 || j > n_ || i >= j)
    throw std::out_of_range("log_inside: bad cell");
  return inside_[cell(nonterminal, i, j)];
}

double InsideChart::rule_log_weight(int rule) const { return rule_weight(state_, rule); }

double InsideChart::table_log_weight(const AdaptorCache& cache, const Table& t) const {
  return std::log((t.customers - cache.params.b) / (cache.customers + cache.params.a));
}

double InsideChart::new_table_log_weight(const AdaptorCache& cache) const {
  if (cache.customers == 0) return 0.0;
  return std::log((cache.n_tables() * cache.params.b + cache.params.a) / (cache.customers + cache.params.a));
}

DerivationTree InsideChart::sample(Rng& rng, double& log_q) const {
  if (!parseable()) throw std::invalid_argument("yield is not derivable from the grammar");
  double lw = 0.0;
  DerivationTree tree = sample_symbol(state_.grammar.start(), 0, n_, rng, lw);
  log_q = lw - log_total();
  return tree;
}

DerivationTree InsideChart::sample_symbol(int sym, int i, int j, Rng& rng, double& log_weight) const {
  const AdaptorCache* cache = state_.cache_for(sym);
  if (cache != nullptr && cache->customers > 0) {
    std::vector<double> options;
    std::vector<const Table*> tables;
    const std::vector<int> span_yield(yield_.begin() + i, yield_.begin() + j);
    if (const auto it = cache->by_yield.find(span_yield); it != cache->by_yield.end()) {
      for (auto id : it->second) {
        const Table& t = cache->tables.at(id);
        tables.push_back(&t);
        options.push_back(table_log_weight(*cache, t));
      }
    }
    const double base = base_[cell(sym, i, j)];
    options.push_back(base == kNegInf ? kNegInf : new_table_log_weight(*cache) + base);
    const int pick = sample_log_weights(options, rng);
    if (pick < static_cast<int>(tables.size())) {
      log_weight += options[static_cast<std::size_t>(pick)];
      return tables[static_cast<std::size_t>(pick)]->tree;
    }
    log_weight += new_table_log_weight(*cache);
  }
  std::vector<DerivationTree> out;
  expand(sym, i, j, rng, log_weight, out);
  return std::move(out.front());
}

void InsideChart::expand(int sym, int i, int j, Rng& rng, double& log_weight, std::vector<DerivationTree>& out) const {
  // Alternatives: lexical rule, unary rule, or binary rule at split k.
  struct Option {
    int kind;  // 0 lexical grammar rule, 1 lexical intermediate, 2 unary, 3 binary
    int index;
    int split;
  };
  std::vector<Option> opts;
  std::vector<double> weights;
  const auto& g = state_.grammar;
  if (j == i + 1) {
    const int t = yield_[static_cast<std::size_t>(i)];
    for (int r : g.lexical_rules(t)) {
      if (g.rules()[static_cast<std::size_t>(r)].lhs != sym) continue;
      opts.push_back({0, r, 0});
      weights.push_back(rule_log_weight(r));
    }
    for (std::size_t k = 0; k < lexical_.size(); ++k) {
      if (lexical_[k].lhs != sym || lexical_[k].terminal != t) continue;
      opts.push_back({1, static_cast<int>(k), 0});
      weights.push_back(0.0);
    }
  }
  for (int u : unary_of_[static_cast<std::size_t>(sym)]) {
    const auto& ur = unary_[static_cast<std::size_t>(u)];
    const double c = inside_[cell(ur.child, i, j)];
    if (c == kNegInf) continue;
    opts.push_back({2, u, 0});
    weights.push_back(rule_log_weight(ur.rule) + c);
  }
  for (int b : binary_of_[static_cast<std::size_t>(sym)]) {
    const auto& br = binary_[static_cast<std::size_t>(b)];
    const double w = rule_log_weight(br.rule);
    for (int k = i + 1; k < j; ++k) {
      const double l = inside_[cell(br.left, i, k)];
      const double r = inside_[cell(br.right, k, j)];
      if (l == kNegInf || r == kNegInf) continue;
      opts.push_back({3, b, k});
      weights.push_back(w + l + r);
    }
  }
  if (opts.empty()) throw std::logic_error("inside chart: no derivation for a reachable cell");
  const Option o = opts[static_cast<std::size_t>(sample_log_weights(weights, rng))];

  const bool real = sym < g.n_nonterminals();
  DerivationTree* node = nullptr;
  if (real) {
    out.push_back({});
    node = &out.back();
    node->symbol = sym;
  }
  auto emit_child = [&](int child, int a, int b, std::vector<DerivationTree>& dest) {
    if (child < g.n_nonterminals()) {
      dest.push_back(sample_symbol(child, a, b, rng, log_weight));
    } else {
      expand(child, a, b, rng, log_weight, dest);
    }
  };
  std::vector<DerivationTree>& dest = real ? node->children : out;
  switch (o.kind) {
    case 0: {
      node->rule = o.index;
      log_weight += rule_log_weight(o.index);
      DerivationTree leaf;
      leaf.terminal = yield_[static_cast<std::size_t>(i)];
      dest.push_back(leaf);
      break;
    }
    case 1: {
      DerivationTree leaf;
      leaf.terminal = yield_[static_cast<std::size_t>(i)];
      dest.push_back(leaf);
      break;
    }
    case 2: {
      const auto& ur = unary_[static_cast<std::size_t>(o.index)];
      node->rule = ur.rule;
      log_weight += rule_log_weight(ur.rule);
      emit_child(ur.child, i, j, dest);
      break;
    }
    default: {
      const auto& br = binary_[static_cast<std::size_t>(o.index)];
      if (real) node->rule = br.rule;
      log_weight += rule_log_weight(br.rule);
      emit_child(br.left, i, o.split, dest);
      emit_child(br.right, o.split, j, dest);
      break;
    }
  }
}

double InsideChart::tree_weight(const DerivationTree& node, std::map<std::int64_t, int>& absent_uses) const {
  if (node.is_leaf()) return 0.0;
  double lw = 0.0;
  if (const AdaptorCache* cache = state_.cache_for(node.symbol)) {
    if (node.table != kNewTable) {
      if (const auto it = cache->tables.find(node.table); it != cache->tables.end())
        return table_log_weight(*cache, it->second);
      if (++absent_uses[node.table] > 1) return kNegInf;
    }
    lw += new_table_log_weight(*cache);
  }
  lw += rule_log_weight(node.rule);
  for (const auto& c : node.children) {
    lw += tree_weight(c, absent_uses);
    if (lw == kNegInf) return kNegInf;
  }
  return lw;
}

double InsideChart::log_proposal_prob(const DerivationTree& tree) const {
  std::map<std::int64_t, int> absent;
  const double lw = tree_weight(tree, absent);
  return lw == kNegInf ? kNegInf : lw - log_total();
}

// ---------------------------------------------------------------------------
// State updates

namespace {

double count_rule(AdaptedGrammarState& s, int rule, int delta) {
  const auto& r = s.grammar.rules()[static_cast<std::size_t>(rule)];
  auto& f = s.rule_counts[static_cast<std::size_t>(rule)];
  auto& total = s.lhs_counts[static_cast<std::size_t>(r.lhs)];
  if (delta < 0) {
    --f;
    --total;
    if (f < 0) throw std::logic_error("rule count went negative: " + s.grammar.rule_text(rule));
  }
  double inc = 0.0;
  if (!s.grammar.is_adapted(r.lhs)) inc = std::log((f + r.alpha) / (total + s.grammar.alpha_total(r.lhs)));
  if (delta > 0) {
    ++f;
    ++total;
  }
  return inc;
}

// Counts every rule below (and at) an adapted node's base expansion.
double count_subtree(AdaptedGrammarState& s, const DerivationTree& node, int delta) {
  if (node.is_leaf()) return 0.0;
  double inc = count_rule(s, node.rule, delta);
  for (const auto& c : node.children) inc += count_subtree(s, c, delta);
  return inc;
}

double insert_node(AdaptedGrammarState& s, DerivationTree& node) {
  if (node.is_leaf()) return 0.0;
  if (AdaptorCache* cache = s.cache_for(node.symbol)) {
    const auto& p = cache->params;
    if (node.table != kNewTable) {
      if (auto it = cache->tables.find(node.table); it != cache->tables.end()) {
        const double inc = std::log((it->second.customers - p.b) / (cache->customers + p.a));
        ++it->second.customers;
        ++cache->customers;
        return inc;
      }
    }
    double inc = cache->customers == 0
                     ? 0.0
                     : std::log((cache->n_tables() * p.b + p.a) / (cache->customers + p.a));
    if (node.table == kNewTable) node.table = s.next_table++;
    inc += count_subtree(s, node, +1);
    Table t;
    t.id = node.table;
    t.tree = node;
    t.yield = node.yield();
    t.customers = 1;
    cache->by_yield[t.yield].insert(t.id);
    cache->tables.emplace(t.id, std::move(t));
    ++cache->customers;
    return inc;
  }
  double inc = count_rule(s, node.rule, +1);
  for (auto& c : node.children) inc += insert_node(s, c);
  return inc;
}

double remove_node(AdaptedGrammarState& s, const DerivationTree& node) {
  if (node.is_leaf()) return 0.0;
  if (AdaptorCache* cache = s.cache_for(node.symbol)) {
    const auto& p = cache->params;
    auto it = cache->tables.find(node.table);
    if (it == cache->tables.end()) throw std::logic_error("parse refers to a missing table");
    --it->second.customers;
    --cache->customers;
    if (it->second.customers > 0) return std::log((it->second.customers - p.b) / (cache->customers + p.a));
    double inc = count_subtree(s, it->second.tree, -1);
    auto by = cache->by_yield.find(it->second.yield);
    by->second.erase(it->first);
    if (by->second.empty()) cache->by_yield.erase(by);
    cache->tables.erase(it);
    if (cache->customers > 0) inc += std::log((cache->n_tables() * p.b + p.a) / (cache->customers + p.a));
    return inc;
  }
  double inc = count_rule(s, node.rule, -1);
  for (const auto& c : node.children) inc += remove_node(s, c);
  return inc;
}

}  // namespace

double insert_parse(AdaptedGrammarState& state, DerivationTree& tree) {
  state.sync_rules();
  return insert_node(state, tree);
}

double remove_parse(AdaptedGrammarState& state, const DerivationTree& tree) { return remove_node(state, tree); }

MhOutcome sample_parse_mh(AdaptedGrammarState& state, int phrase, std::span<const int> yield, Rng& rng) {
  if (yield.empty()) throw std::invalid_argument("sample_parse_mh: empty yield");
  MhOutcome out;
  state.sync_rules();
  const auto t_limit = state.grammar.terminals().size();
  for (int t : yield) {
    if (t < 0 || t >= t_limit) {
      state.unparseable.insert(phrase);
      return out;
    }
  }

  const auto found = state.parses.find(phrase);
  std::optional<DerivationTree> old;
  double old_inc = 0.0;
  if (found != state.parses.end()) {
    old = std::move(found->second);
    state.parses.erase(found);
    old_inc = remove_parse(state, *old);
  }

  double lq_new = 0.0;
  double lq_old = 0.0;
  DerivationTree proposal;
  {
    const InsideChart chart(state, yield);
    if (!chart.parseable()) {
      if (old) {
        insert_parse(state, *old);
        state.parses[phrase] = std::move(*old);
        out.parsed = true;
      } else {
        state.unparseable.insert(phrase);
      }
      return out;
    }
    proposal = chart.sample(rng, lq_new);
    if (old) lq_old = chart.log_proposal_prob(*old);
  }
  out.parsed = true;
  state.unparseable.erase(phrase);
  const double new_inc = insert_parse(state, proposal);
  if (!old) {
    out.first_time = true;
    out.accepted = true;
    state.parses[phrase] = std::move(proposal);
    return out;
  }

  const double log_ratio = (new_inc - old_inc) + (lq_old - lq_new);
  out.accepted = log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
  if (out.accepted) {
    state.parses[phrase] = std::move(proposal);
  } else {
    remove_parse(state, proposal);
    insert_parse(state, *old);
    state.parses[phrase] = std::move(*old);
  }
  return out;
}

bool sample_block_mh(AdaptedGrammarState& state, std::span<const int> block,
                     const std::vector<std::vector<int>>& yields, Rng& rng) {
  state.sync_rules();
  std::vector<DerivationTree> old;
  old.reserve(block.size());
  for (int p : block) {
    const auto it = state.parses.find(p);
    if (it == state.parses.end()) throw std::invalid_argument("sample_block_mh: phrase without a parse");
    old.push_back(it->second);
  }
  auto yield_of = [&](std::size_t k) -> std::span<const int> {
    return yields.at(static_cast<std::size_t>(block[k]));
  };

  double old_inc = 0.0;
  for (std::size_t k = old.size(); k-- > 0;) {
    state.parses.erase(block[k]);
    old_inc += remove_parse(state, old[k]);
  }

  // Reverse proposal: the old parses replayed in block order.
  double lq_old = 0.0;
  for (std::size_t k = 0; k < old.size(); ++k) {
    lq_old += InsideChart(state, yield_of(k)).log_proposal_prob(old[k]);
    insert_parse(state, old[k]);
  }
  for (std::size_t k = old.size(); k-- > 0;) remove_parse(state, old[k]);

  double lq_new = 0.0;
  double new_inc = 0.0;
  std::vector<DerivationTree> proposal(old.size());
  for (std::size_t k = 0; k < old.size(); ++k) {
    const InsideChart chart(state, yield_of(k));
    double lq = 0.0;
    proposal[k] = chart.sample(rng, lq);
    lq_new += lq;
    new_inc += insert_parse(state, proposal[k]);
  }

  const double log_ratio = (new_inc - old_inc) + (lq_old - lq_new);
  const bool accepted = log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
  if (!accepted) {
    for (std::size_t k = proposal.size(); k-- > 0;) remove_parse(state, proposal[k]);
    for (auto& t : old) insert_parse(state, t);
  }
  auto& kept = accepted ? proposal : old;
  for (std::size_t k = 0; k < kept.size(); ++k) state.parses[block[k]] = std::move(kept[k]);
  return accepted;
}

AdaptedGrammarState run_sampler(const std::vector<std::vector<std::string>>& phrases, Grammar grammar,
                                int iterations, std::uint64_t seed, SamplerStats* stats) {
  grammar.validate();
  if (iterations < 0) throw std::invalid_argument("run_sampler: negative iteration count");
  AdaptedGrammarState state(std::move(grammar));
  std::vector<std::vector<int>> yields;
  yields.reserve(phrases.size());
  for (const auto& p : phrases) yields.push_back(state.encode(p));

  std::map<int, std::vector<int>> containing;
  for (std::size_t p = 0; p < yields.size(); ++p) {
    std::set<int> seen(yields[p].begin(), yields[p].end());
    for (int t : seen) containing[t].push_back(static_cast<int>(p));
  }
  std::vector<std::vector<int>> blocks;
  for (auto& [t, members] : containing)
    if (members.size() >= 2 && members.size() <= static_cast<std::size_t>(kMaxBlock)) blocks.push_back(std::move(members));

  Rng rng(seed);
  std::vector<int> order(phrases.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (int it = 0; it < iterations; ++it) {
    for (int p : order) {
      const auto& y = yields[static_cast<std::size_t>(p)];
      if (y.empty()) {
        state.unparseable.insert(p);
        continue;
      }
      const auto outcome = sample_parse_mh(state, p, y, rng);
      if (stats != nullptr && outcome.parsed && !outcome.first_time) {
        ++stats->proposals;
        if (outcome.accepted) ++stats->accepted;
      }
    }
    if (blocks.empty()) continue;
    const auto& block = blocks[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(blocks.size())))];
    // Phrases that never parsed keep the block out of reach.
    if (!std::all_of(block.begin(), block.end(), [&](int p) { return state.parses.contains(p); })) continue;
    const bool accepted = sample_block_mh(state, block, yields, rng);
    if (stats != nullptr) {
      ++stats->block_proposals;
      if (accepted) ++stats->block_accepted;
    }
  }
  return state;
}

// ---------------------------------------------------------------------------
// Audit and serialization

std::optional<std::string> audit(const AdaptedGrammarState& s) {
  const auto& g = s.grammar;
  if (s.rule_counts.size() != g.rules().size()) return "rule count vector has the wrong size";
  std::vector<int> f(g.rules().size(), 0);
  std::map<std::pair<int, std::int64_t>, int> seated;
  std::optional<std::string> problem;

  std::function<bool(const DerivationTree&, bool)> walk = [&](const DerivationTree& node, bool in_table) -> bool {
    if (node.is_leaf()) {
      if (node.terminal < 0 || node.terminal >= g.terminals().size()) {
        problem = "leaf with unknown terminal";
        return false;
      }
      return true;
    }
    if (node.symbol < 0 || node.symbol >= g.n_nonterminals()) {
      problem = "node with unknown nonterminal";
      return false;
    }
    if (node.rule < 0 || node.rule >= static_cast<int>(g.rules().size())) {
      problem = "node without a valid rule";
      return false;
    }
    const auto& r = g.rules()[static_cast<std::size_t>(node.rule)];
    if (r.lhs != node.symbol || r.rhs.size() != node.children.size()) {
      problem = "node does not match its rule " + g.rule_text(node.rule);
      return false;
    }
    for (std::size_t k = 0; k < r.rhs.size(); ++k) {
      const auto& c = node.children[k];
      const bool ok = r.rhs[k].terminal ? (c.is_leaf() && c.terminal == r.rhs[k].id)
                                        : (!c.is_leaf() && c.symbol == r.rhs[k].id);
      if (!ok) {
        problem = "child does not match rule " + g.rule_text(node.rule);
        return false;
      }
    }
    if (!in_table && g.is_adapted(node.symbol)) {
      const AdaptorCache* cache = s.cache_for(node.symbol);
      const auto it = cache->tables.find(node.table);
      if (it == cache->tables.end()) {
        problem = "parse refers to missing table " + std::to_string(node.table);
        return false;
      }
      if (!(it->second.tree == node)) {
        problem = "parse subtree differs from its table " + std::to_string(node.table);
        return false;
      }
      ++seated[{node.symbol, node.table}];
      return true;
    }
    ++f[static_cast<std::size_t>(node.rule)];
    for (const auto& c : node.children)
      if (!walk(c, in_table)) return false;
    return true;
  };

  for (const auto& [phrase, tree] : s.parses)
    if (!walk(tree, false)) return "phrase " + std::to_string(phrase) + ": " + *problem;
  for (const auto& c : s.caches) {
    int total = 0;
    std::map<std::vector<int>, std::set<std::int64_t>> by_yield;
    for (const auto& [id, t] : c.tables) {
      if (t.customers < 1) return "empty table " + std::to_string(id);
      if (t.id != id || t.tree.table != id) return "table id mismatch at " + std::to_string(id);
      if (t.tree.symbol != c.symbol) return "table tree rooted at the wrong symbol";
      if (t.tree.yield() != t.yield) return "table yield is stale";
      const auto it = seated.find({c.symbol, id});
      if (it == seated.end() || it->second != t.customers)
        return "customer count of table " + std::to_string(id) + " differs from the parses";
      seated.erase(it);
      total += t.customers;
      by_yield[t.yield].insert(id);
      if (!walk(t.tree, true)) return "table " + std::to_string(id) + ": " + *problem;
      if (id >= s.next_table) return "table id beyond the id counter";
    }
    if (total != c.customers) return "cache customer total differs";
    if (by_yield != c.by_yield) return "cache yield index differs";
  }
  if (!seated.empty()) return "parses seated at tables that do not exist";
  if (f != s.rule_counts) return "rule counts differ from the parses";
  std::vector<int> lhs(static_cast<std::size_t>(g.n_nonterminals()), 0);
  for (std::size_t r = 0; r < f.size(); ++r) lhs[static_cast<std::size_t>(g.rules()[r].lhs)] += f[r];
  if (lhs != s.lhs_counts) return "per-nonterminal totals differ";
  return std::nullopt;
}

nlohmann::json to_json(const DerivationTree& tree) {
  if (tree.is_leaf()) return {{"w", tree.terminal}};
  nlohmann::json j{{"s", tree.symbol}, {"r", tree.rule}};
  if (tree.table != kNewTable) j["t"] = tree.table;
  auto children = nlohmann::json::array();
  for (const auto& c : tree.children) children.push_back(to_json(c));
  j["c"] = std::move(children);
  return j;
}

DerivationTree tree_from_json(const nlohmann::json& j) {
  DerivationTree t;
  if (j.contains("w")) {
    t.terminal = j.at("w").get<int>();
    return t;
  }
  t.symbol = j.at("s").get<int>();
  t.rule = j.at("r").get<int>();
  t.table = j.value("t", kNewTable);
  for (const auto& c : j.at("c")) t.children.push_back(tree_from_json(c));
  return t;
}

nlohmann::json to_json(const AdaptedGrammarState& s) {
  nlohmann::json j;
  j["format"] = "conceptx-adaptor-state";
  j["version"] = 1;
  j["grammar"] = to_json(s.grammar);
  auto caches = nlohmann::json::array();
  for (const auto& c : s.caches) {
    auto tables = nlohmann::json::array();
    for (const auto& [id, t] : c.tables) tables.push_back({{"id", id}, {"customers", t.customers}, {"tree", to_json(t.tree)}});
    caches.push_back({{"symbol", c.symbol}, {"tables", tables}});
  }
  j["caches"] = caches;
  auto parses = nlohmann::json::array();
  for (const auto& [p, t] : s.parses) parses.push_back({{"phrase", p}, {"tree", to_json(t)}});
  j["parses"] = parses;
  j["unparseable"] = s.unparseable;
  j["rule_counts"] = s.rule_counts;
  j["next_table"] = s.next_table;
  return j;
}

AdaptedGrammarState state_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "conceptx-adaptor-state") throw InputError("not an adaptor grammar checkpoint");
  if (j.at("version").get<int>() != 1) throw InputError("unsupported checkpoint version");
  AdaptedGrammarState s(grammar_from_json(j.at("grammar")));
  for (const auto& cj : j.at("caches")) {
    AdaptorCache* c = s.cache_for(cj.at("symbol").get<int>());
    if (c == nullptr) throw InputError("checkpoint cache for a non-adapted symbol");
    for (const auto& tj : cj.at("tables")) {
      Table t;
      t.id = tj.at("id").get<std::int64_t>();
      t.customers = tj.at("customers").get<int>();
      t.tree = tree_from_json(tj.at("tree"));
      t.yield = t.tree.yield();
      c->customers += t.customers;
      c->by_yield[t.yield].insert(t.id);
      c->tables.emplace(t.id, std::move(t));
    }
  }
  for (const auto& pj : j.at("parses")) s.parses[pj.at("phrase").get<int>()] = tree_from_json(pj.at("tree"));
  s.unparseable = j.at("unparseable").get<std::set<int>>();
  s.rule_counts = j.at("rule_counts").get<std::vector<int>>();
  s.next_table = j.at("next_table").get<std::int64_t>();
  s.lhs_counts.assign(static_cast<std::size_t>(s.grammar.n_nonterminals()), 0);
  if (s.rule_counts.size() != s.grammar.rules().size()) throw InputError("checkpoint rule counts do not match grammar");
  for (std::size_t r = 0; r < s.rule_counts.size(); ++r)
    s.lhs_counts[static_cast<std::size_t>(s.grammar.rules()[r].lhs)] += s.rule_counts[r];
  if (const auto problem = audit(s)) throw InputError("inconsistent adaptor grammar checkpoint: " + *problem);
  return s;
}

}  // namespace conceptx
