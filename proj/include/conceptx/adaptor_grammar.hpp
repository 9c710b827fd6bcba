#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conceptx/common.hpp"

namespace conceptx {

struct Symbol {
  bool terminal = false;
  int id = 0;
  bool operator==(const Symbol&) const = default;
};

struct Rule {
  int lhs = 0;
  std::vector<Symbol> rhs;
  double alpha = 0.01;
  bool from_wildcard = false;
  bool operator==(const Rule&) const = default;
};

/// Pitman-Yor parameters in the naming of the PYP formula used here:
/// `a` is the scale (concentration) and `b` the discount.
struct PitmanYor {
  double a = 0.5;
  double b = 0.5;
  void validate() const;
  bool operator==(const PitmanYor&) const = default;
};

enum class GrammarVariant { Adaptor, AdaptorMod };

std::string to_string(GrammarVariant v);
GrammarVariant parse_grammar_variant(std::string_view name);

/// A PCFG with Dirichlet rule priors and a set of adapted nonterminals.
/// A wildcard production `A -> *` stands for `A -> t` for every terminal;
/// the concrete rules are materialized as terminals are added.
class Grammar {
 public:
  int add_nonterminal(std::string_view name);
  int nonterminal(std::string_view name) const;  ///< -1 when absent
  const std::string& nonterminal_name(int id) const { return nonterminals_.at(static_cast<std::size_t>(id)); }
  int n_nonterminals() const { return static_cast<int>(nonterminals_.size()); }

  /// Interns a terminal, expanding every wildcard for it. Returns its id.
  int add_terminal(std::string_view token);
  const Vocabulary& terminals() const { return terminals_; }

  int add_rule(Rule rule);
  /// `expand` = false registers the wildcard without materializing rules
  /// for known terminals (used when reloading a serialized grammar).
  void add_wildcard(int lhs, double alpha, bool expand = true);
  void set_adaptor(int nonterminal, PitmanYor params);
  void set_start(int nonterminal) { start_ = nonterminal; }

  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<int>& rules_of(int lhs) const { return by_lhs_.at(static_cast<std::size_t>(lhs)); }
  /// Rules whose right-hand side is exactly this one terminal.
  const std::vector<int>& lexical_rules(int terminal) const;
  /// Rules other than single-terminal ones; these define the chart skeleton.
  const std::vector<int>& structural_rules() const { return structural_; }
  double alpha_total(int lhs) const { return alpha_total_.at(static_cast<std::size_t>(lhs)); }
  const std::map<int, double>& wildcards() const { return wildcards_; }
  const std::map<int, PitmanYor>& adaptors() const { return adaptors_; }
  bool is_adapted(int nonterminal) const { return adaptors_.contains(nonterminal); }
  bool has_wildcard() const { return !wildcards_.empty(); }
  int start() const { return start_; }

  /// Throws std::invalid_argument on: missing start, reachable nonterminal
  /// without rules, non-positive alpha, invalid PYP parameters, an adaptor
  /// that derives an adaptor, or a cycle of unary nonterminal rules.
  void validate() const;

  std::string rule_text(int rule) const;
  bool operator==(const Grammar&) const = default;

 private:
  std::vector<std::string> nonterminals_;
  Vocabulary terminals_;
  std::vector<Rule> rules_;
  std::vector<std::vector<int>> by_lhs_;
  std::vector<double> alpha_total_;
  std::vector<std::vector<int>> lexical_;
  std::vector<int> structural_;
  std::map<int, double> wildcards_;
  std::map<int, PitmanYor> adaptors_;
  int start_ = -1;
};

/// Plain-text grammar: "start A", "prior ALPHA" (default rule prior),
/// "prior A ALPHA" (per-nonterminal), "A -> X Y ...", "A -> *" (wildcard)
/// and "adapt A a=0.5 b=0.5". '#' starts a comment. A right-hand-side name
/// is a nonterminal iff it heads some rule.
Grammar parse_grammar(std::istream& in);
Grammar parse_grammar(std::string_view text);
Grammar load_grammar(const std::string& path);
Grammar default_grammar(GrammarVariant variant);
/// Source text of a bundled grammar. Later "prior" and "adapt" lines
/// override earlier ones, so overrides can be appended.
std::string_view default_grammar_text(GrammarVariant variant);

inline constexpr std::int64_t kNewTable = -1;

struct DerivationTree {
  int symbol = -1;  ///< nonterminal id, or -1 for a terminal leaf
  int terminal = -1;
  int rule = -1;
  std::int64_t table = kNewTable;  ///< table id at adapted nodes
  std::vector<DerivationTree> children;

  bool is_leaf() const { return symbol < 0; }
  std::vector<int> yield() const;
  void append_yield(std::vector<int>& out) const;
  bool operator==(const DerivationTree&) const = default;
};

/// Bracketed rendering, e.g. (Phrase (Concept (Words ...))).
std::string to_string(const DerivationTree& tree, const Grammar& grammar);

struct Table {
  std::int64_t id = 0;
  DerivationTree tree;
  std::vector<int> yield;
  int customers = 0;
  bool operator==(const Table&) const = default;
};

struct AdaptorCache {
  int symbol = -1;
  PitmanYor params;
  std::map<std::int64_t, Table> tables;
  std::map<std::vector<int>, std::set<std::int64_t>> by_yield;
  int customers = 0;

  int n_tables() const { return static_cast<int>(tables.size()); }
  std::vector<int> occupancy() const;
  bool operator==(const AdaptorCache&) const = default;
};

struct AdaptedGrammarState {
  Grammar grammar;
  std::vector<AdaptorCache> caches;  ///< in adaptor id order
  std::map<int, int> cache_of;       ///< adapted nonterminal -> index into caches
  std::vector<int> rule_counts;      ///< f per rule
  std::vector<int> lhs_counts;       ///< sum of f per nonterminal
  std::map<int, DerivationTree> parses;  ///< phrase id -> current parse
  std::set<int> unparseable;
  std::int64_t next_table = 0;

  explicit AdaptedGrammarState(Grammar g = {});

  /// Interns tokens as terminals (materializing wildcard rules).
  std::vector<int> encode(const std::vector<std::string>& tokens);
  /// Keeps rule_counts sized to the grammar after new terminals.
  void sync_rules();

  const AdaptorCache* cache_for(int nonterminal) const;
  AdaptorCache* cache_for(int nonterminal);

  bool operator==(const AdaptedGrammarState&) const = default;
};

/// P(choice | cache): (K b + a) / (n + a) for kNewTable, (m_k - b) / (n + a)
/// for an occupied table. An empty cache gives 1 for kNewTable. Throws
/// std::out_of_range for a table id that is not occupied.
double crp_seat_prob(const AdaptorCache& cache, std::int64_t choice);
double crp_seat_prob(std::span<const int> occupancy, const PitmanYor& params, int choice);  ///< choice = -1 for new

double log_p_pyp(std::span<const int> occupancy, const PitmanYor& params);
double p_pyp(std::span<const int> occupancy, const PitmanYor& params);
/// Throws std::invalid_argument on length mismatch or non-positive alpha.
double log_p_dir(std::span<const int> counts, std::span<const double> alpha);
double p_dir(std::span<const int> counts, std::span<const double> alpha);

/// log of prod over non-adapted A of p_dir(f_A) times prod over adaptors of p_pyp.
double joint_log_prob(const AdaptedGrammarState& state);

/// Inside probabilities under the proposal PCFG built from the state.
class InsideChart {
 public:
  InsideChart(const AdaptedGrammarState& state, std::span<const int> yield);

  /// log inside of a grammar nonterminal over [i, j); -inf when underivable.
  double log_inside(int nonterminal, int i, int j) const;
  double log_total() const { return log_inside(state_.grammar.start(), 0, n_); }
  bool parseable() const { return log_total() > -std::numeric_limits<double>::infinity(); }

  /// Top-down sample. Sets `log_q` to the log proposal probability of the
  /// drawn tree. Freshly drawn base expansions carry table id kNewTable.
  DerivationTree sample(Rng& rng, double& log_q) const;

  /// log q(tree) = sum of choice weights - log_total. Tables absent from
  /// the caches count as new; two nodes sharing an absent table give -inf.
  double log_proposal_prob(const DerivationTree& tree) const;

  struct Binary {
    int lhs, left, right, rule;
  };
  struct Unary {
    int lhs, child, rule;
  };
  struct Lexical {
    int lhs, terminal, rule;
  };

 private:
  std::size_t cell(int sym, int i, int j) const;
  double rule_log_weight(int rule) const;
  double table_log_weight(const AdaptorCache& cache, const Table& t) const;
  double new_table_log_weight(const AdaptorCache& cache) const;
  void expand(int sym, int i, int j, Rng& rng, double& log_weight, std::vector<DerivationTree>& out) const;
  DerivationTree sample_symbol(int sym, int i, int j, Rng& rng, double& log_weight) const;
  double tree_weight(const DerivationTree& node, std::map<std::int64_t, int>& absent_uses) const;

  const AdaptedGrammarState& state_;
  std::vector<int> yield_;
  int n_ = 0;
  int n_symbols_ = 0;
  std::vector<Binary> binary_;
  std::vector<Unary> unary_;
  std::vector<Lexical> lexical_;
  std::vector<int> order_;  ///< symbols in unary-dependency order
  std::vector<std::vector<int>> binary_of_;  ///< per lhs symbol
  std::vector<std::vector<int>> unary_of_;
  std::vector<double> base_;    ///< log inside before the adaptor transform
  std::vector<double> inside_;  ///< log inside after it
};

/// Seats the parse and counts its rules; returns log P(after) - log P(before).
/// Tables named in the tree are joined if present and recreated otherwise;
/// kNewTable nodes receive fresh ids written back into the tree.
double insert_parse(AdaptedGrammarState& state, DerivationTree& tree);
/// Reverse of insert_parse; returns log P(before) - log P(after).
double remove_parse(AdaptedGrammarState& state, const DerivationTree& tree);

struct MhOutcome {
  bool parsed = false;
  bool first_time = false;
  bool accepted = false;
};

/// One Metropolis-Hastings update of the parse of `phrase`.
MhOutcome sample_parse_mh(AdaptedGrammarState& state, int phrase, std::span<const int> yield, Rng& rng);

/// Joint Metropolis-Hastings update of several already parsed phrases. The
/// proposal removes all of them and redraws their parses one after another
/// from the chart, so a whole group can move between cached analyses that
/// single-phrase updates cannot leave. Returns whether the move was accepted.
bool sample_block_mh(AdaptedGrammarState& state, std::span<const int> block,
                     const std::vector<std::vector<int>>& yields, Rng& rng);

struct SamplerStats {
  std::int64_t proposals = 0;
  std::int64_t accepted = 0;
  std::int64_t block_proposals = 0;
  std::int64_t block_accepted = 0;
};

/// Phrases with at least two and at most this many members form a block.
inline constexpr int kMaxBlock = 200;

/// `iterations` passes over all phrases in one shuffled order fixed by `seed`.
/// After each pass one terminal is drawn and every phrase containing it is
/// updated as a block (blocks depend on the yields only, never on the state).
AdaptedGrammarState run_sampler(const std::vector<std::vector<std::string>>& phrases, Grammar grammar,
                                int iterations, std::uint64_t seed, SamplerStats* stats = nullptr);

/// Recomputes caches and rule counts from the stored parses. Returns the
/// first mismatch, or nullopt when consistent.
std::optional<std::string> audit(const AdaptedGrammarState& state);

nlohmann::json to_json(const DerivationTree& tree);
DerivationTree tree_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Grammar& grammar);
Grammar grammar_from_json(const nlohmann::json& j);
/// Version-tagged checkpoint of grammar, caches, counts and parses.
nlohmann::json to_json(const AdaptedGrammarState& state);
AdaptedGrammarState state_from_json(const nlohmann::json& j);

}  // namespace conceptx
