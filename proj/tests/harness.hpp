#pragma once

// Runs the adaptor-grammar MH chain on a toy corpus and tallies the concept
// spans of all phrases after every sweep. With `blocks` each sweep ends with
// a joint update of all phrases that contain a randomly drawn terminal.

#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "conceptx/adaptor_grammar.hpp"
#include "oracles.hpp"

namespace harness {

inline std::map<oracle::Analysis, double> mh_empirical(const std::vector<std::vector<std::string>>& phrases,
                                                       const conceptx::Grammar& grammar, int sweeps, int burn_in,
                                                       std::uint64_t seed, bool blocks = true) {
  conceptx::AdaptedGrammarState state(grammar);
  std::vector<std::vector<int>> yields;
  for (const auto& p : phrases) yields.push_back(state.encode(p));
  std::map<int, std::vector<int>> containing;
  for (std::size_t p = 0; p < yields.size(); ++p)
    for (int t : std::set<int>(yields[p].begin(), yields[p].end())) containing[t].push_back(static_cast<int>(p));
  const int concept_id = grammar.nonterminal("Concept");
  conceptx::Rng rng(seed);
  std::map<oracle::Analysis, double> counts;
  oracle::Analysis current(phrases.size());
  for (int s = 0; s < burn_in + sweeps; ++s) {
    for (std::size_t p = 0; p < phrases.size(); ++p)
      conceptx::sample_parse_mh(state, static_cast<int>(p), yields[p], rng);
    if (blocks) {
      auto it = containing.begin();
      std::advance(it, conceptx::uniform_index(rng, static_cast<int>(containing.size())));
      conceptx::sample_block_mh(state, it->second, yields, rng);
    }
    if (s < burn_in) continue;
    for (std::size_t p = 0; p < phrases.size(); ++p)
      current[p] = oracle::concept_span(state.parses.at(static_cast<int>(p)), concept_id);
    counts[current] += 1.0;
  }
  for (auto& [k, v] : counts) v /= sweeps;
  return counts;
}

}  // namespace harness
