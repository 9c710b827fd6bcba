#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace oracle {

double pyp(const std::vector<int>& occupancy, double a, double b) {
  double num = 1.0;
  int n = 0;
  for (std::size_t k = 0; k < occupancy.size(); ++k) {
    num *= b * static_cast<double>(k) + a;
    for (int j = 1; j < occupancy[k]; ++j) num *= j - b;
    n += occupancy[k];
  }
  double den = 1.0;
  for (int i = 0; i < n; ++i) den *= i + a;
  return num / den;
}

std::vector<std::vector<int>> integer_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  std::function<void(int, int)> rec = [&](int left, int max_part) {
    if (left == 0) {
      out.push_back(current);
      return;
    }
    for (int p = std::min(left, max_part); p >= 1; --p) {
      current.push_back(p);
      rec(left - p, p);
      current.pop_back();
    }
  };
  rec(n, n);
  return out;
}

double set_partition_count(const std::vector<int>& sizes) {
  auto fact = [](int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  int n = 0;
  double den = 1;
  std::map<int, int> same;
  for (int s : sizes) {
    n += s;
    den *= fact(s);
    ++same[s];
  }
  for (const auto& [s, m] : same) den *= fact(m);
  return fact(n) / den;
}

namespace {

double log_dir(const std::vector<int>& f, double alpha, int categories) {
  // Categories missing from `f` have zero counts and contribute nothing.
  int total = 0;
  double s = 0;
  for (int x : f) {
    total += x;
    s += std::lgamma(x + alpha) - std::lgamma(alpha);
  }
  return s + std::lgamma(categories * alpha) - std::lgamma(categories * alpha + total);
}

struct Counts {
  std::vector<int> phrase = std::vector<int>(4, 0);
  int words_binary = 0;
  int words_unary = 0;
  std::map<std::string, int> word;

  void add_words(const std::vector<std::string>& tokens, int begin, int end) {
    if (end <= begin) return;
    words_binary += end - begin - 1;
    words_unary += 1;
    for (int i = begin; i < end; ++i) ++word[tokens[static_cast<std::size_t>(i)]];
  }
};

}  // namespace

std::map<Analysis, double> adaptor_posterior(const std::vector<std::vector<std::string>>& phrases, double alpha,
                                             double a, double b) {
  std::set<std::string> terminals;
  for (const auto& p : phrases) terminals.insert(p.begin(), p.end());
  const int n_terms = static_cast<int>(terminals.size());
  const int n_phrases = static_cast<int>(phrases.size());

  std::vector<std::vector<std::pair<int, int>>> options(phrases.size());
  for (std::size_t k = 0; k < phrases.size(); ++k) {
    const int n = static_cast<int>(phrases[k].size());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j <= n; ++j) options[k].push_back({i, j});
  }

  std::map<Analysis, double> log_joint;
  Analysis current(phrases.size());
  std::function<void(int)> rec = [&](int k) {
    if (k < n_phrases) {
      for (const auto& o : options[static_cast<std::size_t>(k)]) {
        current[static_cast<std::size_t>(k)] = o;
        rec(k + 1);
      }
      return;
    }
    Counts base;
    std::vector<std::vector<std::string>> customers;
    for (int p = 0; p < n_phrases; ++p) {
      const auto& toks = phrases[static_cast<std::size_t>(p)];
      const int n = static_cast<int>(toks.size());
      const auto [i, j] = current[static_cast<std::size_t>(p)];
      ++base.phrase[static_cast<std::size_t>((i > 0 ? 1 : 0) + (j < n ? 2 : 0))];
      base.add_words(toks, 0, i);
      base.add_words(toks, j, n);
      customers.emplace_back(toks.begin() + i, toks.begin() + j);
    }

    // Restricted growth strings enumerate the set partitions of customers.
    std::vector<int> block(customers.size(), 0);
    std::vector<double> terms;
    std::function<void(std::size_t, int)> seat = [&](std::size_t c, int used) {
      if (c == customers.size()) {
        std::vector<int> sizes(static_cast<std::size_t>(used), 0);
        std::vector<int> first(static_cast<std::size_t>(used), -1);
        for (std::size_t x = 0; x < customers.size(); ++x) {
          const auto t = static_cast<std::size_t>(block[x]);
          ++sizes[t];
          if (first[t] < 0) first[t] = static_cast<int>(x);
          if (customers[x] != customers[static_cast<std::size_t>(first[t])]) return;
        }
        Counts counts = base;
        for (int t = 0; t < used; ++t) {
          const auto& y = customers[static_cast<std::size_t>(first[static_cast<std::size_t>(t)])];
          counts.add_words(y, 0, static_cast<int>(y.size()));
        }
        std::vector<int> word_counts;
        for (const auto& [w, f] : counts.word) word_counts.push_back(f);
        terms.push_back(log_dir(counts.phrase, alpha, 4) +
                        log_dir({counts.words_binary, counts.words_unary}, alpha, 2) +
                        log_dir(word_counts, alpha, n_terms) + std::log(pyp(sizes, a, b)));
        return;
      }
      for (int t = 0; t <= used; ++t) {
        block[c] = t;
        seat(c + 1, std::max(used, t + 1));
      }
    };
    seat(0, 0);
    const double m = *std::max_element(terms.begin(), terms.end());
    double s = 0;
    for (double t : terms) s += std::exp(t - m);
    log_joint[current] = m + std::log(s);
  };
  rec(0);

  double m = -INFINITY;
  for (const auto& [k, v] : log_joint) m = std::max(m, v);
  double z = 0;
  for (const auto& [k, v] : log_joint) z += std::exp(v - m);
  std::map<Analysis, double> out;
  for (const auto& [k, v] : log_joint) out[k] = std::exp(v - m) / z;
  return out;
}

std::pair<int, int> concept_span(const conceptx::DerivationTree& tree, int concept_id) {
  std::pair<int, int> span{-1, -1};
  std::function<int(const conceptx::DerivationTree&, int)> walk = [&](const conceptx::DerivationTree& node, int pos) {
    if (node.is_leaf()) return 1;
    int len = 0;
    for (const auto& c : node.children) len += walk(c, pos + len);
    if (node.symbol == concept_id) {
      if (span.first >= 0) throw std::logic_error("two concept nodes");
      span = {pos, pos + len};
    }
    return len;
  };
  walk(tree, 0);
  return span;
}

double total_variation(const std::map<Analysis, double>& p, const std::map<Analysis, double>& q) {
  std::set<Analysis> keys;
  for (const auto& [k, v] : p) keys.insert(k);
  for (const auto& [k, v] : q) keys.insert(k);
  double tv = 0;
  for (const auto& k : keys) {
    const auto ip = p.find(k);
    const auto iq = q.find(k);
    tv += std::abs((ip == p.end() ? 0.0 : ip->second) - (iq == q.end() ? 0.0 : iq->second));
  }
  return tv / 2;
}

std::vector<MetricFixture> metric_fixtures() {
  using conceptx::EvalMention;
  const std::string T = "Technique";
  const std::string A = "Application";
  auto m = [](std::string doc, std::vector<std::string> toks, std::string aspect) {
    return EvalMention{std::move(doc), std::move(toks), std::move(aspect)};
  };
  const Expected zero{0, 0, 0};
  const Expected one{1, 1, 1};
  const Expected undefined{0, 0, 0, false};
  std::vector<MetricFixture> f;

  const std::vector<EvalMention> two = {m("d1", {"neural", "network"}, T), m("d1", {"image", "classification"}, A)};
  f.push_back({"perfect predictions", two, two, one, one, one, one});
  f.push_back({"no predictions", {}, two, zero, zero, zero, zero});
  f.push_back({"aspects flipped",
               {m("d1", {"neural", "network"}, A), m("d1", {"image", "classification"}, T)},
               two, one, zero, zero, zero});

  // 3 predicted, 2 correct, 4 gold.
  f.push_back({"three of four",
               {m("d1", {"a"}, T), m("d1", {"b"}, T), m("d1", {"x"}, T)},
               {m("d1", {"a"}, T), m("d1", {"b"}, T), m("d1", {"c"}, T), m("d1", {"d"}, T)},
               {2.0 / 3, 0.5, 4.0 / 7},
               {2.0 / 3, 0.5, 4.0 / 7},
               {2.0 / 3, 0.5, 4.0 / 7},
               undefined});

  // 2 Technique gold with one typed right, 2 Application gold both right.
  f.push_back({"per aspect rows",
               {m("d1", {"t1"}, T), m("d2", {"wrong", "span"}, T), m("d1", {"a1"}, A), m("d2", {"a2"}, A)},
               {m("d1", {"t1"}, T), m("d2", {"t2"}, T), m("d1", {"a1"}, A), m("d2", {"a2"}, A)},
               {0.75, 0.75, 0.75},
               {0.75, 0.75, 0.75},
               {0.5, 0.5, 0.5},
               one});

  f.push_back({"extra predictions",
               {two[0], two[1], m("d1", {"image"}, T), m("d1", {"network"}, A)},
               two,
               {0.5, 1, 2.0 / 3},
               {0.5, 1, 2.0 / 3},
               {0.5, 1, 2.0 / 3},
               {0.5, 1, 2.0 / 3}});

  f.push_back({"duplicate prediction matched once",
               {two[0], two[0]},
               {two[0]},
               {0.5, 1, 2.0 / 3},
               {0.5, 1, 2.0 / 3},
               {0.5, 1, 2.0 / 3},
               undefined});

  f.push_back({"right tokens wrong document",
               {m("d2", {"neural", "network"}, T), m("d2", {"svm"}, A)},
               {m("d1", {"neural", "network"}, T), m("d2", {"svm"}, A)},
               {0.5, 0.5, 0.5},
               {0.5, 0.5, 0.5},
               zero,
               one});

  f.push_back({"unannotated document ignored",
               {two[0], m("d9", {"anything"}, T)},
               {two[0]},
               one, one, one, undefined});

  f.push_back({"longer span is not a match",
               {m("d1", {"deep", "neural", "network"}, T)},
               {two[0]},
               zero, zero, zero, undefined});
  return f;
}

}  // namespace oracle
