#include "conceptx/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conceptx {

int Vocabulary::intern(std::string_view s) {
  auto it = ids_.find(std::string(s));
  if (it != ids_.end()) return it->second;
  const int id = size();
  names_.emplace_back(s);
  ids_.emplace(names_.back(), id);
  return id;
}

int Vocabulary::find(std::string_view s) const {
  auto it = ids_.find(std::string(s));
  return it == ids_.end() ? -1 : it->second;
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_index(Rng& rng, int n) {
  if (n <= 1) return 0;
  const int i = static_cast<int>(uniform01(rng) * n);
  return std::min(i, n - 1);
}

void shuffle(std::vector<int>& items, Rng& rng) {
  for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
    const int j = uniform_index(rng, i + 1);
    std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
  }
}

int sample_log_weights(std::span<const double> log_weights, Rng& rng) {
  const int n = static_cast<int>(log_weights.size());
  if (n == 0) throw std::invalid_argument("sample_log_weights: no candidates");
  if (n == 1) return 0;
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (top == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("sample_log_weights: all weights are zero");
  double total = 0.0;
  std::vector<double> cumulative(log_weights.size());
  for (int i = 0; i < n; ++i) {
    total += std::exp(log_weights[static_cast<std::size_t>(i)] - top);
    cumulative[static_cast<std::size_t>(i)] = total;
  }
  const double u = uniform01(rng) * total;
  for (int i = 0; i < n; ++i)
    if (u < cumulative[static_cast<std::size_t>(i)]) return i;
  // u == total only through rounding; take the last positive weight.
  for (int i = n - 1; i >= 0; --i)
    if (log_weights[static_cast<std::size_t>(i)] > -std::numeric_limits<double>::infinity()) return i;
  return n - 1;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view s) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace conceptx
