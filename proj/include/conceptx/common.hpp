#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conceptx {

/// Half-open token range [begin, end) inside a title.
struct Span {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool operator==(const Span&) const = default;
};

/// Raised when an input file or record does not match its schema.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when statistics required by an operation are missing.
class MissingStatistics : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense string <-> id map. Ids are assigned in insertion order.
class Vocabulary {
 public:
  int intern(std::string_view s);
  int find(std::string_view s) const;
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

using Rng = std::mt19937_64;

// The helpers below avoid the standard distributions so that sampled values
// are identical across standard library implementations.
double uniform01(Rng& rng);
int uniform_index(Rng& rng, int n);
void shuffle(std::vector<int>& items, Rng& rng);

/// Draws an index with probability proportional to exp(log_weights[i]).
/// A single candidate is returned without consuming randomness.
int sample_log_weights(std::span<const double> log_weights, Rng& rng);

double log_sum_exp(std::span<const double> values);

/// splitmix64 finalizer; derives independent seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t hash_string(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");
std::vector<std::string> split_ws(std::string_view text);

}  // namespace conceptx
