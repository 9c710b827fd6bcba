#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "conceptx/common.hpp"
#include "conceptx/segmentation.hpp"

namespace conceptx {

struct FeatureDims {
  int words = 0;
  int sig = 0;
  int rel = 0;  ///< shared by left and right relation phrases
  int venues = 0;

  bool operator==(const FeatureDims&) const = default;
};

/// Integer view of a phrase used by the typing samplers.
struct EncodedPhrase {
  std::vector<int> words;
  std::vector<int> sig;
  int left = -1;
  int right = -1;
  int venue = -1;
  int slice = 0;

  bool has_text() const { return !words.empty() || !sig.empty(); }
};

struct FeatureSpace {
  Vocabulary words;
  Vocabulary sig;
  Vocabulary rel;
  Vocabulary venues;

  EncodedPhrase encode(const Phrase& phrase);
  /// Lookup-only variant: features outside the vocabularies are dropped.
  EncodedPhrase encode(const Phrase& phrase) const;
  FeatureDims dims() const { return {words.size(), sig.size(), rel.size(), venues.size()}; }

  nlohmann::json to_json() const;
  static FeatureSpace from_json(const nlohmann::json& j);
};

class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols, 0),
        totals_(static_cast<std::size_t>(rows), 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int operator()(int r, int c) const { return cells_[index(r, c)]; }
  int row_total(int r) const { return totals_[static_cast<std::size_t>(r)]; }

  void add(int r, int c, int delta) {
    cells_[index(r, c)] += delta;
    totals_[static_cast<std::size_t>(r)] += delta;
  }

  bool operator==(const CountMatrix&) const = default;

  /// Sparse rows: [[col, count], ...] per row.
  nlohmann::json to_json() const;
  static CountMatrix from_json(const nlohmann::json& j, int rows, int cols);

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + static_cast<std::size_t>(c); }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> cells_;
  std::vector<int> totals_;
};

/// Informative Dirichlet pseudo-counts, one vector per count-matrix row.
/// An empty table stands for the symmetric prior beta.
class PriorTable {
 public:
  PriorTable() = default;
  explicit PriorTable(std::vector<std::vector<double>> rows);

  bool empty() const { return rows_.empty(); }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  double pseudo(int row, int col, double beta) const {
    return rows_.empty() ? beta : rows_[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
  }
  double pseudo_total(int row, double beta, int vocab) const {
    return rows_.empty() ? beta * vocab : totals_[static_cast<std::size_t>(row)];
  }

  bool operator==(const PriorTable& other) const { return rows_ == other.rows_; }

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<double> totals_;
};

/// Smoothed point estimate (n[row,col] + pseudo) / (n[row,.] + pseudo_total).
double smoothed_estimate(const CountMatrix& counts, int row, int col, const PriorTable& prior, double beta);

/// Log of the sequential Dirichlet-multinomial predictive probability of the
/// feature multiset `ids` in `row`: repeated ids see their earlier copies.
double log_sequential_factor(std::span<const int> ids, const CountMatrix& counts, int row, const PriorTable& prior,
                             double beta);

/// Sum of log point estimates, without the sequential offsets.
double log_point_factor(std::span<const int> ids, const CountMatrix& counts, int row, const PriorTable& prior,
                        double beta);

}  // namespace conceptx
