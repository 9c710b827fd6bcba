#include "conceptx/features.hpp"

#include <cmath>
#include <numeric>

namespace conceptx {

EncodedPhrase FeatureSpace::encode(const Phrase& phrase) {
  EncodedPhrase e;
  for (const auto& w : phrase.p_w) e.words.push_back(words.intern(w));
  for (const auto& s : phrase.p_sp) e.sig.push_back(sig.intern(s));
  if (phrase.p_l) e.left = rel.intern(phrase.p_l->text());
  if (phrase.p_r) e.right = rel.intern(phrase.p_r->text());
  e.venue = venues.intern(phrase.venue);
  e.slice = phrase.time_slice;
  return e;
}

EncodedPhrase FeatureSpace::encode(const Phrase& phrase) const {
  EncodedPhrase e;
  for (const auto& w : phrase.p_w)
    if (int id = words.find(w); id >= 0) e.words.push_back(id);
  for (const auto& s : phrase.p_sp)
    if (int id = sig.find(s); id >= 0) e.sig.push_back(id);
  if (phrase.p_l) e.left = rel.find(phrase.p_l->text());
  if (phrase.p_r) e.right = rel.find(phrase.p_r->text());
  e.venue = venues.find(phrase.venue);
  e.slice = phrase.time_slice;
  return e;
}

nlohmann::json FeatureSpace::to_json() const {
  return {{"words", words.names()}, {"sig", sig.names()}, {"rel", rel.names()}, {"venues", venues.names()}};
}

FeatureSpace FeatureSpace::from_json(const nlohmann::json& j) {
  FeatureSpace fs;
  for (const auto& w : j.at("words")) fs.words.intern(w.get<std::string>());
  for (const auto& w : j.at("sig")) fs.sig.intern(w.get<std::string>());
  for (const auto& w : j.at("rel")) fs.rel.intern(w.get<std::string>());
  for (const auto& w : j.at("venues")) fs.venues.intern(w.get<std::string>());
  return fs;
}

nlohmann::json CountMatrix::to_json() const {
  auto out = nlohmann::json::array();
  for (int r = 0; r < rows_; ++r) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < cols_; ++c)
      if (int v = (*this)(r, c); v != 0) row.push_back({c, v});
    out.push_back(std::move(row));
  }
  return out;
}

CountMatrix CountMatrix::from_json(const nlohmann::json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) throw InputError("count matrix: wrong number of rows");
  CountMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (const auto& cell : j[static_cast<std::size_t>(r)]) {
      const int c = cell.at(0).get<int>();
      if (c < 0 || c >= cols) throw InputError("count matrix: column out of range");
      m.add(r, c, cell.at(1).get<int>());
    }
  return m;
}

PriorTable::PriorTable(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  totals_.reserve(rows_.size());
  for (const auto& r : rows_) totals_.push_back(std::accumulate(r.begin(), r.end(), 0.0));
}

double smoothed_estimate(const CountMatrix& counts, int row, int col, const PriorTable& prior, double beta) {
  return (counts(row, col) + prior.pseudo(row, col, beta)) /
         (counts.row_total(row) + prior.pseudo_total(row, beta, counts.cols()));
}

double log_sequential_factor(std::span<const int> ids, const CountMatrix& counts, int row, const PriorTable& prior,
                             double beta) {
  const double denom0 = counts.row_total(row) + prior.pseudo_total(row, beta, counts.cols());
  double lp = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int repeats = 0;
    for (std::size_t k = 0; k < i; ++k) repeats += ids[k] == ids[i];
    lp += std::log((counts(row, ids[i]) + prior.pseudo(row, ids[i], beta) + repeats) /
                   (denom0 + static_cast<double>(i)));
  }
  return lp;
}

double log_point_factor(std::span<const int> ids, const CountMatrix& counts, int row, const PriorTable& prior,
                        double beta) {
  double lp = 0.0;
  for (int id : ids) lp += std::log(smoothed_estimate(counts, row, id, prior, beta));
  return lp;
}

}  // namespace conceptx
