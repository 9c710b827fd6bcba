#pragma once

// Shared by the PhraseType and DomainPhraseType samplers. Both must evaluate
// the aspect part of the conditional with the same floating-point operations
// so that a one-domain model reproduces PhraseType draw for draw.

#include <cmath>
#include <sstream>
#include <string>

#include "conceptx/features.hpp"

namespace conceptx::detail {

struct AspectTextCounts {
  const CountMatrix& words;
  const CountMatrix& sig;
  const PriorTable& prior_w;
  const PriorTable& prior_sp;
  double beta_w;
  const CountMatrix& left;
  const CountMatrix& right;
  double beta_l;
  double beta_r;
};

inline double aspect_log_weight(double n_aspect, double alpha, const EncodedPhrase& p, const AspectTextCounts& c,
                                int text_row, int aspect) {
  double lw = std::log(n_aspect + alpha);
  lw += log_sequential_factor(p.words, c.words, text_row, c.prior_w, c.beta_w);
  lw += log_sequential_factor(p.sig, c.sig, text_row, c.prior_sp, c.beta_w);
  if (p.left >= 0) lw += std::log(smoothed_estimate(c.left, aspect, p.left, PriorTable{}, c.beta_l));
  if (p.right >= 0) lw += std::log(smoothed_estimate(c.right, aspect, p.right, PriorTable{}, c.beta_r));
  return lw;
}

inline double aspect_log_posterior_term(double log_prior, const EncodedPhrase& p, const AspectTextCounts& c,
                                        int text_row, int aspect) {
  double lp = log_prior;
  lp += log_point_factor(p.words, c.words, text_row, c.prior_w, c.beta_w);
  lp += log_point_factor(p.sig, c.sig, text_row, c.prior_sp, c.beta_w);
  if (p.left >= 0) lp += std::log(smoothed_estimate(c.left, aspect, p.left, PriorTable{}, c.beta_l));
  if (p.right >= 0) lp += std::log(smoothed_estimate(c.right, aspect, p.right, PriorTable{}, c.beta_r));
  return lp;
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  return rng;
}

inline nlohmann::json prior_to_json(const PriorTable& t) { return t.rows(); }

inline PriorTable prior_from_json(const nlohmann::json& j) {
  if (j.is_null() || j.empty()) return {};
  return PriorTable(j.get<std::vector<std::vector<double>>>());
}

}  // namespace conceptx::detail
