#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/common.hpp"
#include "conceptx/features.hpp"

namespace conceptx {

struct PhraseTypeHyper {
  int n_aspects = 2;
  double alpha = 25.0;
  double beta_w = 0.01;
  double beta_l = 0.01;
  double beta_r = 0.01;

  /// alpha = 50 / n_aspects, all betas 0.01.
  static PhraseTypeHyper defaults(int n_aspects);
  void validate() const;
  bool operator==(const PhraseTypeHyper&) const = default;
};

/// Sufficient statistics of the collapsed PhraseType sampler.
struct AspectModel {
  PhraseTypeHyper hyper;
  FeatureDims dims;
  std::uint64_t seed = 0;
  Rng rng;
  int sweeps = 0;

  std::vector<int> z;    ///< aspect per phrase
  std::vector<int> n_a;  ///< phrases per aspect
  CountMatrix n_w;       ///< aspect x unigram
  CountMatrix n_sp;      ///< aspect x significant phrase
  CountMatrix n_l;       ///< aspect x left relation phrase
  CountMatrix n_r;       ///< aspect x right relation phrase

  // Temporal pseudo-counts for the text distributions; empty means beta_w.
  PriorTable prior_w;
  PriorTable prior_sp;

  int n_phrases() const { return static_cast<int>(z.size()); }
  bool operator==(const AspectModel&) const = default;
};

/// Uniform random initial aspects; throws std::invalid_argument on an empty phrase list.
AspectModel gibbs_init(std::span<const EncodedPhrase> phrases, FeatureDims dims, const PhraseTypeHyper& hyper,
                       std::uint64_t seed, PriorTable prior_w = {}, PriorTable prior_sp = {});

/// One collapsed Gibbs pass over all phrases in order.
void gibbs_sweep(AspectModel& model, std::span<const EncodedPhrase> phrases);

/// Unnormalized log conditional over aspects for a phrase whose counts are
/// not currently in the model.
std::vector<double> aspect_log_weights(const AspectModel& model, const EncodedPhrase& phrase);

struct AspectPosterior {
  std::vector<double> probs;
  double max_prob = 0.0;
  int argmax = 0;
};

/// P(a|p) from smoothed point estimates; missing relation phrases drop out.
AspectPosterior posterior_aspect(const AspectModel& model, const EncodedPhrase& phrase);

struct Typing {
  int aspect = 0;
  int domain = -1;
  double max_prob = 0.0;
  bool kept = false;
};

struct TypingResult {
  std::vector<Typing> typings;  ///< one per input phrase
  std::vector<int> kept;
  std::vector<int> discarded;
};

/// Argmax aspect per phrase (ties to the lowest index); max_prob below the
/// threshold routes the phrase to the discarded set.
TypingResult assign_and_filter(const AspectModel& model, std::span<const EncodedPhrase> phrases,
                               double discard_threshold);

struct AspectMapping {
  int technique = 0;
  int application = 1;
  bool tie = false;
  double objective = 0.0;          ///< value of the chosen mapping
  double objective_alternative = 0.0;
};

/// Picks (T,A) = (0,1) or (1,0) maximizing sum over rp of phi_l[T](rp) + phi_r[A](rp).
/// Ids < 0 are ignored; if none remain the mapping is undecidable and
/// std::domain_error is thrown. Ties resolve to (0,1).
AspectMapping choose_mapping(const std::vector<std::vector<double>>& phi_left,
                             const std::vector<std::vector<double>>& phi_right, std::span<const int> rp_ids);
AspectMapping choose_mapping(const AspectModel& model, std::span<const int> rp_ids);

/// Recomputes every count from z and the phrase features. Returns a
/// description of the first mismatch, or nullopt when consistent.
std::optional<std::string> audit_counts(const AspectModel& model, std::span<const EncodedPhrase> phrases);

nlohmann::json to_json(const AspectModel& model);
AspectModel aspect_model_from_json(const nlohmann::json& j);

}  // namespace conceptx
