#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptx/corpus.hpp"
#include "conceptx/features.hpp"
#include "conceptx/phrase_type.hpp"

namespace conceptx {

struct DomainHyper {
  int n_aspects = 2;
  int n_domains = 10;
  double alpha_aspect = 25.0;
  double alpha_domain = 5.0;
  double beta_w = 0.01;
  double beta_l = 0.01;
  double beta_r = 0.01;
  double beta_v = 0.01;
  double omega = 0.5;   ///< weight of the previous slice in the temporal prior
  double kappa = 100.0; ///< pseudo-count mass of the previous slice

  static DomainHyper defaults(int n_aspects, int n_domains);
  void validate() const;
  bool operator==(const DomainHyper&) const = default;
};

/// Informative priors carried from one time slice to the next. Word and
/// significant-phrase tables have one row per (domain, aspect) cell, the
/// venue table one row per domain.
struct SlicePriors {
  PriorTable words;
  PriorTable sig;
  PriorTable venues;

  bool empty() const { return words.empty() && sig.empty() && venues.empty(); }
  bool operator==(const SlicePriors&) const = default;
};

struct DomainAspectModel {
  DomainHyper hyper;
  FeatureDims dims;
  std::uint64_t seed = 0;
  Rng rng;
  int sweeps = 0;

  std::vector<int> z_aspect;
  std::vector<int> z_domain;
  CountMatrix n_w;   ///< (domain * A + aspect) x unigram
  CountMatrix n_sp;  ///< (domain * A + aspect) x significant phrase
  CountMatrix n_l;   ///< aspect x left relation phrase, pooled over domains
  CountMatrix n_r;   ///< aspect x right relation phrase, pooled over domains
  CountMatrix n_v;   ///< domain x venue
  std::vector<int> n_a;
  std::vector<int> n_d;
  SlicePriors priors;

  int cell(int domain, int aspect) const { return domain * hyper.n_aspects + aspect; }
  int n_phrases() const { return static_cast<int>(z_aspect.size()); }
  bool operator==(const DomainAspectModel&) const = default;
};

DomainAspectModel gibbs_init_domain(std::span<const EncodedPhrase> phrases, FeatureDims dims,
                                    const DomainHyper& hyper, std::uint64_t seed, SlicePriors priors = {});

/// Joint block update of (aspect, domain) per phrase, then with more than
/// one domain a Metropolis-Hastings proposal per domain to exchange two
/// aspect labels of that domain.
void gibbs_sweep_domain(DomainAspectModel& model, std::span<const EncodedPhrase> phrases);

/// Unnormalized log conditional over the grid, indexed cell(d, a), for a
/// phrase whose counts are not currently in the model.
std::vector<double> domain_aspect_log_weights(const DomainAspectModel& model, const EncodedPhrase& phrase);

struct JointPosterior {
  std::vector<double> probs;  ///< indexed cell(d, a)
  int domain = 0;
  int aspect = 0;
  double max_prob = 0.0;
};

JointPosterior posterior_domain_aspect(const DomainAspectModel& model, const EncodedPhrase& phrase);

/// Same contract as assign_and_filter, thresholding the maximum joint cell.
TypingResult assign_and_filter_domain(const DomainAspectModel& model, std::span<const EncodedPhrase> phrases,
                                      double discard_threshold);

AspectMapping choose_mapping(const DomainAspectModel& model, std::span<const int> rp_ids);

/// Orders documents by year (stable) and cuts that order into n_slices
/// contiguous groups whose sizes differ by at most one, preferring cuts
/// between different years. Sets Document::time_slice in place without
/// reordering and returns the slice sizes.
std::vector<int> partition_time_slices(std::vector<Document>& docs, int n_slices);

/// kappa * omega * phi_prev + (1 - omega) * beta for every text and venue
/// distribution of the previous slice.
SlicePriors build_slice_prior(const DomainAspectModel& prev, const DomainHyper& hyper);

/// PhraseType variant: chains the per-aspect word and significant-phrase
/// distributions only.
SlicePriors build_slice_prior(const AspectModel& prev, double omega, double kappa);

std::optional<std::string> audit_counts(const DomainAspectModel& model, std::span<const EncodedPhrase> phrases);

nlohmann::json to_json(const DomainAspectModel& model);
DomainAspectModel domain_model_from_json(const nlohmann::json& j);

}  // namespace conceptx
