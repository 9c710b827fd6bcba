#include "conceptx/phrase_type.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "typing_detail.hpp"

namespace conceptx {

namespace {

detail::AspectTextCounts text_counts(const AspectModel& m) {
  return {m.n_w, m.n_sp, m.prior_w, m.prior_sp, m.hyper.beta_w, m.n_l, m.n_r, m.hyper.beta_l, m.hyper.beta_r};
}

void apply(AspectModel& m, const EncodedPhrase& p, int aspect, int delta) {
  m.n_a[static_cast<std::size_t>(aspect)] += delta;
  for (int w : p.words) m.n_w.add(aspect, w, delta);
  for (int s : p.sig) m.n_sp.add(aspect, s, delta);
  if (p.left >= 0) m.n_l.add(aspect, p.left, delta);
  if (p.right >= 0) m.n_r.add(aspect, p.right, delta);
}

void check_prior_shape(const PriorTable& prior, int rows, int cols, const char* what) {
  if (prior.empty()) return;
  if (static_cast<int>(prior.rows().size()) != rows)
    throw std::invalid_argument(std::string(what) + " prior: wrong number of rows");
  for (const auto& r : prior.rows())
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument(std::string(what) + " prior: wrong width");
}

}  // namespace

PhraseTypeHyper PhraseTypeHyper::defaults(int n_aspects) {
  PhraseTypeHyper h;
  h.n_aspects = n_aspects;
  h.alpha = 50.0 / n_aspects;
  return h;
}

void PhraseTypeHyper::validate() const {
  if (n_aspects < 1) throw std::invalid_argument("n_aspects must be >= 1");
  if (!(alpha > 0 && beta_w > 0 && beta_l > 0 && beta_r > 0))
    throw std::invalid_argument("PhraseType hyperparameters must be positive");
}

AspectModel gibbs_init(std::span<const EncodedPhrase> phrases, FeatureDims dims, const PhraseTypeHyper& hyper,
                       std::uint64_t seed, PriorTable prior_w, PriorTable prior_sp) {
  if (phrases.empty()) throw std::invalid_argument("gibbs_init: no phrases");
  hyper.validate();
  const int A = hyper.n_aspects;
  check_prior_shape(prior_w, A, dims.words, "word");
  check_prior_shape(prior_sp, A, dims.sig, "significant phrase");

  AspectModel m;
  m.hyper = hyper;
  m.dims = dims;
  m.seed = seed;
  m.rng.seed(seed);
  m.n_a.assign(static_cast<std::size_t>(A), 0);
  m.n_w = CountMatrix(A, dims.words);
  m.n_sp = CountMatrix(A, dims.sig);
  m.n_l = CountMatrix(A, dims.rel);
  m.n_r = CountMatrix(A, dims.rel);
  m.prior_w = std::move(prior_w);
  m.prior_sp = std::move(prior_sp);
  m.z.reserve(phrases.size());
  for (const auto& p : phrases) {
    const int a = uniform_index(m.rng, A);
    m.z.push_back(a);
    apply(m, p, a, +1);
  }
  return m;
}

std::vector<double> aspect_log_weights(const AspectModel& m, const EncodedPhrase& p) {
  const auto counts = text_counts(m);
  std::vector<double> lw(static_cast<std::size_t>(m.hyper.n_aspects));
  for (int a = 0; a < m.hyper.n_aspects; ++a)
    lw[static_cast<std::size_t>(a)] =
        detail::aspect_log_weight(m.n_a[static_cast<std::size_t>(a)], m.hyper.alpha, p, counts, a, a);
  return lw;
}

void gibbs_sweep(AspectModel& m, std::span<const EncodedPhrase> phrases) {
  if (phrases.size() != m.z.size()) throw std::invalid_argument("gibbs_sweep: phrase count does not match model");
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    apply(m, phrases[i], m.z[i], -1);
    const auto lw = aspect_log_weights(m, phrases[i]);
    m.z[i] = sample_log_weights(lw, m.rng);
    apply(m, phrases[i], m.z[i], +1);
  }
  ++m.sweeps;
}

AspectPosterior posterior_aspect(const AspectModel& m, const EncodedPhrase& p) {
  const int A = m.hyper.n_aspects;
  const auto counts = text_counts(m);
  const double total = m.n_phrases() + A * m.hyper.alpha;
  std::vector<double> lp(static_cast<std::size_t>(A));
  for (int a = 0; a < A; ++a)
    lp[static_cast<std::size_t>(a)] = detail::aspect_log_posterior_term(
        std::log((m.n_a[static_cast<std::size_t>(a)] + m.hyper.alpha) / total), p, counts, a, a);
  const double norm = log_sum_exp(lp);
  AspectPosterior post;
  post.probs.resize(lp.size());
  for (std::size_t a = 0; a < lp.size(); ++a) {
    post.probs[a] = std::exp(lp[a] - norm);
    if (post.probs[a] > post.max_prob) {
      post.max_prob = post.probs[a];
      post.argmax = static_cast<int>(a);
    }
  }
  return post;
}

TypingResult assign_and_filter(const AspectModel& m, std::span<const EncodedPhrase> phrases,
                               double discard_threshold) {
  TypingResult out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const auto post = posterior_aspect(m, phrases[i]);
    Typing t;
    t.aspect = post.argmax;
    t.max_prob = post.max_prob;
    t.kept = post.max_prob >= discard_threshold;
    (t.kept ? out.kept : out.discarded).push_back(static_cast<int>(i));
    out.typings.push_back(t);
  }
  return out;
}

AspectMapping choose_mapping(const std::vector<std::vector<double>>& phi_left,
                             const std::vector<std::vector<double>>& phi_right, std::span<const int> rp_ids) {
  if (phi_left.size() != 2 || phi_right.size() != 2)
    throw std::invalid_argument("choose_mapping: exactly two aspects are supported");
  double straight = 0.0;  // T=0, A=1
  double swapped = 0.0;   // T=1, A=0
  int used = 0;
  for (int rp : rp_ids) {
    if (rp < 0) continue;
    const auto k = static_cast<std::size_t>(rp);
    if (k >= phi_left[0].size() || k >= phi_right[0].size()) continue;
    ++used;
    straight += phi_left[0][k] + phi_right[1][k];
    swapped += phi_left[1][k] + phi_right[0][k];
  }
  if (used == 0) throw std::domain_error("aspect mapping undecidable: no indicative relation phrase in vocabulary");
  AspectMapping m;
  const double scale = std::max({1e-300, std::abs(straight), std::abs(swapped)});
  m.tie = std::abs(straight - swapped) <= 1e-12 * scale;
  if (m.tie || straight > swapped) {
    m.technique = 0;
    m.application = 1;
    m.objective = straight;
    m.objective_alternative = swapped;
  } else {
    m.technique = 1;
    m.application = 0;
    m.objective = swapped;
    m.objective_alternative = straight;
  }
  return m;
}

namespace {

std::vector<std::vector<double>> relation_estimates(const CountMatrix& counts, double beta) {
  std::vector<std::vector<double>> phi(static_cast<std::size_t>(counts.rows()));
  for (int a = 0; a < counts.rows(); ++a)
    for (int c = 0; c < counts.cols(); ++c)
      phi[static_cast<std::size_t>(a)].push_back(smoothed_estimate(counts, a, c, PriorTable{}, beta));
  return phi;
}

}  // namespace

AspectMapping choose_mapping(const AspectModel& m, std::span<const int> rp_ids) {
  return choose_mapping(relation_estimates(m.n_l, m.hyper.beta_l), relation_estimates(m.n_r, m.hyper.beta_r),
                        rp_ids);
}

std::optional<std::string> audit_counts(const AspectModel& m, std::span<const EncodedPhrase> phrases) {
  if (phrases.size() != m.z.size()) return "phrase count differs from assignment count";
  AspectModel fresh;
  fresh.hyper = m.hyper;
  fresh.n_a.assign(m.n_a.size(), 0);
  fresh.n_w = CountMatrix(m.n_w.rows(), m.n_w.cols());
  fresh.n_sp = CountMatrix(m.n_sp.rows(), m.n_sp.cols());
  fresh.n_l = CountMatrix(m.n_l.rows(), m.n_l.cols());
  fresh.n_r = CountMatrix(m.n_r.rows(), m.n_r.cols());
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const int a = m.z[i];
    if (a < 0 || a >= m.hyper.n_aspects) return "aspect out of range for phrase " + std::to_string(i);
    apply(fresh, phrases[i], a, +1);
  }
  if (fresh.n_a != m.n_a) return "aspect totals differ";
  if (!(fresh.n_w == m.n_w)) return "unigram counts differ";
  if (!(fresh.n_sp == m.n_sp)) return "significant phrase counts differ";
  if (!(fresh.n_l == m.n_l)) return "left relation counts differ";
  if (!(fresh.n_r == m.n_r)) return "right relation counts differ";
  return std::nullopt;
}

nlohmann::json to_json(const AspectModel& m) {
  nlohmann::json j;
  j["format"] = "conceptx-model";
  j["version"] = 1;
  j["kind"] = "phrasetype";
  j["hyper"] = {{"n_aspects", m.hyper.n_aspects}, {"alpha", m.hyper.alpha}, {"beta_w", m.hyper.beta_w},
                {"beta_l", m.hyper.beta_l}, {"beta_r", m.hyper.beta_r}};
  j["dims"] = {{"words", m.dims.words}, {"sig", m.dims.sig}, {"rel", m.dims.rel}, {"venues", m.dims.venues}};
  j["seed"] = m.seed;
  j["sweeps"] = m.sweeps;
  j["rng_state"] = detail::rng_state(m.rng);
  j["z"] = m.z;
  j["n_a"] = m.n_a;
  j["n_w"] = m.n_w.to_json();
  j["n_sp"] = m.n_sp.to_json();
  j["n_l"] = m.n_l.to_json();
  j["n_r"] = m.n_r.to_json();
  j["prior_w"] = detail::prior_to_json(m.prior_w);
  j["prior_sp"] = detail::prior_to_json(m.prior_sp);
  return j;
}

AspectModel aspect_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "conceptx-model" || j.value("kind", "") != "phrasetype")
    throw InputError("not a PhraseType checkpoint");
  if (j.at("version").get<int>() != 1) throw InputError("unsupported checkpoint version");
  AspectModel m;
  const auto& h = j.at("hyper");
  m.hyper.n_aspects = h.at("n_aspects").get<int>();
  m.hyper.alpha = h.at("alpha").get<double>();
  m.hyper.beta_w = h.at("beta_w").get<double>();
  m.hyper.beta_l = h.at("beta_l").get<double>();
  m.hyper.beta_r = h.at("beta_r").get<double>();
  const auto& d = j.at("dims");
  m.dims = {d.at("words").get<int>(), d.at("sig").get<int>(), d.at("rel").get<int>(), d.at("venues").get<int>()};
  m.seed = j.at("seed").get<std::uint64_t>();
  m.sweeps = j.at("sweeps").get<int>();
  m.rng = detail::rng_from_state(j.at("rng_state").get<std::string>());
  m.z = j.at("z").get<std::vector<int>>();
  m.n_a = j.at("n_a").get<std::vector<int>>();
  const int A = m.hyper.n_aspects;
  m.n_w = CountMatrix::from_json(j.at("n_w"), A, m.dims.words);
  m.n_sp = CountMatrix::from_json(j.at("n_sp"), A, m.dims.sig);
  m.n_l = CountMatrix::from_json(j.at("n_l"), A, m.dims.rel);
  m.n_r = CountMatrix::from_json(j.at("n_r"), A, m.dims.rel);
  m.prior_w = detail::prior_from_json(j.at("prior_w"));
  m.prior_sp = detail::prior_from_json(j.at("prior_sp"));
  return m;
}

}  // namespace conceptx
