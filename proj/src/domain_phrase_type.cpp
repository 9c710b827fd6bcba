#include "conceptx/domain_phrase_type.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "typing_detail.hpp"

namespace conceptx {

namespace {

detail::AspectTextCounts text_counts(const DomainAspectModel& m) {
  return {m.n_w, m.n_sp, m.priors.words, m.priors.sig, m.hyper.beta_w, m.n_l, m.n_r, m.hyper.beta_l, m.hyper.beta_r};
}

void apply(DomainAspectModel& m, const EncodedPhrase& p, int domain, int aspect, int delta) {
  const int row = m.cell(domain, aspect);
  m.n_a[static_cast<std::size_t>(aspect)] += delta;
  m.n_d[static_cast<std::size_t>(domain)] += delta;
  for (int w : p.words) m.n_w.add(row, w, delta);
  for (int s : p.sig) m.n_sp.add(row, s, delta);
  if (p.left >= 0) m.n_l.add(aspect, p.left, delta);
  if (p.right >= 0) m.n_r.add(aspect, p.right, delta);
  if (p.venue >= 0) m.n_v.add(domain, p.venue, delta);
}

void check_prior_shape(const PriorTable& prior, int rows, int cols, const char* what) {
  if (prior.empty()) return;
  if (static_cast<int>(prior.rows().size()) != rows)
    throw std::invalid_argument(std::string(what) + " prior: wrong number of rows");
  for (const auto& r : prior.rows())
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument(std::string(what) + " prior: wrong width");
}

double venue_log_factor(const DomainAspectModel& m, const EncodedPhrase& p, int d) {
  if (p.venue < 0) return 0.0;
  return std::log(smoothed_estimate(m.n_v, d, p.venue, m.priors.venues, m.hyper.beta_v));
}

// Aspect part of the conditional for domain d, indexed by aspect.
std::vector<double> aspect_part(const DomainAspectModel& m, const EncodedPhrase& p, int d) {
  const auto counts = text_counts(m);
  std::vector<double> lw(static_cast<std::size_t>(m.hyper.n_aspects));
  for (int a = 0; a < m.hyper.n_aspects; ++a)
    lw[static_cast<std::size_t>(a)] = detail::aspect_log_weight(m.n_a[static_cast<std::size_t>(a)],
                                                                m.hyper.alpha_aspect, p, counts, m.cell(d, a), a);
  return lw;
}

double domain_part(const DomainAspectModel& m, const EncodedPhrase& p, int d) {
  return std::log(m.n_d[static_cast<std::size_t>(d)] + m.hyper.alpha_domain) + venue_log_factor(m, p, d);
}

// Collapsed Dirichlet-multinomial log likelihood of one count row, up to
// terms that do not depend on the counts.
double log_dm_row(const CountMatrix& counts, int row, const PriorTable& prior, double beta) {
  double lp = -std::lgamma(prior.pseudo_total(row, beta, counts.cols()) + counts.row_total(row));
  for (int c = 0; c < counts.cols(); ++c)
    if (const int n = counts(row, c); n > 0) {
      const double a = prior.pseudo(row, c, beta);
      lp += std::lgamma(n + a) - std::lgamma(a);
    }
  return lp;
}

// Parts of the collapsed joint touched by relabeling aspects a1, a2 in domain d.
double swap_log_joint(const DomainAspectModel& m, int d, int a1, int a2) {
  double lp = 0.0;
  for (int a : {a1, a2}) {
    lp += std::lgamma(m.n_a[static_cast<std::size_t>(a)] + m.hyper.alpha_aspect);
    lp += log_dm_row(m.n_l, a, PriorTable{}, m.hyper.beta_l);
    lp += log_dm_row(m.n_r, a, PriorTable{}, m.hyper.beta_r);
    lp += log_dm_row(m.n_w, m.cell(d, a), m.priors.words, m.hyper.beta_w);
    lp += log_dm_row(m.n_sp, m.cell(d, a), m.priors.sig, m.hyper.beta_w);
  }
  return lp;
}

// Metropolis-Hastings move exchanging two aspect labels inside one domain.
// Single-site updates cannot do this once the cell vocabularies have formed,
// and without it the aspects of different domains may end up misaligned.
void propose_aspect_swap(DomainAspectModel& m, std::span<const EncodedPhrase> phrases, int d) {
  const int A = m.hyper.n_aspects;
  int a1 = 0;
  int a2 = 1;
  if (A > 2) {
    a1 = uniform_index(m.rng, A);
    a2 = uniform_index(m.rng, A - 1);
    if (a2 >= a1) ++a2;
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < phrases.size(); ++i)
    if (m.z_domain[i] == d && (m.z_aspect[i] == a1 || m.z_aspect[i] == a2)) members.push_back(i);
  if (members.empty()) return;
  auto swap_all = [&] {
    for (std::size_t i : members) {
      const int to = m.z_aspect[i] == a1 ? a2 : a1;
      apply(m, phrases[i], d, m.z_aspect[i], -1);
      apply(m, phrases[i], d, to, +1);
      m.z_aspect[i] = to;
    }
  };
  const double before = swap_log_joint(m, d, a1, a2);
  swap_all();
  const double log_ratio = swap_log_joint(m, d, a1, a2) - before;
  if (!(log_ratio >= 0.0 || std::log(uniform01(m.rng)) < log_ratio)) swap_all();
}

}  // namespace

DomainHyper DomainHyper::defaults(int n_aspects, int n_domains) {
  DomainHyper h;
  h.n_aspects = n_aspects;
  h.n_domains = n_domains;
  h.alpha_aspect = 50.0 / n_aspects;
  h.alpha_domain = 50.0 / n_domains;
  return h;
}

void DomainHyper::validate() const {
  if (n_aspects < 1 || n_domains < 1) throw std::invalid_argument("n_aspects and n_domains must be >= 1");
  if (!(alpha_aspect > 0 && alpha_domain > 0 && beta_w > 0 && beta_l > 0 && beta_r > 0 && beta_v > 0 && kappa > 0))
    throw std::invalid_argument("DomainPhraseType hyperparameters must be positive");
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("omega must lie in [0, 1]");
}

DomainAspectModel gibbs_init_domain(std::span<const EncodedPhrase> phrases, FeatureDims dims,
                                    const DomainHyper& hyper, std::uint64_t seed, SlicePriors priors) {
  if (phrases.empty()) throw std::invalid_argument("gibbs_init_domain: no phrases");
  hyper.validate();
  const int A = hyper.n_aspects;
  const int D = hyper.n_domains;
  check_prior_shape(priors.words, D * A, dims.words, "word");
  check_prior_shape(priors.sig, D * A, dims.sig, "significant phrase");
  check_prior_shape(priors.venues, D, dims.venues, "venue");

  DomainAspectModel m;
  m.hyper = hyper;
  m.dims = dims;
  m.seed = seed;
  m.rng.seed(seed);
  m.n_w = CountMatrix(D * A, dims.words);
  m.n_sp = CountMatrix(D * A, dims.sig);
  m.n_l = CountMatrix(A, dims.rel);
  m.n_r = CountMatrix(A, dims.rel);
  m.n_v = CountMatrix(D, dims.venues);
  m.n_a.assign(static_cast<std::size_t>(A), 0);
  m.n_d.assign(static_cast<std::size_t>(D), 0);
  m.priors = std::move(priors);
  for (const auto& p : phrases) {
    const int cell = uniform_index(m.rng, D * A);
    m.z_aspect.push_back(cell % A);
    m.z_domain.push_back(cell / A);
    apply(m, p, cell / A, cell % A, +1);
  }
  return m;
}

std::vector<double> domain_aspect_log_weights(const DomainAspectModel& m, const EncodedPhrase& p) {
  const int A = m.hyper.n_aspects;
  std::vector<double> grid(static_cast<std::size_t>(A * m.hyper.n_domains));
  for (int d = 0; d < m.hyper.n_domains; ++d) {
    const double dom = domain_part(m, p, d);
    const auto asp = aspect_part(m, p, d);
    for (int a = 0; a < A; ++a) grid[static_cast<std::size_t>(m.cell(d, a))] = dom + asp[static_cast<std::size_t>(a)];
  }
  return grid;
}

void gibbs_sweep_domain(DomainAspectModel& m, std::span<const EncodedPhrase> phrases) {
  if (phrases.size() != m.z_aspect.size())
    throw std::invalid_argument("gibbs_sweep_domain: phrase count does not match model");
  const int D = m.hyper.n_domains;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const auto& p = phrases[i];
    apply(m, p, m.z_domain[i], m.z_aspect[i], -1);
    // Exact joint draw: domain from its marginal, then aspect given domain.
    std::vector<std::vector<double>> parts(static_cast<std::size_t>(D));
    std::vector<double> marginal(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
      parts[static_cast<std::size_t>(d)] = aspect_part(m, p, d);
      marginal[static_cast<std::size_t>(d)] = domain_part(m, p, d) + log_sum_exp(parts[static_cast<std::size_t>(d)]);
    }
    const int d = sample_log_weights(marginal, m.rng);
    const int a = sample_log_weights(parts[static_cast<std::size_t>(d)], m.rng);
    m.z_domain[i] = d;
    m.z_aspect[i] = a;
    apply(m, p, d, a, +1);
  }
  if (D > 1 && m.hyper.n_aspects > 1)
    for (int d = 0; d < D; ++d) propose_aspect_swap(m, phrases, d);
  ++m.sweeps;
}

JointPosterior posterior_domain_aspect(const DomainAspectModel& m, const EncodedPhrase& p) {
  const int A = m.hyper.n_aspects;
  const int D = m.hyper.n_domains;
  const auto counts = text_counts(m);
  const double n = m.n_phrases();
  std::vector<double> lp(static_cast<std::size_t>(A * D));
  for (int d = 0; d < D; ++d) {
    const double log_pd = std::log((m.n_d[static_cast<std::size_t>(d)] + m.hyper.alpha_domain) /
                                   (n + D * m.hyper.alpha_domain)) +
                          venue_log_factor(m, p, d);
    for (int a = 0; a < A; ++a) {
      const double log_pa =
          std::log((m.n_a[static_cast<std::size_t>(a)] + m.hyper.alpha_aspect) / (n + A * m.hyper.alpha_aspect));
      lp[static_cast<std::size_t>(m.cell(d, a))] =
          log_pd + detail::aspect_log_posterior_term(log_pa, p, counts, m.cell(d, a), a);
    }
  }
  const double norm = log_sum_exp(lp);
  JointPosterior post;
  post.probs.resize(lp.size());
  for (std::size_t c = 0; c < lp.size(); ++c) {
    post.probs[c] = std::exp(lp[c] - norm);
    if (post.probs[c] > post.max_prob) {
      post.max_prob = post.probs[c];
      post.domain = static_cast<int>(c) / A;
      post.aspect = static_cast<int>(c) % A;
    }
  }
  return post;
}

TypingResult assign_and_filter_domain(const DomainAspectModel& m, std::span<const EncodedPhrase> phrases,
                                      double discard_threshold) {
  TypingResult out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const auto post = posterior_domain_aspect(m, phrases[i]);
    Typing t;
    t.aspect = post.aspect;
    t.domain = post.domain;
    t.max_prob = post.max_prob;
    t.kept = post.max_prob >= discard_threshold;
    (t.kept ? out.kept : out.discarded).push_back(static_cast<int>(i));
    out.typings.push_back(t);
  }
  return out;
}

AspectMapping choose_mapping(const DomainAspectModel& m, std::span<const int> rp_ids) {
  auto estimates = [](const CountMatrix& counts, double beta) {
    std::vector<std::vector<double>> phi(static_cast<std::size_t>(counts.rows()));
    for (int a = 0; a < counts.rows(); ++a)
      for (int c = 0; c < counts.cols(); ++c)
        phi[static_cast<std::size_t>(a)].push_back(smoothed_estimate(counts, a, c, PriorTable{}, beta));
    return phi;
  };
  return choose_mapping(estimates(m.n_l, m.hyper.beta_l), estimates(m.n_r, m.hyper.beta_r), rp_ids);
}

std::vector<int> partition_time_slices(std::vector<Document>& docs, int n_slices) {
  const int n = static_cast<int>(docs.size());
  if (n_slices < 1) throw std::invalid_argument("n_slices must be >= 1");
  if (n_slices > n) throw std::invalid_argument("more time slices than documents");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return docs[static_cast<std::size_t>(a)].year < docs[static_cast<std::size_t>(b)].year;
  });
  auto year_at = [&](int pos) { return docs[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])].year; };
  // Cutting before position p splits a year group when p-1 and p share a year.
  auto cut_cost = [&](int p) { return (p > 0 && p < n && year_at(p - 1) == year_at(p)) ? 1 : 0; };

  const int base = n / n_slices;
  const int extra = n % n_slices;
  constexpr int kInf = std::numeric_limits<int>::max() / 2;
  // best[s][b]: fewest split year groups over slices s.. given b enlarged slices so far.
  std::vector<std::vector<int>> best(static_cast<std::size_t>(n_slices) + 1,
                                     std::vector<int>(static_cast<std::size_t>(extra) + 1, kInf));
  best[static_cast<std::size_t>(n_slices)][static_cast<std::size_t>(extra)] = 0;
  for (int s = n_slices - 1; s >= 0; --s) {
    for (int b = 0; b <= std::min(s, extra); ++b) {
      const int start = s * base + b;
      int value = kInf;
      for (int big = 1; big >= 0; --big) {
        const int nb = b + big;
        if (nb > extra) continue;
        const int rest = best[static_cast<std::size_t>(s) + 1][static_cast<std::size_t>(nb)];
        if (rest >= kInf) continue;
        const int end = start + base + big;
        value = std::min(value, rest + (s + 1 < n_slices ? cut_cost(end) : 0));
      }
      best[static_cast<std::size_t>(s)][static_cast<std::size_t>(b)] = value;
    }
  }

  std::vector<int> sizes;
  int b = 0;
  for (int s = 0; s < n_slices; ++s) {
    const int start = s * base + b;
    const int target = best[static_cast<std::size_t>(s)][static_cast<std::size_t>(b)];
    int chosen = 0;
    for (int big = 1; big >= 0; --big) {  // larger slices first on ties
      const int nb = b + big;
      if (nb > extra) continue;
      const int rest = best[static_cast<std::size_t>(s) + 1][static_cast<std::size_t>(nb)];
      if (rest >= kInf) continue;
      const int end = start + base + big;
      if (rest + (s + 1 < n_slices ? cut_cost(end) : 0) == target) {
        chosen = big;
        break;
      }
    }
    const int size = base + chosen;
    for (int k = start; k < start + size; ++k)
      docs[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])].time_slice = s;
    sizes.push_back(size);
    b += chosen;
  }
  return sizes;
}

namespace {

PriorTable chain(const CountMatrix& counts, const PriorTable& prev_prior, double beta, double omega, double kappa) {
  // No coupling: the empty table is the symmetric prior, bit for bit.
  if (omega == 0.0) return {};
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(counts.rows()));
  for (int r = 0; r < counts.rows(); ++r) {
    auto& row = rows[static_cast<std::size_t>(r)];
    row.resize(static_cast<std::size_t>(counts.cols()));
    for (int c = 0; c < counts.cols(); ++c)
      row[static_cast<std::size_t>(c)] =
          kappa * omega * smoothed_estimate(counts, r, c, prev_prior, beta) + (1.0 - omega) * beta;
  }
  return PriorTable(std::move(rows));
}

}  // namespace

SlicePriors build_slice_prior(const DomainAspectModel& prev, const DomainHyper& hyper) {
  hyper.validate();
  SlicePriors out;
  out.words = chain(prev.n_w, prev.priors.words, hyper.beta_w, hyper.omega, hyper.kappa);
  out.sig = chain(prev.n_sp, prev.priors.sig, hyper.beta_w, hyper.omega, hyper.kappa);
  out.venues = chain(prev.n_v, prev.priors.venues, hyper.beta_v, hyper.omega, hyper.kappa);
  return out;
}

SlicePriors build_slice_prior(const AspectModel& prev, double omega, double kappa) {
  if (!(omega >= 0.0 && omega <= 1.0) || !(kappa > 0)) throw std::invalid_argument("invalid omega/kappa");
  SlicePriors out;
  out.words = chain(prev.n_w, prev.prior_w, prev.hyper.beta_w, omega, kappa);
  out.sig = chain(prev.n_sp, prev.prior_sp, prev.hyper.beta_w, omega, kappa);
  return out;
}

std::optional<std::string> audit_counts(const DomainAspectModel& m, std::span<const EncodedPhrase> phrases) {
  if (phrases.size() != m.z_aspect.size() || phrases.size() != m.z_domain.size())
    return "phrase count differs from assignment count";
  DomainAspectModel fresh;
  fresh.hyper = m.hyper;
  fresh.n_w = CountMatrix(m.n_w.rows(), m.n_w.cols());
  fresh.n_sp = CountMatrix(m.n_sp.rows(), m.n_sp.cols());
  fresh.n_l = CountMatrix(m.n_l.rows(), m.n_l.cols());
  fresh.n_r = CountMatrix(m.n_r.rows(), m.n_r.cols());
  fresh.n_v = CountMatrix(m.n_v.rows(), m.n_v.cols());
  fresh.n_a.assign(m.n_a.size(), 0);
  fresh.n_d.assign(m.n_d.size(), 0);
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const int a = m.z_aspect[i];
    const int d = m.z_domain[i];
    if (a < 0 || a >= m.hyper.n_aspects || d < 0 || d >= m.hyper.n_domains)
      return "assignment out of range for phrase " + std::to_string(i);
    apply(fresh, phrases[i], d, a, +1);
  }
  if (fresh.n_a != m.n_a) return "aspect totals differ";
  if (fresh.n_d != m.n_d) return "domain totals differ";
  if (!(fresh.n_w == m.n_w)) return "unigram counts differ";
  if (!(fresh.n_sp == m.n_sp)) return "significant phrase counts differ";
  if (!(fresh.n_l == m.n_l)) return "left relation counts differ";
  if (!(fresh.n_r == m.n_r)) return "right relation counts differ";
  if (!(fresh.n_v == m.n_v)) return "venue counts differ";
  return std::nullopt;
}

nlohmann::json to_json(const DomainAspectModel& m) {
  nlohmann::json j;
  j["format"] = "conceptx-model";
  j["version"] = 1;
  j["kind"] = "domainphrasetype";
  const auto& h = m.hyper;
  j["hyper"] = {{"n_aspects", h.n_aspects}, {"n_domains", h.n_domains}, {"alpha_aspect", h.alpha_aspect},
                {"alpha_domain", h.alpha_domain}, {"beta_w", h.beta_w}, {"beta_l", h.beta_l},
                {"beta_r", h.beta_r}, {"beta_v", h.beta_v}, {"omega", h.omega}, {"kappa", h.kappa}};
  j["dims"] = {{"words", m.dims.words}, {"sig", m.dims.sig}, {"rel", m.dims.rel}, {"venues", m.dims.venues}};
  j["seed"] = m.seed;
  j["sweeps"] = m.sweeps;
  j["rng_state"] = detail::rng_state(m.rng);
  j["z_aspect"] = m.z_aspect;
  j["z_domain"] = m.z_domain;
  j["n_a"] = m.n_a;
  j["n_d"] = m.n_d;
  j["n_w"] = m.n_w.to_json();
  j["n_sp"] = m.n_sp.to_json();
  j["n_l"] = m.n_l.to_json();
  j["n_r"] = m.n_r.to_json();
  j["n_v"] = m.n_v.to_json();
  j["slice_priors"] = {{"words", detail::prior_to_json(m.priors.words)},
                       {"sig", detail::prior_to_json(m.priors.sig)},
                       {"venues", detail::prior_to_json(m.priors.venues)}};
  return j;
}

DomainAspectModel domain_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "conceptx-model" || j.value("kind", "") != "domainphrasetype")
    throw InputError("not a DomainPhraseType checkpoint");
  if (j.at("version").get<int>() != 1) throw InputError("unsupported checkpoint version");
  DomainAspectModel m;
  const auto& h = j.at("hyper");
  m.hyper.n_aspects = h.at("n_aspects").get<int>();
  m.hyper.n_domains = h.at("n_domains").get<int>();
  m.hyper.alpha_aspect = h.at("alpha_aspect").get<double>();
  m.hyper.alpha_domain = h.at("alpha_domain").get<double>();
  m.hyper.beta_w = h.at("beta_w").get<double>();
  m.hyper.beta_l = h.at("beta_l").get<double>();
  m.hyper.beta_r = h.at("beta_r").get<double>();
  m.hyper.beta_v = h.at("beta_v").get<double>();
  m.hyper.omega = h.at("omega").get<double>();
  m.hyper.kappa = h.at("kappa").get<double>();
  const auto& d = j.at("dims");
  m.dims = {d.at("words").get<int>(), d.at("sig").get<int>(), d.at("rel").get<int>(), d.at("venues").get<int>()};
  m.seed = j.at("seed").get<std::uint64_t>();
  m.sweeps = j.at("sweeps").get<int>();
  m.rng = detail::rng_from_state(j.at("rng_state").get<std::string>());
  m.z_aspect = j.at("z_aspect").get<std::vector<int>>();
  m.z_domain = j.at("z_domain").get<std::vector<int>>();
  m.n_a = j.at("n_a").get<std::vector<int>>();
  m.n_d = j.at("n_d").get<std::vector<int>>();
  const int A = m.hyper.n_aspects;
  const int D = m.hyper.n_domains;
  m.n_w = CountMatrix::from_json(j.at("n_w"), D * A, m.dims.words);
  m.n_sp = CountMatrix::from_json(j.at("n_sp"), D * A, m.dims.sig);
  m.n_l = CountMatrix::from_json(j.at("n_l"), A, m.dims.rel);
  m.n_r = CountMatrix::from_json(j.at("n_r"), A, m.dims.rel);
  m.n_v = CountMatrix::from_json(j.at("n_v"), D, m.dims.venues);
  const auto& sp = j.at("slice_priors");
  m.priors.words = detail::prior_from_json(sp.at("words"));
  m.priors.sig = detail::prior_from_json(sp.at("sig"));
  m.priors.venues = detail::prior_from_json(sp.at("venues"));
  return m;
}

}  // namespace conceptx
