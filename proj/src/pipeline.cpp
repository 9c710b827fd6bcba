#include "conceptx/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "conceptx/corpus.hpp"
#include "conceptx/domain_phrase_type.hpp"
#include "conceptx/extraction.hpp"
#include "conceptx/features.hpp"
#include "conceptx/phrase_type.hpp"
#include "conceptx/segmentation.hpp"
#include "conceptx/synthetic.hpp"

namespace conceptx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_value(const json& v, const std::string& key, T& out) {
  if constexpr (std::is_same_v<T, int>) {
    if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError("config key '" + key + "' must be a non-negative integer");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  }
  try {
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

using Setter = std::function<void(PipelineConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
#define CONCEPTX_KEY(name) t[#name] = [](PipelineConfig& c, const json& v) { read_value(v, #name, c.name); }
    CONCEPTX_KEY(corpus);
    CONCEPTX_KEY(gold);
    CONCEPTX_KEY(output_dir);
    CONCEPTX_KEY(model);
    CONCEPTX_KEY(n_aspects);
    CONCEPTX_KEY(n_domains);
    CONCEPTX_KEY(n_slices);
    CONCEPTX_KEY(beta_w);
    CONCEPTX_KEY(beta_l);
    CONCEPTX_KEY(beta_r);
    CONCEPTX_KEY(beta_v);
    CONCEPTX_KEY(omega);
    CONCEPTX_KEY(kappa);
    CONCEPTX_KEY(typing_iterations);
    CONCEPTX_KEY(discard_threshold);
    CONCEPTX_KEY(min_support);
    CONCEPTX_KEY(significance);
    CONCEPTX_KEY(pmi_threshold);
    CONCEPTX_KEY(idf_min);
    CONCEPTX_KEY(grammar);
    CONCEPTX_KEY(grammar_file);
    CONCEPTX_KEY(grammar_alpha);
    CONCEPTX_KEY(pyp_a);
    CONCEPTX_KEY(pyp_b);
    CONCEPTX_KEY(grammar_iterations);
    CONCEPTX_KEY(seed);
    CONCEPTX_KEY(jobs);
    CONCEPTX_KEY(bench_typing_iterations);
    CONCEPTX_KEY(bench_grammar_iterations);
#undef CONCEPTX_KEY
    auto optional_number = [](const char* key, std::optional<double> PipelineConfig::*field) {
      return [key, field](PipelineConfig& c, const json& v) {
        if (v.is_null()) {
          c.*field = std::nullopt;
          return;
        }
        double x = 0;
        read_value(v, key, x);
        c.*field = x;
      };
    };
    t["alpha"] = optional_number("alpha", &PipelineConfig::alpha);
    t["alpha_domain"] = optional_number("alpha_domain", &PipelineConfig::alpha_domain);
    t["indicative_relation_phrases"] = [](PipelineConfig& c, const json& v) {
      if (!v.is_array()) throw ConfigError("config key 'indicative_relation_phrases' must be an array of strings");
      c.indicative_relation_phrases.clear();
      for (const auto& e : v) {
        std::string s;
        read_value(e, "indicative_relation_phrases", s);
        c.indicative_relation_phrases.push_back(s);
      }
    };
    t["bench_sizes"] = [](PipelineConfig& c, const json& v) {
      if (!v.is_array()) throw ConfigError("config key 'bench_sizes' must be an array of integers");
      c.bench_sizes.clear();
      for (const auto& e : v) {
        int n = 0;
        read_value(e, "bench_sizes", n);
        c.bench_sizes.push_back(n);
      }
    };
    return t;
  }();
  return table;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_text(const fs::path& path, const std::string& hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string() + (hint.empty() ? "" : " (" + hint + ")"));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T, typename Parse>
std::vector<T> read_jsonl(const fs::path& path, const std::string& hint, Parse parse) {
  std::istringstream in(read_text(path, hint));
  std::vector<T> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

json read_json(const fs::path& path, const std::string& hint) {
  try {
    return json::parse(read_text(path, hint));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& x : items) out += to_json(x).dump() + "\n";
  return out;
}

void prepare_output(const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw InputError("cannot create output directory " + config.output_dir + ": " + ec.message());
}

std::vector<Phrase> segment_documents(const std::vector<Document>& docs, const PipelineConfig& config) {
  const auto stats = compute_stats(docs);
  const auto significant = mine_significant_phrases(docs, stats, config.min_support, config.significance);
  FeatureFilter filter;
  filter.stats = &stats;
  filter.significant = &significant;
  filter.idf_min = config.idf_min;
  std::vector<Phrase> phrases;
  for (const auto& doc : docs) {
    auto ps = segment_title(doc, detect_relation_phrases(doc), stats, config.pmi_threshold, filter);
    for (auto& p : ps) phrases.push_back(std::move(p));
  }
  return phrases;
}

std::string aspect_label(int aspect, const std::optional<AspectMapping>& mapping) {
  if (mapping) {
    if (aspect == mapping->technique) return kTechnique;
    if (aspect == mapping->application) return kApplication;
  }
  return "aspect" + std::to_string(aspect);
}

struct Training {
  std::vector<TypedPhrase> typed;  // input order
  std::vector<std::pair<std::string, double>> discarded;
  json manifest = json::object();
  std::vector<json> checkpoints;   // one per trained slice
};

Training train_phrases(const std::vector<Phrase>& phrases, const PipelineConfig& config, std::ostream& log) {
  FeatureSpace space;
  std::vector<EncodedPhrase> encoded;
  encoded.reserve(phrases.size());
  for (const auto& p : phrases) encoded.push_back(space.encode(p));
  const auto dims = space.dims();

  std::vector<int> rp_ids;
  for (const auto& rp : config.indicative_relation_phrases) rp_ids.push_back(space.rel.find(join(split_ws(rp))));

  const bool domain_model = config.model == "domainphrasetype";
  PhraseTypeHyper ph = PhraseTypeHyper::defaults(config.n_aspects);
  ph.alpha = config.alpha_value();
  ph.beta_w = config.beta_w;
  ph.beta_l = config.beta_l;
  ph.beta_r = config.beta_r;
  DomainHyper dh = DomainHyper::defaults(config.n_aspects, config.n_domains);
  dh.alpha_aspect = config.alpha_value();
  dh.alpha_domain = config.alpha_domain_value();
  dh.beta_w = config.beta_w;
  dh.beta_l = config.beta_l;
  dh.beta_r = config.beta_r;
  dh.beta_v = config.beta_v;
  dh.omega = config.omega;
  dh.kappa = config.kappa;

  Training out;
  std::vector<std::optional<TypedPhrase>> typed(phrases.size());
  std::vector<std::optional<double>> dropped(phrases.size());
  out.manifest["model"] = config.model;
  out.manifest["n_aspects"] = config.n_aspects;
  out.manifest["n_domains"] = domain_model ? config.n_domains : 1;
  out.manifest["slices"] = json::array();
  SlicePriors priors;
  for (int t = 0; t < config.n_slices; ++t) {
    std::vector<int> members;
    for (std::size_t i = 0; i < phrases.size(); ++i)
      if (phrases[i].time_slice == t) members.push_back(static_cast<int>(i));
    json slice{{"slice", t}, {"phrases", members.size()}};
    if (members.empty()) {
      log << "warning: time slice " << t << " has no phrases; skipped\n";
      slice["checkpoint"] = nullptr;
      out.manifest["slices"].push_back(slice);
      continue;
    }
    std::vector<EncodedPhrase> part;
    part.reserve(members.size());
    for (int i : members) part.push_back(encoded[static_cast<std::size_t>(i)]);
    const auto seed = mix_seed(config.seed, static_cast<std::uint64_t>(t));

    TypingResult typing;
    std::optional<AspectMapping> mapping;
    if (domain_model) {
      auto model = gibbs_init_domain(part, dims, dh, seed, priors);
      for (int it = 0; it < config.typing_iterations; ++it) gibbs_sweep_domain(model, part);
      typing = assign_and_filter_domain(model, part, config.discard_threshold);
      if (config.n_aspects == 2) mapping = choose_mapping(model, rp_ids);
      priors = build_slice_prior(model, dh);
      out.checkpoints.push_back(to_json(model));
    } else {
      auto model = gibbs_init(part, dims, ph, seed, priors.words, priors.sig);
      for (int it = 0; it < config.typing_iterations; ++it) gibbs_sweep(model, part);
      typing = assign_and_filter(model, part, config.discard_threshold);
      if (config.n_aspects == 2) mapping = choose_mapping(model, rp_ids);
      priors = build_slice_prior(model, config.omega, config.kappa);
      out.checkpoints.push_back(to_json(model));
    }
    if (mapping && mapping->tie)
      log << "warning: slice " << t << ": aspect mapping is a tie; defaulting to aspect 0 = Technique\n";

    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& ty = typing.typings[k];
      const auto i = static_cast<std::size_t>(members[k]);
      if (!ty.kept) {
        dropped[i] = ty.max_prob;
        continue;
      }
      TypedPhrase tp;
      tp.phrase = phrases[i];
      tp.phrase.aspect = ty.aspect;
      if (domain_model) tp.phrase.domain = ty.domain;
      tp.aspect = aspect_label(ty.aspect, mapping);
      if (domain_model) tp.domain = ty.domain;
      tp.confidence = ty.max_prob;
      typed[i] = std::move(tp);
    }
    slice["checkpoint"] = "model_slice" + std::to_string(t) + ".json";
    slice["kept"] = typing.kept.size();
    slice["discarded"] = typing.discarded.size();
    if (mapping) {
      slice["mapping"] = {{"technique", mapping->technique},
                          {"application", mapping->application},
                          {"tie", mapping->tie},
                          {"objective", mapping->objective},
                          {"objective_alternative", mapping->objective_alternative}};
    } else {
      slice["mapping"] = nullptr;
    }
    out.manifest["slices"].push_back(slice);
    log << "slice " << t << ": " << members.size() << " phrases, " << typing.kept.size() << " kept, "
        << typing.discarded.size() << " discarded\n";
  }
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (typed[i]) out.typed.push_back(std::move(*typed[i]));
    if (dropped[i]) out.discarded.emplace_back(phrases[i].key(), *dropped[i]);
  }
  out.manifest["features"] = space.to_json();
  return out;
}

ExtractionOptions extraction_options(const PipelineConfig& config, int iterations) {
  ExtractionOptions options;
  options.iterations = iterations;
  options.seed = config.seed;
  return options;
}

std::vector<TypedConceptMention> in_input_order(const ExtractionResult& result, const std::vector<TypedPhrase>& typed) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < typed.size(); ++i) position[typed[i].phrase.key()] = i;
  auto mentions = result.mentions();
  std::stable_sort(mentions.begin(), mentions.end(), [&](const auto& x, const auto& y) {
    return position.at(x.doc_id + ":" + std::to_string(x.span.begin)) <
           position.at(y.doc_id + ":" + std::to_string(y.span.begin));
  });
  return mentions;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (model != "phrasetype" && model != "domainphrasetype")
    fail("model must be 'phrasetype' or 'domainphrasetype', got '" + model + "'");
  if (n_aspects < 1) fail("n_aspects must be >= 1");
  if (n_domains < 1) fail("n_domains must be >= 1");
  if (n_slices < 1) fail("n_slices must be >= 1");
  if (typing_iterations < 1) fail("typing_iterations must be >= 1");
  if (grammar_iterations < 1) fail("grammar_iterations must be >= 1");
  if (!(discard_threshold >= 0.0 && discard_threshold <= 1.0)) fail("discard_threshold must lie in [0, 1]");
  if (min_support < 1) fail("min_support must be >= 1");
  if (!std::isfinite(significance)) fail("significance must be finite");
  if (!std::isfinite(pmi_threshold)) fail("pmi_threshold must be finite");
  if (!(idf_min >= 0.0)) fail("idf_min must be >= 0");
  if (jobs < 1) fail("jobs must be >= 1");
  if (output_dir.empty()) fail("output_dir must not be empty");
  if (indicative_relation_phrases.empty()) fail("indicative_relation_phrases must not be empty");
  if (!(grammar_alpha > 0)) fail("grammar_alpha must be > 0");
  if (bench_typing_iterations < 1 || bench_grammar_iterations < 1) fail("bench iteration counts must be >= 1");
  try {
    parse_grammar_variant(grammar);
    PitmanYor{pyp_a, pyp_b}.validate();
    auto ph = PhraseTypeHyper::defaults(n_aspects);
    ph.alpha = alpha_value();
    ph.beta_w = beta_w;
    ph.beta_l = beta_l;
    ph.beta_r = beta_r;
    ph.validate();
    auto dh = DomainHyper::defaults(n_aspects, n_domains);
    dh.alpha_aspect = alpha_value();
    dh.alpha_domain = alpha_domain_value();
    dh.beta_w = beta_w;
    dh.beta_l = beta_l;
    dh.beta_r = beta_r;
    dh.beta_v = beta_v;
    dh.omega = omega;
    dh.kappa = kappa;
    dh.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, value);
  }
  return c;
}

json to_json(const PipelineConfig& c) {
  json j;
  j["corpus"] = c.corpus;
  j["gold"] = c.gold;
  j["output_dir"] = c.output_dir;
  j["model"] = c.model;
  j["n_aspects"] = c.n_aspects;
  j["n_domains"] = c.n_domains;
  j["n_slices"] = c.n_slices;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["alpha_domain"] = c.alpha_domain ? json(*c.alpha_domain) : json(nullptr);
  j["beta_w"] = c.beta_w;
  j["beta_l"] = c.beta_l;
  j["beta_r"] = c.beta_r;
  j["beta_v"] = c.beta_v;
  j["omega"] = c.omega;
  j["kappa"] = c.kappa;
  j["typing_iterations"] = c.typing_iterations;
  j["discard_threshold"] = c.discard_threshold;
  j["indicative_relation_phrases"] = c.indicative_relation_phrases;
  j["min_support"] = c.min_support;
  j["significance"] = c.significance;
  j["pmi_threshold"] = c.pmi_threshold;
  j["idf_min"] = c.idf_min;
  j["grammar"] = c.grammar;
  j["grammar_file"] = c.grammar_file;
  j["grammar_alpha"] = c.grammar_alpha;
  j["pyp_a"] = c.pyp_a;
  j["pyp_b"] = c.pyp_b;
  j["grammar_iterations"] = c.grammar_iterations;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["bench_sizes"] = c.bench_sizes;
  j["bench_typing_iterations"] = c.bench_typing_iterations;
  j["bench_grammar_iterations"] = c.bench_grammar_iterations;
  return j;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(config, value);
}

Grammar resolve_grammar(const PipelineConfig& config) {
  try {
    if (!config.grammar_file.empty()) return load_grammar(config.grammar_file);
    const auto variant = parse_grammar_variant(config.grammar);
    std::string text(default_grammar_text(variant));
    std::ostringstream extra;
    extra.precision(17);
    extra << "\nprior " << config.grammar_alpha << "\n";
    const auto base = default_grammar(variant);
    for (const auto& [nt, params] : base.adaptors())
      extra << "adapt " << base.nonterminal_name(nt) << " a=" << config.pyp_a << " b=" << config.pyp_b << "\n";
    return parse_grammar(text + extra.str());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grammar: ") + e.what());
  }
}

int cmd_segment(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  if (config.corpus.empty()) throw ConfigError("no corpus configured");
  auto loaded = load_corpus(fs::path(config.corpus));
  for (const auto& e : loaded.errors) log << "warning: " << config.corpus << ":" << e.line << ": " << e.message << "\n";
  auto& docs = loaded.documents;
  if (docs.empty()) throw InputError("corpus " + config.corpus + " has no valid documents");
  if (config.n_slices > static_cast<int>(docs.size()))
    throw ConfigError("n_slices (" + std::to_string(config.n_slices) + ") exceeds the number of documents (" +
                      std::to_string(docs.size()) + ")");
  partition_time_slices(docs, config.n_slices);
  const auto phrases = segment_documents(docs, config);
  prepare_output(config);
  write_text(config.out("phrases.jsonl"), to_jsonl(phrases));
  log << "segment: " << docs.size() << " documents, " << phrases.size() << " phrases -> "
      << config.out("phrases.jsonl").string() << "\n";
  return static_cast<int>(phrases.size());
}

int cmd_train(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  const auto phrases = read_jsonl<Phrase>(config.out("phrases.jsonl"), "run 'segment' first",
                                          [](const json& j) { return phrase_from_json(j); });
  if (phrases.empty()) throw InputError("no phrases in " + config.out("phrases.jsonl").string());
  for (const auto& p : phrases)
    if (p.time_slice < 0 || p.time_slice >= config.n_slices)
      throw ConfigError("phrase " + p.key() + " is in time slice " + std::to_string(p.time_slice) +
                        " but n_slices is " + std::to_string(config.n_slices) + "; rerun 'segment'");
  auto training = train_phrases(phrases, config, log);
  prepare_output(config);
  std::size_t k = 0;
  for (const auto& slice : training.manifest["slices"]) {
    if (slice["checkpoint"].is_null()) continue;
    write_text(config.out(slice["checkpoint"].get<std::string>()), training.checkpoints[k++].dump() + "\n");
  }
  write_text(config.out("features.json"), training.manifest["features"].dump() + "\n");
  training.manifest.erase("features");
  write_text(config.out("mapping.json"), training.manifest.dump(2) + "\n");
  write_text(config.out("typed.jsonl"), to_jsonl(training.typed));
  std::string discarded = "phrase\tmax_prob\n";
  for (const auto& [key, prob] : training.discarded) discarded += key + "\t" + json(prob).dump() + "\n";
  write_text(config.out("discarded.tsv"), discarded);
  log << "train: " << training.typed.size() << " typed, " << training.discarded.size() << " discarded\n";
  return static_cast<int>(training.typed.size());
}

int cmd_extract(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  const auto manifest = read_json(config.out("mapping.json"), "run 'train' first");
  const auto typed = read_jsonl<TypedPhrase>(config.out("typed.jsonl"), "run 'train' first",
                                             [](const json& j) { return typed_phrase_from_json(j); });
  const auto grammar = resolve_grammar(config);
  prepare_output(config);

  ExtractionResult result;
  std::vector<TypedConceptMention> mentions;
  if (typed.empty()) {
    log << "warning: no kept phrases; writing empty outputs\n";
  } else {
    result = extract_all(typed, grammar, extraction_options(config, config.grammar_iterations), config.jobs);
    mentions = in_input_order(result, typed);
    for (const auto& p : result.partitions)
      if (p.sparse)
        log << "warning: partition " << p.aspect << (p.domain ? "/d" + std::to_string(*p.domain) : "") << " has only "
            << p.phrases << " phrases\n";
  }
  write_text(config.out("mentions.jsonl"), to_jsonl(mentions));

  std::ostringstream concepts;
  write_concepts_tsv(concepts, build_reports(mentions));
  write_text(config.out("concepts.tsv"), concepts.str());

  std::ostringstream coverage;
  write_coverage_tsv(coverage, result);
  write_text(config.out("coverage.tsv"), coverage.str());

  std::string excluded = "phrase\treason\n";
  for (const auto& p : result.partitions)
    for (const auto& e : p.excluded) excluded += e.key + "\t" + e.reason + "\n";
  write_text(config.out("excluded.tsv"), excluded);

  if (manifest.value("model", std::string()) == "domainphrasetype") {
    const auto features = FeatureSpace::from_json(read_json(config.out("features.json"), "run 'train' first"));
    const int n_domains = manifest.at("n_domains").get<int>();
    std::vector<std::vector<int>> venue_counts(static_cast<std::size_t>(n_domains),
                                               std::vector<int>(static_cast<std::size_t>(features.venues.size()), 0));
    double beta_v = config.beta_v;
    for (const auto& slice : manifest.at("slices")) {
      if (slice.at("checkpoint").is_null()) continue;
      const auto model = domain_model_from_json(
          read_json(config.out(slice.at("checkpoint").get<std::string>()), "missing checkpoint; rerun 'train'"));
      if (model.hyper.n_domains != n_domains || model.dims.venues != features.venues.size())
        throw InputError("checkpoint " + slice.at("checkpoint").get<std::string>() + " does not match features.json");
      beta_v = model.hyper.beta_v;
      for (int d = 0; d < n_domains; ++d)
        for (int v = 0; v < features.venues.size(); ++v)
          venue_counts[static_cast<std::size_t>(d)][static_cast<std::size_t>(v)] += model.n_v(d, v);
    }
    std::ostringstream domains;
    write_domains_tsv(domains, build_domain_summaries(mentions, venue_counts, features.venues.names(), beta_v));
    write_text(config.out("domains.tsv"), domains.str());
  }
  log << "extract: " << mentions.size() << " mentions from " << typed.size() << " typed phrases\n";
  return static_cast<int>(mentions.size());
}

EvaluationReport cmd_evaluate(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  if (config.gold.empty()) throw ConfigError("no gold file configured");
  const auto mentions = read_jsonl<TypedConceptMention>(config.out("mentions.jsonl"), "run 'extract' first",
                                                        [](const json& j) { return mention_from_json(j); });
  const auto gold = load_gold(fs::path(config.gold));
  std::optional<std::set<std::string>> docs;
  if (fs::exists(config.out("phrases.jsonl"))) {
    docs.emplace();
    for (const auto& p : read_jsonl<Phrase>(config.out("phrases.jsonl"), "",
                                            [](const json& j) { return phrase_from_json(j); }))
      docs->insert(p.doc_id);
  }
  const auto predicted = to_eval(mentions);
  EvaluationReport report;
  report.concept_quality = concept_quality(predicted, gold, docs ? &*docs : nullptr);
  report.typed = typed_quality(predicted, gold, docs ? &*docs : nullptr);
  json j{{"concept_quality", to_json(report.concept_quality)}, {"typed", to_json(report.typed)}};
  prepare_output(config);
  write_text(config.out("metrics.json"), j.dump(2) + "\n");
  const auto table = format_metrics_table(report.concept_quality, report.typed);
  write_text(config.out("metrics.txt"), table);
  log << table;
  return report;
}

void cmd_report(const PipelineConfig& config, std::ostream& out, int top) {
  const auto mentions = read_jsonl<TypedConceptMention>(config.out("mentions.jsonl"), "run 'extract' first",
                                                        [](const json& j) { return mention_from_json(j); });
  const auto reports = build_reports(mentions);
  std::map<std::string, int> by_aspect;
  for (const auto& m : mentions) ++by_aspect[m.aspect];
  out << mentions.size() << " mentions, " << reports.size() << " distinct concepts\n";
  for (const auto& [aspect, n] : by_aspect) out << "  " << aspect << ": " << n << "\n";
  out << "\ntop concepts\n";
  int shown = 0;
  for (const auto& r : reports) {
    if (shown++ == top) break;
    std::string mods;
    for (std::size_t k = 0; k < r.modifiers.size() && k < 3; ++k)
      mods += (k ? ", " : "") + r.modifiers[k].text + " (" + std::to_string(r.modifiers[k].count) + ")";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%6d  ", r.mentions);
    out << buf << r.concept_text;
    if (!mods.empty()) out << "  [" << mods << "]";
    out << "\n";
  }
  if (fs::exists(config.out("domains.tsv"))) out << "\ndomains\n" << read_text(config.out("domains.tsv"), "");
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_linear: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_linear: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

std::vector<BenchRow> cmd_bench(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  if (config.bench_sizes.empty()) throw ConfigError("bench_sizes must not be empty");
  for (int s : config.bench_sizes)
    if (s < 10) throw ConfigError("bench sizes must be >= 10 phrases");
  const auto grammar = resolve_grammar(config);
  PipelineConfig train_config = config;
  train_config.model = "phrasetype";
  train_config.n_slices = 1;
  train_config.typing_iterations = config.bench_typing_iterations;

  constexpr double kPhrasesPerDoc = 1.3;
  std::vector<BenchRow> rows;
  for (int target : config.bench_sizes) {
    BenchRow row;
    row.target = target;
    synthetic::TitleSpec spec;
    spec.n_docs = std::max(1, static_cast<int>(std::lround(target / kPhrasesPerDoc)));
    spec.seed = config.seed;
    // Split rates drift with corpus size, so rescale the title count until
    // segmentation lands within 5% of the requested phrase count.
    std::vector<Document> docs;
    std::vector<Phrase> phrases;
    for (int attempt = 0;; ++attempt) {
      docs = synthetic::titles(spec);
      auto start = std::chrono::steady_clock::now();
      phrases = segment_documents(docs, config);
      row.segment_s = seconds_since(start);
      const double ratio = static_cast<double>(target) / std::max<std::size_t>(phrases.size(), 1);
      if (attempt == 3 || std::abs(ratio - 1.0) < 0.05) break;
      spec.n_docs = std::max(1, static_cast<int>(std::lround(spec.n_docs * ratio)));
    }
    row.docs = static_cast<int>(docs.size());
    row.phrases = static_cast<int>(phrases.size());

    auto start = std::chrono::steady_clock::now();
    std::ostringstream quiet;
    auto training = train_phrases(phrases, train_config, quiet);
    row.train_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    if (!training.typed.empty())
      extract_all(training.typed, grammar, extraction_options(config, config.bench_grammar_iterations), config.jobs);
    row.extract_s = seconds_since(start);
    log << "bench: " << row.phrases << " phrases  segment " << row.segment_s << "s  train " << row.train_s
        << "s  extract " << row.extract_s << "s\n";
    rows.push_back(row);
  }

  std::string csv = "target_phrases,phrases,docs,segment_s,train_s,extract_s,total_s\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.6f,%.6f,%.6f\n", r.target, r.phrases, r.docs, r.segment_s,
                  r.train_s, r.extract_s, r.total_s());
    csv += buf;
  }
  prepare_output(config);
  write_text(config.out("bench.csv"), csv);

  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.phrases);
    y.push_back(r.total_s());
  }
  json fit_json{{"points", rows.size()}};
  if (std::set<double>(x.begin(), x.end()).size() >= 2) {
    const auto fit = fit_linear(x, y);
    fit_json["slope_s_per_phrase"] = fit.slope;
    fit_json["intercept_s"] = fit.intercept;
    fit_json["r2"] = fit.r2;
    log << "bench: runtime = " << fit.slope << " * phrases + " << fit.intercept << "  (R^2 = " << fit.r2 << ")\n";
  } else {
    fit_json["r2"] = nullptr;
    log << "bench: need two distinct sizes for a linear fit\n";
  }
  write_text(config.out("bench_fit.json"), fit_json.dump(2) + "\n");
  return rows;
}

void cmd_run(const PipelineConfig& config, std::ostream& log) {
  cmd_segment(config, log);
  cmd_train(config, log);
  cmd_extract(config, log);
  if (!config.gold.empty()) cmd_evaluate(config, log);
}

}  // namespace conceptx
