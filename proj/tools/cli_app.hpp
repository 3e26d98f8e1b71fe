#pragma once

// socorient command line. run_cli() is the whole program so tests can drive
// it in-process; main.cpp only forwards argv.
//
// Exit codes: 0 ok, 1 usage/config, 2 data, 3 tagging/transport,
// 4 training, 5 analysis.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/eval.hpp"
#include "socorient/explain.hpp"
#include "socorient/features.hpp"
#include "socorient/model.hpp"
#include "socorient/parallel.hpp"
#include "socorient/rng.hpp"
#include "socorient/synthetic.hpp"
#include "socorient/tagging/cache.hpp"
#include "socorient/tagging/lexicon.hpp"
#include "socorient/tagging/prompt.hpp"
#include "socorient/tagging/remote.hpp"
#include "socorient/text.hpp"

namespace socorient::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kTagging = 3,
  kTraining = 4,
  kAnalysis = 5,
};

/// Configuration problem detected before any side effect.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 42;
  std::size_t workers = 1;
};

// --- flat config file -------------------------------------------------------

/// key = value lines; '#' starts a comment. Keys are long option names.
inline std::vector<std::pair<std::string, std::string>> parse_flat_config(std::string_view s) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(s, '\n')) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(text::trim(line.substr(0, eq)));
    std::string value(text::trim(line.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

/// Returns args with config-file settings added for every option the
/// command line did not set (flags > file > defaults).
inline std::vector<std::string> merge_config(const CLI::App& sub, std::vector<std::string> args,
                                             const std::string& config_path) {
  if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
  auto on_command_line = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : parse_flat_config(text::read_file(config_path))) {
    if (key == "config") throw UsageError("config files cannot include other config files");
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown config key '" + key + "' for command " + sub.get_name());
    if (on_command_line(key)) continue;
    if (opt->get_items_expected_max() == 0) {
      const auto v = text::to_lower_ascii(value);
      if (v == "true" || v == "1" || v == "yes" || v == "on") {
        extra.push_back("--" + key);
      } else if (!(v == "false" || v == "0" || v == "no" || v == "off")) {
        throw UsageError("config key '" + key + "' expects a boolean");
      }
    } else {
      extra.push_back("--" + key + "=" + value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// --- manifest -----------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

inline std::string file_digest(const std::string& path) {
  return "fnv1a64:" + hex64(fnv1a64(text::read_file(path)));
}

/// Effective option values (command line, else config, else default),
/// sorted by name. --config itself is excluded.
inline std::map<std::string, std::string> effective_options(const CLI::App& sub) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "config" || names.front() == "help" ||
        names.front() == "help-all") {
      continue;
    }
    std::string v;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) v += (i ? "," : "") + res[i];
      if (opt->get_items_expected_max() == 0) v = "true";
    } else {
      v = opt->get_items_expected_max() == 0 ? "false" : opt->get_default_str();
    }
    out[names.front()] = v;
  }
  return out;
}

class Manifest {
 public:
  Manifest(std::string command, const CLI::App& sub, const Common& common)
      : command_(std::move(command)), options_(effective_options(sub)), common_(common) {}

  void input(const std::string& path) { inputs_[path] = file_digest(path); }
  void output(const std::string& name) { outputs_.insert(name); }
  void seed(const std::string& role, std::uint64_t s) { seeds_[role].push_back(s); }
  void note(const std::string& key, nlohmann::ordered_json v) { notes_[key] = std::move(v); }

  void write() const {
    std::string canon;
    for (const auto& [k, v] : options_) canon += k + "=" + v + "\n";
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["config_hash"] = "fnv1a64:" + hex64(fnv1a64(canon));
    j["options"] = options_;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    seeds["run"] = common_.seed;
    for (const auto& [role, list] : seeds_) seeds[role] = list;
    j["seeds"] = seeds;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    if (!notes_.empty()) j["notes"] = notes_;
    text::write_file_atomic((fs::path(common_.out_dir) / "manifest.json").string(),
                            j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::map<std::string, std::string> options_;
  const Common& common_;
  std::map<std::string, std::string> inputs_;
  std::set<std::string> outputs_;
  std::map<std::string, std::vector<std::uint64_t>> seeds_;
  nlohmann::ordered_json notes_ = nlohmann::ordered_json::object();
};

// --- helpers ----------------------------------------------------------------------

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

inline std::string out_path(const Common& c, const std::string& name) {
  return (fs::path(c.out_dir) / name).string();
}

inline void prepare_out_dir(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create output directory " + c.out_dir);
}

inline void emit(const Common& c, Manifest& m, const std::string& name, std::string_view contents) {
  text::write_file_atomic(out_path(c, name), contents);
  m.output(name);
}

inline tagging::TagIndex load_tags(const std::string& path) { return tagging::cache_load(path).tags; }

inline void validate_fractions(const std::vector<double>& fractions) {
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("fractions must lie in (0, 1]");
  }
  std::set<double> uniq(fractions.begin(), fractions.end());
  if (uniq.size() != fractions.size()) throw UsageError("fractions must be unique");
}

inline void validate_seeds(const std::vector<std::uint64_t>& seeds) {
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (seeds.empty() || uniq.size() != seeds.size()) throw UsageError("seeds must be unique");
}

/// Ensures the corpus has Train and Test conversations; assigns a stratified
/// split when none is present.
inline Corpus with_splits(const Corpus& c, double test_fraction, std::uint64_t seed) {
  const bool has_train = std::any_of(c.begin(), c.end(), [](auto& x) { return x.split == Split::Train; });
  const bool has_test = std::any_of(c.begin(), c.end(), [](auto& x) { return x.split == Split::Test; });
  if (has_train && has_test) return c;
  return corpus::assign_splits(c, test_fraction, 0.0, seed);
}

inline Split parse_split(const std::string& s) {
  auto v = split_from_name(s);
  if (!v) throw UsageError("unknown split '" + s + "'");
  return *v;
}

inline features::FeaturePipeline pipeline_for_model(const model::LogisticModel& m,
                                                    const std::string& vocab_path) {
  features::FeaturePipeline p(features::parse_feature_set(m.schema_id));
  if (p.needs_fit()) {
    if (vocab_path.empty()) throw UsageError("model uses tfidf features; --vocab is required");
    p.set_vocab(features::parse_vocab(text::read_file(vocab_path)));
  }
  if (p.schema().dimension() != m.dim()) {
    throw Error(Errc::CorruptModel, "model dimension does not match its feature recipe");
  }
  return p;
}

// --- commands ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string format{corpus::kConvoJsonl};
  bool keyword_toxicity = false;
  bool derive_context = false;
  bool drop_final_turn = false;
  bool filter = false;
  std::size_t min_speakers = 2;
  std::size_t min_turns = 1;
  bool pair_balanced = false;
  double test_fraction = 0.0;
  double val_fraction = 0.0;
};

inline int cmd_ingest(const IngestArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.input, "--input");
  if (a.format != corpus::kConvoJsonl) throw UsageError("unsupported --format '" + a.format + "'");
  if (a.test_fraction < 0 || a.val_fraction < 0 || a.test_fraction + a.val_fraction >= 1.0) {
    throw UsageError("--test-fraction + --val-fraction must be in [0, 1)");
  }
  Manifest m("ingest", sub, c);
  m.input(a.input);
  Corpus corpus = corpus::load_corpus(a.input, a.format);
  const std::size_t n_loaded = corpus.size();

  std::vector<Conversation> convs(corpus.begin(), corpus.end());
  if (a.keyword_toxicity) {
    corpus::KeywordToxicityDetector det;
    for (auto& conv : convs) conv = det.annotate(conv);
  }
  std::size_t n_no_context = 0;
  if (a.derive_context) {
    std::vector<Conversation> kept;
    for (const auto& conv : convs) {
      try {
        kept.push_back(corpus::derive_context_and_label(conv));
      } catch (const Error& e) {
        if (e.code() != Errc::EmptyContext) throw;
        ++n_no_context;
      }
    }
    convs = std::move(kept);
  }
  std::size_t n_too_short = 0;
  if (a.drop_final_turn) {
    std::vector<Conversation> kept;
    for (const auto& conv : convs) {
      try {
        kept.push_back(corpus::drop_final_turn(conv));
      } catch (const Error& e) {
        if (e.code() != Errc::TooShort) throw;
        ++n_too_short;
      }
    }
    convs = std::move(kept);
  }
  corpus = Corpus(corpus.id(), std::move(convs));
  if (a.filter) corpus = corpus::filter_candidates(corpus, a.min_speakers, a.min_turns);

  std::optional<corpus::PairingResult> pairing;
  if (a.pair_balanced) {
    std::vector<Conversation> toxic, pool;
    for (const auto& conv : corpus) {
      if (conv.outcome == Outcome::Failure) toxic.push_back(conv);
      if (conv.outcome == Outcome::Success) pool.push_back(conv);
    }
    pairing = corpus::pair_balanced(toxic, pool, c.seed);
    m.seed("pairing", c.seed);
    std::vector<Conversation> paired;
    for (const auto& [t, s] : pairing->pairs) {
      paired.push_back(t);
      paired.push_back(s);
    }
    corpus = Corpus(corpus.id(), std::move(paired));
  }
  if (a.test_fraction > 0.0 || a.val_fraction > 0.0) {
    corpus = corpus::assign_splits(corpus, a.test_fraction, a.val_fraction, c.seed);
    m.seed("splits", c.seed);
  }

  prepare_out_dir(c);
  emit(c, m, "corpus.jsonl", corpus::serialize_corpus(corpus));
  std::string summary = "key,value\n";
  summary += "loaded," + std::to_string(n_loaded) + "\n";
  if (a.derive_context) summary += "dropped_empty_context," + std::to_string(n_no_context) + "\n";
  if (a.drop_final_turn) summary += "dropped_too_short," + std::to_string(n_too_short) + "\n";
  if (pairing) {
    summary += "pairs," + std::to_string(pairing->pairs.size()) + "\n";
    summary += "dropped_unpaired," + std::to_string(pairing->dropped) + "\n";
  }
  summary += "conversations," + std::to_string(corpus.size()) + "\n";
  for (auto o : {Outcome::Success, Outcome::Failure, Outcome::Unlabeled}) {
    summary += std::string(outcome_name(o)) + "," + std::to_string(corpus.count(o)) + "\n";
  }
  emit(c, m, "ingest_summary.csv", summary);
  m.write();
  out << summary;
  return kOk;
}

struct TagArgs {
  std::string corpus;
  std::string backend = "lexicon";
  std::string endpoint;
  std::string model = "gpt-4-0314";
  double temperature = 0.4;
  std::size_t context_window = 2;
  std::size_t max_chunk_chars = 12000;
  std::string cache;  // for backend=cache: an existing cache to copy from
  bool dry_run_prompts = false;
  std::size_t timeout_ms = 60000;
};

/// Keeps only whole lines of a partially written cache.
inline std::string complete_lines(const std::string& s) {
  const auto nl = s.rfind('\n');
  return nl == std::string::npos ? std::string() : s.substr(0, nl + 1);
}

inline int cmd_tag(const TagArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.corpus, "--corpus");
  static const std::set<std::string> kBackends{"lexicon", "remote", "llm", "cache"};
  if (!kBackends.contains(a.backend)) throw UsageError("unknown --backend '" + a.backend + "'");
  if ((a.backend == "remote" || a.backend == "llm") && !a.dry_run_prompts) {
    if (a.endpoint.empty()) throw UsageError("--endpoint is required for backend " + a.backend);
    http::parse_endpoint(a.endpoint);
  }
  if (a.backend == "cache") require_file(a.cache, "--cache");
  tagging::TaggerConfig tcfg;
  tcfg.temperature = a.temperature;
  tcfg.context_window = a.context_window;
  tcfg.max_chunk_chars = a.max_chunk_chars;
  if (!a.endpoint.empty()) tcfg.endpoint = a.endpoint;
  tcfg.client.read_timeout = std::chrono::milliseconds(a.timeout_ms);
  tcfg.client.connect_timeout = std::chrono::milliseconds(std::min<std::size_t>(a.timeout_ms, 5000));
  try {
    tcfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  Manifest m("tag", sub, c);
  m.input(a.corpus);
  const Corpus corpus = corpus::load_corpus(a.corpus);

  if (a.dry_run_prompts) {
    prepare_out_dir(c);
    const fs::path dir = fs::path(c.out_dir) / "prompts";
    fs::create_directories(dir);
    std::size_t n = 0;
    for (const auto& conv : corpus) {
      const auto prompts = tagging::prompts_for(conv, a.max_chunk_chars,
                                                tagging::default_definitions(),
                                                tagging::default_fewshot());
      for (std::size_t k = 0; k < prompts.size(); ++k) {
        const std::string name = conv.id + "." + std::to_string(k) + ".txt";
        text::write_file_atomic((dir / name).string(), prompts[k]);
        m.output("prompts/" + name);
        ++n;
      }
    }
    m.note("prompt_template", std::string(tagging::assets::kPromptTemplateVersion));
    m.write();
    out << "wrote " << n << " prompts\n";
    return kOk;
  }

  std::function<std::vector<TagAssignment>(const Conversation&)> tagger;
  std::optional<tagging::TagIndex> source;
  tagging::LlmConfig llm;
  if (a.backend == "lexicon") {
    tagger = [](const Conversation& conv) { return tagging::tag_with_lexicon(conv); };
  } else if (a.backend == "remote") {
    tagger = [&](const Conversation& conv) { return tagging::tag_with_remote(conv, tcfg); };
  } else if (a.backend == "llm") {
    llm.endpoint = a.endpoint;
    llm.model = a.model;
    llm.temperature = a.temperature;
    llm.max_chunk_chars = a.max_chunk_chars;
    llm.client = tcfg.client;
    if (const char* key = std::getenv("OPENAI_API_KEY"); key && *key) llm.api_key = key;
    tagger = [&](const Conversation& conv) {
      return tagging::tag_with_llm(conv, llm, tagging::default_definitions(),
                                   tagging::default_fewshot());
    };
  } else {
    m.input(a.cache);
    source = load_tags(a.cache);
    tagger = [&](const Conversation& conv) { return source->for_conversation(conv); };
  }

  prepare_out_dir(c);
  const std::string final_path = out_path(c, "tags.jsonl");
  const std::string partial_path = final_path + ".partial";

  // Resume: reuse whatever a previous interrupted run flushed.
  tagging::TagIndex done;
  if (fs::exists(partial_path)) {
    const std::string kept = complete_lines(text::read_file(partial_path));
    auto cached = tagging::parse_tag_cache(kept);
    if (!cached.corpus_id.empty() && cached.corpus_id != corpus.id()) {
      throw Error(Errc::CorruptCache, "partial cache belongs to corpus '" + cached.corpus_id + "'");
    }
    done = std::move(cached.tags);
  }
  std::size_t resumed = 0;
  std::vector<const Conversation*> todo;
  tagging::TagIndex covered;
  for (const auto& conv : corpus) {
    if (done.find(conv.id) && done.covers(conv)) {
      ++resumed;
      covered.set(conv.id, done.for_conversation(conv));
    } else {
      todo.push_back(&conv);
    }
  }
  // Half-written conversations are retagged from scratch.
  if (fs::exists(partial_path)) {
    text::write_file_atomic(partial_path, tagging::serialize_tag_cache(corpus.id(), covered));
  }
  done = std::move(covered);

  {
    tagging::TagCacheWriter writer(partial_path, corpus.id());
    const std::size_t batch = std::max<std::size_t>(1, c.workers);
    for (std::size_t start = 0; start < todo.size(); start += batch) {
      const std::size_t n = std::min(batch, todo.size() - start);
      std::vector<std::optional<std::vector<TagAssignment>>> results(n);
      std::vector<std::exception_ptr> errors(n);
      parallel_for(n, c.workers, [&](std::size_t i) {
        try {
          results[i] = tagger(*todo[start + i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        writer.append(todo[start + i]->id, *results[i]);
        done.set(todo[start + i]->id, std::move(*results[i]));
      }
    }
  }

  // Final cache in corpus order, independent of resume history.
  tagging::TagIndex ordered;
  std::array<std::size_t, kSocialTagCount> hist{};
  for (const auto& conv : corpus) {
    auto tags = done.for_conversation(conv);
    for (const auto& t : tags) ++hist[index_of(t.tag)];
    ordered.set(conv.id, std::move(tags));
  }
  tagging::cache_store(corpus.id(), ordered, final_path);
  m.output("tags.jsonl");
  fs::remove(partial_path);

  std::string summary = "tag,count\n";
  for (auto t : kSocialTags) {
    summary += std::string(tag_name(t)) + "," + std::to_string(hist[index_of(t)]) + "\n";
  }
  emit(c, m, "tag_summary.csv", summary);
  m.note("backend", a.backend);
  m.note("resumed_conversations", resumed);
  m.write();
  out << "tagged " << corpus.size() << " conversations (" << resumed << " resumed)\n";
  return kOk;
}

struct TrainArgs {
  std::string corpus;
  std::string tags;
  std::string features{features::kSocialSchema};
  std::string split = "train";
  double learning_rate = 0.1;
  std::size_t max_epochs = 2000;
  double l2 = 1e-4;
  double tolerance = 1e-7;
  bool no_class_weights = false;
  bool export_features = false;
};

inline eval::TrainingRecipe recipe_from(const TrainArgs& a) {
  eval::TrainingRecipe r;
  try {
    r.features = features::parse_feature_set(a.features);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  r.train.learning_rate = a.learning_rate;
  r.train.max_epochs = a.max_epochs;
  r.train.l2_penalty = a.l2;
  r.train.tolerance = a.tolerance;
  r.class_weighted = !a.no_class_weights;
  try {
    r.train.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return r;
}

inline int cmd_train(const TrainArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.corpus, "--corpus");
  require_file(a.tags, "--tags");
  const auto recipe = recipe_from(a);
  const Split split = parse_split(a.split);
  Manifest m("train", sub, c);
  m.input(a.corpus);
  m.input(a.tags);
  const Corpus all = corpus::load_corpus(a.corpus);
  const auto tags = load_tags(a.tags);
  Corpus train = corpus::select_labeled(corpus::select_split(all, split));
  if (train.empty()) throw Error(Errc::EmptyCorpus, "no labeled conversations in split " + a.split);

  const auto predictor = eval::fit_logistic(train, tags, recipe, c.seed);
  m.seed("train", c.seed);
  prepare_out_dir(c);
  emit(c, m, "model.txt", model::serialize_model(predictor.model()));
  features::FeaturePipeline pipeline(recipe.features);
  pipeline.fit(train);
  if (pipeline.needs_fit()) emit(c, m, "vocab.csv", features::serialize_vocab(*pipeline.vocab()));
  if (a.export_features) {
    std::vector<features::FeatureVector> rows;
    std::vector<const Conversation*> convs;
    for (const auto& conv : train) {
      rows.push_back(pipeline.transform(conv, tags.for_conversation(conv)));
      convs.push_back(&conv);
    }
    emit(c, m, "features.csv", features::feature_matrix_csv(pipeline.schema(), convs, rows));
  }
  const double acc = eval::evaluate(predictor, train, tags);
  const auto& meta = predictor.model().train_meta;
  std::string summary = "key,value\n";
  summary += "n_train," + std::to_string(train.size()) + "\n";
  summary += "epochs," + std::to_string(meta.epochs) + "\n";
  summary += "final_loss," + text::format_double(meta.final_loss) + "\n";
  summary += "train_accuracy," + text::format_fixed(acc, 6) + "\n";
  emit(c, m, "train_summary.csv", summary);
  m.write();
  out << summary;
  return kOk;
}

struct EvaluateArgs {
  std::string corpus;
  std::string tags;
  std::string model;
  std::string vocab;
  std::string split = "test";
  double threshold = 0.5;
};

inline int cmd_evaluate(const EvaluateArgs& a, const Common& c, const CLI::App& sub,
                        std::ostream& out) {
  require_file(a.corpus, "--corpus");
  require_file(a.tags, "--tags");
  require_file(a.model, "--model");
  if (!a.vocab.empty()) require_file(a.vocab, "--vocab");
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold must be in [0, 1]");
  const Split split = parse_split(a.split);
  Manifest m("evaluate", sub, c);
  for (const auto* p : {&a.corpus, &a.tags, &a.model}) m.input(*p);
  if (!a.vocab.empty()) m.input(a.vocab);

  auto lm = model::load_model(a.model);
  auto pipeline = pipeline_for_model(lm, a.vocab);
  const model::LogisticPredictor predictor(std::move(lm), std::move(pipeline), a.threshold);
  const Corpus test = corpus::select_labeled(corpus::select_split(corpus::load_corpus(a.corpus), split));
  if (test.empty()) throw Error(Errc::EmptyCorpus, "no labeled conversations in split " + a.split);
  const auto tags = load_tags(a.tags);
  const auto preds = eval::predict_all(predictor, test, tags);
  std::vector<Outcome> gold;
  std::string pred_csv = "conversation_id,outcome,probability_failure,predicted\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    gold.push_back(test[i].outcome);
    pred_csv += text::csv_field(test[i].id) + "," + std::string(outcome_name(test[i].outcome)) + "," +
                text::format_fixed(preds[i].probability_failure, 6) + "," +
                std::string(outcome_name(preds[i].label)) + "\n";
  }
  const double acc = eval::accuracy(preds, gold);
  std::string metrics = "metric,value\n";
  metrics += "accuracy," + text::format_fixed(acc, 6) + "\n";
  metrics += "n," + std::to_string(test.size()) + "\n";
  prepare_out_dir(c);
  emit(c, m, "metrics.csv", metrics);
  emit(c, m, "predictions.csv", pred_csv);
  m.write();
  out << metrics;
  return kOk;
}

struct AblateArgs {
  std::string corpus;
  std::string tags;
  std::vector<std::string> methods{std::string(features::kSocialSchema)};
  std::string baseline;
  std::vector<double> fractions = eval::default_fractions();
  std::vector<std::uint64_t> seeds = eval::default_seeds();
  double test_fraction = 0.2;
  TrainArgs train;  // hyperparameters only
};

inline int cmd_ablate(const AblateArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.corpus, "--corpus");
  require_file(a.tags, "--tags");
  validate_fractions(a.fractions);
  validate_seeds(a.seeds);
  if (a.methods.empty()) throw UsageError("--methods must name at least one method");
  std::vector<std::pair<std::string, eval::TrainingRecipe>> recipes;
  for (const auto& method : a.methods) {
    if (method == "majority") {
      recipes.emplace_back(method, eval::TrainingRecipe{});
      continue;
    }
    TrainArgs t = a.train;
    t.features = method;
    recipes.emplace_back(method, recipe_from(t));
  }
  if (!a.baseline.empty() &&
      std::find(a.methods.begin(), a.methods.end(), a.baseline) == a.methods.end()) {
    throw UsageError("--baseline must be one of --methods");
  }
  Manifest m("ablate", sub, c);
  m.input(a.corpus);
  m.input(a.tags);
  for (auto s : a.seeds) m.seed("ablation", s);

  const Corpus corpus = with_splits(corpus::select_labeled(corpus::load_corpus(a.corpus)),
                                    a.test_fraction, c.seed);
  const auto tags = load_tags(a.tags);
  std::vector<eval::AblationReport> parts;
  for (const auto& [method, recipe] : recipes) {
    auto trainer = method == "majority" ? eval::majority_trainer() : eval::logistic_trainer(tags, recipe);
    parts.push_back(eval::run_ablation(corpus, a.fractions, a.seeds, trainer, method, c.workers));
  }
  auto report = eval::merge_reports(parts);
  if (!a.baseline.empty()) eval::attach_p_values(report, a.baseline);
  prepare_out_dir(c);
  const auto csv = eval::ablation_csv(report);
  emit(c, m, "ablation.csv", csv);
  emit(c, m, "runs.csv", eval::runs_csv(report));
  emit(c, m, "ablation_band.csv", eval::band_csv(report));
  m.write();
  out << csv;
  return kOk;
}

struct TtestArgs {
  std::string a;
  std::string b;
  double fraction = -1.0;  // filter for runs.csv inputs
  std::string method;
};

/// One number per line, or a runs CSV (accuracy column, optional
/// fraction/method filters).
inline std::vector<double> read_samples(const std::string& path, double fraction,
                                        const std::string& method) {
  const auto lines = text::split(text::read_file(path), '\n');
  std::vector<double> out;
  if (!lines.empty() && lines[0].find("accuracy") != std::string::npos) {
    const auto header = text::split(lines[0], ',');
    auto col = [&](std::string_view name) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (text::trim(header[i]) == name) return i;
      }
      return std::nullopt;
    };
    const auto acc = col("accuracy");
    const auto frac = col("fraction");
    const auto meth = col("method");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      const auto f = text::split(lines[i], ',');
      if (f.size() != header.size()) {
        throw LocatedError(Errc::MalformedRecord, i + 1, path + ": ragged row " + std::to_string(i + 1));
      }
      double fv = 0.0;
      if (fraction >= 0.0 && frac && (!text::parse_double(f[*frac], fv) || fv != fraction)) continue;
      if (!method.empty() && meth && f[*meth] != method) continue;
      double v = 0.0;
      if (!text::parse_double(f[*acc], v)) {
        throw LocatedError(Errc::MalformedRecord, i + 1, path + ": bad accuracy on line " + std::to_string(i + 1));
      }
      out.push_back(v);
    }
    return out;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    double v = 0.0;
    if (!text::parse_double(lines[i], v)) {
      throw LocatedError(Errc::MalformedRecord, i + 1, path + ": not a number on line " + std::to_string(i + 1));
    }
    out.push_back(v);
  }
  return out;
}

inline int cmd_ttest(const TtestArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.a, "--a");
  require_file(a.b, "--b");
  Manifest m("ttest", sub, c);
  m.input(a.a);
  m.input(a.b);
  const auto xa = read_samples(a.a, a.fraction, a.method);
  const auto xb = read_samples(a.b, a.fraction, a.method);
  const auto r = eval::welch_t_test(xa, xb);
  std::string csv = "n_a,n_b,t,df,p_two_sided,significant_at_0.1\n";
  csv += std::to_string(xa.size()) + "," + std::to_string(xb.size()) + "," + text::format_double(r.t) +
         "," + text::format_double(r.df) + "," + text::format_double(r.p_two_sided) + "," +
         (r.p_two_sided < 0.1 ? "*" : "") + "\n";
  prepare_out_dir(c);
  emit(c, m, "ttest.csv", csv);
  m.write();
  out << csv;
  return kOk;
}

struct IntervenArgs {
  std::string corpus;
  std::string tags;
  std::string model;
  std::string vocab;
  std::string predictor_endpoint;
  std::string specs;  // empty: the four presets
  std::string split = "test";
  double threshold = 0.5;
};

inline int cmd_intervene(const IntervenArgs& a, const Common& c, const CLI::App& sub,
                         std::ostream& out) {
  require_file(a.corpus, "--corpus");
  require_file(a.tags, "--tags");
  if (a.model.empty() == a.predictor_endpoint.empty()) {
    throw UsageError("give exactly one of --model or --predictor-endpoint");
  }
  if (!a.model.empty()) require_file(a.model, "--model");
  if (!a.vocab.empty()) require_file(a.vocab, "--vocab");
  if (!a.specs.empty()) require_file(a.specs, "--specs");
  if (!a.predictor_endpoint.empty()) http::parse_endpoint(a.predictor_endpoint);
  const Split split = parse_split(a.split);
  const auto specs = a.specs.empty() ? explain::intervention_presets(c.seed)
                                     : explain::parse_specs(text::read_file(a.specs));
  Manifest m("intervene", sub, c);
  m.input(a.corpus);
  m.input(a.tags);
  if (!a.model.empty()) m.input(a.model);
  if (!a.specs.empty()) m.input(a.specs);

  std::unique_ptr<model::OutcomePredictor> predictor;
  if (!a.model.empty()) {
    auto lm = model::load_model(a.model);
    auto pipeline = pipeline_for_model(lm, a.vocab);
    predictor = std::make_unique<model::LogisticPredictor>(std::move(lm), std::move(pipeline), a.threshold);
  } else {
    predictor = std::make_unique<model::RemotePredictor>(a.predictor_endpoint, http::ClientOptions{}, a.threshold);
  }
  Corpus corpus = corpus::load_corpus(a.corpus);
  if (std::any_of(corpus.begin(), corpus.end(), [&](auto& x) { return x.split == split; })) {
    corpus = corpus::select_split(corpus, split);
  }
  const auto tags = load_tags(a.tags);
  std::vector<explain::InterventionResult> results;
  for (const auto& spec : specs) {
    if (spec.mode == explain::InterventionMode::RandomPerturbation) m.seed("perturbation", spec.seed);
    results.push_back(explain::run_intervention(*predictor, corpus, tags, spec, c.workers));
  }
  prepare_out_dir(c);
  const auto csv = explain::intervention_csv(results);
  emit(c, m, "interventions.csv", csv);
  emit(c, m, "intervention_specs.jsonl", explain::serialize_specs(specs));
  m.write();
  out << csv;
  return kOk;
}

struct CooccurArgs {
  std::string corpus;
  std::string tags;
  double smoothing = 1.0;
};

inline int cmd_cooccur(const CooccurArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  require_file(a.corpus, "--corpus");
  require_file(a.tags, "--tags");
  if (!(a.smoothing >= 0.0)) throw UsageError("--smoothing must be >= 0");
  Manifest m("cooccur", sub, c);
  m.input(a.corpus);
  m.input(a.tags);
  const Corpus corpus = corpus::select_labeled(corpus::load_corpus(a.corpus));
  const auto tags = load_tags(a.tags);
  const auto r = explain::cooccurrence_ratio(corpus, tags, a.smoothing);
  prepare_out_dir(c);
  const auto ratio = explain::matrix_csv(r.ratio, false);
  emit(c, m, "cooccurrence_ratio.csv", ratio);
  emit(c, m, "cooccurrence_fail_counts.csv", explain::matrix_csv(r.fail_counts, true));
  emit(c, m, "cooccurrence_success_counts.csv", explain::matrix_csv(r.success_counts, true));
  emit(c, m, "prevalence.csv", explain::prevalence_csv(explain::prevalence_by_outcome(corpus, tags)));
  m.write();
  out << ratio;
  return kOk;
}

struct AgreeArgs {
  std::vector<std::string> annotations;
};

inline int cmd_agree(const AgreeArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  if (a.annotations.size() < 2) throw UsageError("--annotations needs at least two files");
  for (const auto& p : a.annotations) require_file(p, "--annotations");
  Manifest m("agree", sub, c);
  std::vector<std::string> names;
  std::vector<std::vector<SocialOrientationTag>> labels;
  std::vector<std::string> order;  // utterance keys of the first file
  for (const auto& path : a.annotations) {
    m.input(path);
    std::string name = fs::path(path).stem().string();
    while (std::find(names.begin(), names.end(), name) != names.end()) name += "'";
    names.push_back(name);
    const auto cache = tagging::cache_load(path);
    std::map<std::string, SocialOrientationTag> by_key;
    std::vector<std::string> keys;
    for (const auto& conv_id : cache.tags.conversation_order()) {
      for (const auto& t : *cache.tags.find(conv_id)) {
        keys.push_back(conv_id + "\n" + t.utterance_id);
        by_key[keys.back()] = t.tag;
      }
    }
    for (const auto& t : cache.tags.loose()) {
      keys.push_back("\n" + t.utterance_id);
      by_key[keys.back()] = t.tag;
    }
    if (order.empty()) order = keys;
    if (by_key.size() != order.size()) {
      throw Error(Errc::LengthMismatch, path + " labels a different set of utterances");
    }
    std::vector<SocialOrientationTag> row;
    for (const auto& k : order) {
      auto it = by_key.find(k);
      if (it == by_key.end()) throw Error(Errc::MissingTag, path + " lacks an utterance of " + a.annotations[0]);
      row.push_back(it->second);
    }
    labels.push_back(std::move(row));
  }
  prepare_out_dir(c);
  const auto csv = eval::agreement_csv(names, labels);
  emit(c, m, "agreement.csv", csv);
  for (std::size_t i = 1; i < labels.size(); ++i) {
    const auto cm = eval::confusion_matrix(labels[0], labels[i]);
    emit(c, m, "confusion_" + names[0] + "_vs_" + names[i] + ".csv", eval::confusion_csv(cm));
  }
  m.write();
  out << csv;
  return kOk;
}

struct SynthArgs {
  std::size_t n = 2000;
  std::size_t n_test = 500;
};

inline int cmd_synth(const SynthArgs& a, const Common& c, const CLI::App& sub, std::ostream& out) {
  synth::SynthConfig cfg;
  cfg.n_conversations = a.n;
  cfg.n_test = a.n_test;
  cfg.seed = c.seed;
  if (a.n_test >= a.n) throw UsageError("--n-test must be below --n");
  Manifest m("synth", sub, c);
  m.seed("generator", c.seed);
  const auto s = synth::generate(cfg);
  prepare_out_dir(c);
  emit(c, m, "corpus.jsonl", corpus::serialize_corpus(s.corpus));
  emit(c, m, "planted_tags.jsonl", tagging::serialize_tag_cache(s.corpus.id(), s.tags));
  m.write();
  out << "generated " << s.corpus.size() << " conversations (" << s.corpus.count(Outcome::Failure)
      << " failure)\n";
  return kOk;
}

// --- entry point ----------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"socorient: social orientation tags for dialogue outcome analysis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", common.config, "flat key = value config file");
    s->add_option("--out-dir", common.out_dir, "output directory")->required();
    s->add_option("--seed", common.seed, "run seed")->capture_default_str();
    s->add_option("--workers", common.workers, "worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "load, label, filter and pair a corpus");
  add_common(s_ingest);
  s_ingest->add_option("--input", ingest.input, "convo-jsonl file");
  s_ingest->add_option("--format", ingest.format)->capture_default_str();
  s_ingest->add_flag("--keyword-toxicity", ingest.keyword_toxicity, "flag toxic utterances by keyword");
  s_ingest->add_flag("--derive-context", ingest.derive_context, "truncate before the first toxic turn");
  s_ingest->add_flag("--drop-final-turn", ingest.drop_final_turn);
  s_ingest->add_flag("--filter-candidates", ingest.filter);
  s_ingest->add_option("--min-speakers", ingest.min_speakers)->capture_default_str();
  s_ingest->add_option("--min-turns", ingest.min_turns)->capture_default_str();
  s_ingest->add_flag("--pair-balanced", ingest.pair_balanced, "pair failures with same-page successes");
  s_ingest->add_option("--test-fraction", ingest.test_fraction)->capture_default_str();
  s_ingest->add_option("--val-fraction", ingest.val_fraction)->capture_default_str();

  TagArgs tag;
  auto* s_tag = app.add_subcommand("tag", "attach social orientation tags");
  add_common(s_tag);
  s_tag->add_option("--corpus", tag.corpus);
  s_tag->add_option("--backend", tag.backend, "lexicon | remote | llm | cache")->capture_default_str();
  s_tag->add_option("--endpoint", tag.endpoint);
  s_tag->add_option("--model", tag.model)->capture_default_str();
  s_tag->add_option("--temperature", tag.temperature)->capture_default_str();
  s_tag->add_option("--context-window", tag.context_window)->capture_default_str();
  s_tag->add_option("--max-chunk-chars", tag.max_chunk_chars)->capture_default_str();
  s_tag->add_option("--cache", tag.cache, "existing tag cache (backend=cache)");
  s_tag->add_option("--timeout-ms", tag.timeout_ms)->capture_default_str();
  s_tag->add_flag("--dry-run-prompts", tag.dry_run_prompts, "write prompts, call nothing");

  TrainArgs train;
  auto add_train_opts = [](CLI::App* s, TrainArgs& t) {
    s->add_option("--lr", t.learning_rate)->capture_default_str();
    s->add_option("--max-epochs", t.max_epochs)->capture_default_str();
    s->add_option("--l2", t.l2)->capture_default_str();
    s->add_option("--tolerance", t.tolerance)->capture_default_str();
    s->add_flag("--no-class-weights", t.no_class_weights);
  };
  auto* s_train = app.add_subcommand("train", "train a logistic outcome model");
  add_common(s_train);
  s_train->add_option("--corpus", train.corpus);
  s_train->add_option("--tags", train.tags);
  s_train->add_option("--features", train.features, "e.g. social_counts+tfidf")->capture_default_str();
  s_train->add_option("--split", train.split)->capture_default_str();
  s_train->add_flag("--export-features", train.export_features);
  add_train_opts(s_train, train);

  EvaluateArgs evaluate;
  auto* s_eval = app.add_subcommand("evaluate", "score a trained model");
  add_common(s_eval);
  s_eval->add_option("--corpus", evaluate.corpus);
  s_eval->add_option("--tags", evaluate.tags);
  s_eval->add_option("--model", evaluate.model);
  s_eval->add_option("--vocab", evaluate.vocab);
  s_eval->add_option("--split", evaluate.split)->capture_default_str();
  s_eval->add_option("--threshold", evaluate.threshold)->capture_default_str();

  AblateArgs ablate;
  auto* s_ablate = app.add_subcommand("ablate", "fraction x seed training ablation");
  add_common(s_ablate);
  s_ablate->add_option("--corpus", ablate.corpus);
  s_ablate->add_option("--tags", ablate.tags);
  s_ablate->add_option("--methods", ablate.methods, "feature sets, or 'majority'")
      ->delimiter(',')
      ->capture_default_str();
  s_ablate->add_option("--baseline", ablate.baseline, "method the p-values compare against");
  s_ablate->add_option("--fractions", ablate.fractions)->delimiter(',')->capture_default_str();
  s_ablate->add_option("--seeds", ablate.seeds)->delimiter(',')->capture_default_str();
  s_ablate->add_option("--test-fraction", ablate.test_fraction, "used when the corpus has no splits")
      ->capture_default_str();
  add_train_opts(s_ablate, ablate.train);

  TtestArgs ttest;
  auto* s_ttest = app.add_subcommand("ttest", "Welch t-test on two run samples");
  add_common(s_ttest);
  s_ttest->add_option("--a", ttest.a);
  s_ttest->add_option("--b", ttest.b);
  s_ttest->add_option("--fraction", ttest.fraction, "filter runs.csv rows");
  s_ttest->add_option("--method", ttest.method, "filter runs.csv rows");

  IntervenArgs intervene;
  auto* s_int = app.add_subcommand("intervene", "tag interventions against a predictor");
  add_common(s_int);
  s_int->add_option("--corpus", intervene.corpus);
  s_int->add_option("--tags", intervene.tags);
  s_int->add_option("--model", intervene.model);
  s_int->add_option("--vocab", intervene.vocab);
  s_int->add_option("--predictor-endpoint", intervene.predictor_endpoint);
  s_int->add_option("--specs", intervene.specs, "intervention spec JSONL (default: presets)");
  s_int->add_option("--split", intervene.split)->capture_default_str();
  s_int->add_option("--threshold", intervene.threshold)->capture_default_str();

  CooccurArgs cooccur;
  auto* s_co = app.add_subcommand("cooccur", "co-occurrence ratios and prevalence");
  add_common(s_co);
  s_co->add_option("--corpus", cooccur.corpus);
  s_co->add_option("--tags", cooccur.tags);
  s_co->add_option("--smoothing", cooccur.smoothing)->capture_default_str();

  AgreeArgs agree;
  auto* s_agree = app.add_subcommand("agree", "agreement between annotation files");
  add_common(s_agree);
  s_agree->add_option("--annotations", agree.annotations)->delimiter(',');

  SynthArgs synth_args;
  auto* s_synth = app.add_subcommand("synth", "generate the planted synthetic corpus");
  add_common(s_synth);
  s_synth->add_option("--n", synth_args.n)->capture_default_str();
  s_synth->add_option("--n-test", synth_args.n_test)->capture_default_str();

  CLI::App* active = nullptr;
  int code = kOk;
  try {
    if (!args.empty() && args[0].rfind("-", 0) != 0) {
      const std::string* config = nullptr;
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config = &args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) {
          static thread_local std::string tmp;
          tmp = args[i].substr(9);
          config = &tmp;
        }
      }
      if (config) {
        if (auto* sub = app.get_subcommand_no_throw(args[0])) args = merge_config(*sub, args, *config);
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  for (auto* s : app.get_subcommands()) active = s;

  struct Route {
    std::function<int()> run;
    int failure_code;
  };
  const std::map<std::string, Route> routes{
      {"ingest", {[&] { return cmd_ingest(ingest, common, *active, out); }, kData}},
      {"tag", {[&] { return cmd_tag(tag, common, *active, out); }, kTagging}},
      {"train", {[&] { return cmd_train(train, common, *active, out); }, kTraining}},
      {"evaluate", {[&] { return cmd_evaluate(evaluate, common, *active, out); }, kTraining}},
      {"ablate", {[&] { return cmd_ablate(ablate, common, *active, out); }, kTraining}},
      {"ttest", {[&] { return cmd_ttest(ttest, common, *active, out); }, kTraining}},
      {"intervene", {[&] { return cmd_intervene(intervene, common, *active, out); }, kAnalysis}},
      {"cooccur", {[&] { return cmd_cooccur(cooccur, common, *active, out); }, kAnalysis}},
      {"agree", {[&] { return cmd_agree(agree, common, *active, out); }, kAnalysis}},
      {"synth", {[&] { return cmd_synth(synth_args, common, *active, out); }, kData}},
  };
  const auto& route = routes.at(active->get_name());
  try {
    code = route.run();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const explain::InterventionError& e) {
    const auto& p = e.partial();
    err << "error: " << e.what() << "\n"
        << "partial: " << p.spec_name << " pos2neg=" << p.pos2neg << " neg2pos=" << p.neg2pos
        << " same=" << p.same << " completed=" << p.n_filtered << "\n";
    return kAnalysis;
  } catch (const Error& e) {
    err << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return is_data_error(e.code()) ? kData : route.failure_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return route.failure_code;
  }
  return code;
}

}  // namespace socorient::cli
