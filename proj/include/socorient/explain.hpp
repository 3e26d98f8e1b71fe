#pragma once

// Tag interventions against an outcome predictor, cross-speaker tag pairs,
// co-occurrence likelihood ratios and tag prevalence by outcome.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/model.hpp"
#include "socorient/parallel.hpp"
#include "socorient/rng.hpp"
#include "socorient/tagging/cache.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::explain {

using TagPairSet = std::set<TagPair>;
using ReplacementMap = std::map<SocialOrientationTag, SocialOrientationTag>;

/// Unordered tag pairs over utterance pairs spoken by different speakers.
/// `tags` is aligned with conv.utterances. Not Available never pairs.
inline TagPairSet find_cross_speaker_pairs(const Conversation& conv,
                                           std::span<const TagAssignment> tags) {
  if (tags.size() != conv.utterances.size()) {
    throw Error(Errc::LengthMismatch, "tags do not cover conversation '" + conv.id + "'");
  }
  TagPairSet out;
  const auto& u = conv.utterances;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!is_circumplex(tags[i].tag)) continue;
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      if (u[i].speaker_id == u[j].speaker_id || !is_circumplex(tags[j].tag)) continue;
      out.insert(TagPair::of(tags[i].tag, tags[j].tag));
    }
  }
  return out;
}

inline Corpus filter_conversations(const Corpus& corpus, const tagging::TagIndex& tags,
                                   TagPair pair) {
  pair = TagPair::of(pair.first, pair.second);
  std::vector<Conversation> keep;
  for (const auto& conv : corpus) {
    if (find_cross_speaker_pairs(conv, tags.for_conversation(conv)).contains(pair)) {
      keep.push_back(conv);
    }
  }
  return Corpus(corpus.id(), std::move(keep));
}

/// Simultaneous: every tag is looked up in the original, so swaps work.
inline std::vector<TagAssignment> apply_replacement(std::span<const TagAssignment> tags,
                                                    const ReplacementMap& replacement) {
  std::vector<TagAssignment> out(tags.begin(), tags.end());
  for (auto& a : out) {
    if (auto it = replacement.find(a.tag); it != replacement.end()) a.tag = it->second;
  }
  return out;
}

/// Each circumplex tag becomes a uniform draw over the eight; Not Available
/// stays.
inline std::vector<TagAssignment> random_perturbation(std::span<const TagAssignment> tags,
                                                      std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<TagAssignment> out(tags.begin(), tags.end());
  for (auto& a : out) {
    if (is_circumplex(a.tag)) a.tag = kCircumplexTags[rng.uniform_index(kCircumplexTagCount)];
  }
  return out;
}

enum class InterventionMode { Targeted, RandomPerturbation };

inline std::string_view mode_name(InterventionMode m) {
  return m == InterventionMode::Targeted ? "targeted" : "random";
}

struct InterventionSpec {
  std::string name;
  std::optional<TagPair> filter_pair;  // unset: every conversation
  ReplacementMap replacement;
  InterventionMode mode = InterventionMode::Targeted;
  std::uint64_t seed = 42;

  void validate() const {
    if (name.empty()) throw Error(Errc::InvalidArgument, "intervention without a name");
    if (mode == InterventionMode::Targeted && replacement.empty()) {
      throw Error(Errc::InvalidArgument, "targeted intervention '" + name + "' has no replacement");
    }
    if (mode == InterventionMode::RandomPerturbation && !replacement.empty()) {
      throw Error(Errc::InvalidArgument,
                  "random intervention '" + name + "' must not carry a replacement map");
    }
    for (const auto& [from, to] : replacement) {
      if (!is_circumplex(from) || !is_circumplex(to)) {
        throw Error(Errc::InvalidArgument,
                    "intervention '" + name + "' maps to or from Not Available");
      }
    }
  }
};

struct InterventionResult {
  std::string spec_name;
  std::size_t pos2neg = 0;  // predicted Success before, Failure after
  std::size_t neg2pos = 0;
  std::size_t same = 0;
  std::size_t n_filtered = 0;
};

/// Thrown when the predictor fails; carries the tallies for the conversations
/// finished before the failing one.
class InterventionError : public Error {
 public:
  InterventionError(InterventionResult partial, const std::string& what)
      : Error(Errc::InterventionAborted, what), partial_(std::move(partial)) {}
  const InterventionResult& partial() const { return partial_; }

 private:
  InterventionResult partial_;
};

inline std::vector<TagAssignment> intervene(const InterventionSpec& spec, const Conversation& conv,
                                            std::span<const TagAssignment> tags) {
  if (spec.mode == InterventionMode::RandomPerturbation) {
    return random_perturbation(tags, derive_seed(spec.seed, conv.id));
  }
  return apply_replacement(tags, spec.replacement);
}

inline InterventionResult run_intervention(const model::OutcomePredictor& predictor,
                                           const Corpus& corpus, const tagging::TagIndex& tags,
                                           const InterventionSpec& spec, std::size_t workers = 1) {
  spec.validate();
  const Corpus selected =
      spec.filter_pair ? filter_conversations(corpus, tags, *spec.filter_pair) : corpus;
  if (!predictor.reentrant()) workers = 1;

  enum class Flip : std::uint8_t { Pending, Pos2Neg, Neg2Pos, Same, Failed };
  std::vector<Flip> flips(selected.size(), Flip::Pending);
  std::vector<std::string> errors(selected.size());
  std::atomic<bool> abort{false};
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    if (abort.load()) return;
    try {
      const auto& conv = selected[i];
      const auto original = tags.for_conversation(conv);
      const auto before = predictor.predict(conv, original).label;
      const auto after = predictor.predict(conv, intervene(spec, conv, original)).label;
      if (before == Outcome::Success && after == Outcome::Failure) {
        flips[i] = Flip::Pos2Neg;
      } else if (before == Outcome::Failure && after == Outcome::Success) {
        flips[i] = Flip::Neg2Pos;
      } else {
        flips[i] = Flip::Same;
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      flips[i] = Flip::Failed;
      abort = true;
    }
  });

  InterventionResult r;
  r.spec_name = spec.name;
  for (std::size_t i = 0; i < flips.size(); ++i) {
    switch (flips[i]) {
      case Flip::Pos2Neg: ++r.pos2neg; break;
      case Flip::Neg2Pos: ++r.neg2pos; break;
      case Flip::Same: ++r.same; break;
      case Flip::Pending:
      case Flip::Failed: {
        r.n_filtered = r.pos2neg + r.neg2pos + r.same;
        std::string why = errors[i];
        for (std::size_t k = i; why.empty() && k < errors.size(); ++k) why = errors[k];
        throw InterventionError(r, "intervention '" + spec.name + "' aborted after " +
                                       std::to_string(i) + " of " +
                                       std::to_string(selected.size()) +
                                       " conversations: " + why);
      }
    }
  }
  r.n_filtered = selected.size();
  return r;
}

inline constexpr std::string_view kInterventionHeader = "intervention,pos2neg,neg2pos,same,n_filtered";

inline std::string intervention_csv(std::span<const InterventionResult> results) {
  std::string out(kInterventionHeader);
  out += '\n';
  for (const auto& r : results) {
    out += text::csv_field(r.spec_name) + "," + std::to_string(r.pos2neg) + "," +
           std::to_string(r.neg2pos) + "," + std::to_string(r.same) + "," +
           std::to_string(r.n_filtered) + "\n";
  }
  return out;
}

/// The four interventions of the explainability table. Presets 3 and 4 are
/// reconstructed from the prose: 3 is the inverse of 2, and 4 moves
/// Unassured-Submissive partners of an Assured-Dominant speaker to
/// Assured-Dominant.
inline std::vector<InterventionSpec> intervention_presets(std::uint64_t seed = 42) {
  using T = SocialOrientationTag;
  std::vector<InterventionSpec> v;
  v.push_back({"(1) Random", std::nullopt, {}, InterventionMode::RandomPerturbation, seed});
  v.push_back({"(2) (Unassuming-Ingenuous, Unassured-Submissive)",
               TagPair::of(T::Cold, T::ArrogantCalculating),
               {{T::Cold, T::UnassumingIngenuous}, {T::ArrogantCalculating, T::UnassuredSubmissive}},
               InterventionMode::Targeted,
               seed});
  v.push_back({"(3) (Arrogant-Calculating, Cold)",
               TagPair::of(T::UnassumingIngenuous, T::UnassuredSubmissive),
               {{T::UnassumingIngenuous, T::Cold}, {T::UnassuredSubmissive, T::ArrogantCalculating}},
               InterventionMode::Targeted,
               seed});
  v.push_back({"(4) (Assured-Dominant, Assured-Dominant)",
               TagPair::of(T::AssuredDominant, T::UnassuredSubmissive),
               {{T::UnassuredSubmissive, T::AssuredDominant}},
               InterventionMode::Targeted,
               seed});
  return v;
}

// Spec file: one JSON object per line,
// {"name", "filter_pair": [tag, tag] | null, "replacement": {tag: tag}, "mode": "targeted"|"random", "seed"}

inline nlohmann::ordered_json spec_to_json(const InterventionSpec& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  if (s.filter_pair) {
    j["filter_pair"] = {tag_name(s.filter_pair->first), tag_name(s.filter_pair->second)};
  } else {
    j["filter_pair"] = nullptr;
  }
  j["replacement"] = nlohmann::ordered_json::object();
  for (const auto& [from, to] : s.replacement) j["replacement"][std::string(tag_name(from))] = tag_name(to);
  j["mode"] = mode_name(s.mode);
  j["seed"] = s.seed;
  return j;
}

inline std::string serialize_specs(std::span<const InterventionSpec> specs) {
  std::string out;
  for (const auto& s : specs) out += spec_to_json(s).dump() + "\n";
  return out;
}

inline std::vector<InterventionSpec> parse_specs(std::string_view contents) {
  std::vector<InterventionSpec> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(contents, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](const std::string& what) {
      return LocatedError(Errc::MalformedRecord, line_no,
                          "spec line " + std::to_string(line_no) + ": " + what);
    };
    auto tag = [&](const nlohmann::json& v) {
      if (!v.is_string()) throw fail("tag must be a string");
      auto t = tag_from_name(v.get<std::string>());
      if (!t) throw fail("unknown tag '" + v.get<std::string>() + "'");
      return *t;
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw fail("invalid JSON");
    }
    InterventionSpec s;
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) throw fail("missing name");
    s.name = j["name"].get<std::string>();
    if (auto fp = j.find("filter_pair"); fp != j.end() && !fp->is_null()) {
      if (!fp->is_array() || fp->size() != 2) throw fail("filter_pair must be two tags or null");
      s.filter_pair = TagPair::of(tag((*fp)[0]), tag((*fp)[1]));
    }
    if (auto rep = j.find("replacement"); rep != j.end() && !rep->is_null()) {
      if (!rep->is_object()) throw fail("replacement must be an object");
      for (const auto& [from, to] : rep->items()) s.replacement[tag(from)] = tag(to);
    }
    const std::string mode = j.value("mode", std::string("targeted"));
    if (mode == "targeted") {
      s.mode = InterventionMode::Targeted;
    } else if (mode == "random") {
      s.mode = InterventionMode::RandomPerturbation;
    } else {
      throw fail("mode must be 'targeted' or 'random'");
    }
    if (auto sd = j.find("seed"); sd != j.end()) {
      if (!sd->is_number_unsigned()) throw fail("seed must be a non-negative integer");
      s.seed = sd->get<std::uint64_t>();
    }
    try {
      s.validate();
    } catch (const Error& e) {
      throw fail(e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

// --- co-occurrence --------------------------------------------------------------

using TagMatrix = std::array<std::array<double, kCircumplexTagCount>, kCircumplexTagCount>;

/// Symmetric cross-speaker pair counts over circumplex tags: each utterance
/// pair (i < j) with different speakers adds one to (a, b) and one to (b, a).
inline TagMatrix cooccurrence_counts(const Corpus& corpus, const tagging::TagIndex& tags) {
  TagMatrix m{};
  for (const auto& conv : corpus) {
    const auto t = tags.for_conversation(conv);
    const auto& u = conv.utterances;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!is_circumplex(t[i].tag)) continue;
      for (std::size_t j = i + 1; j < u.size(); ++j) {
        if (u[i].speaker_id == u[j].speaker_id || !is_circumplex(t[j].tag)) continue;
        m[index_of(t[i].tag)][index_of(t[j].tag)] += 1.0;
        m[index_of(t[j].tag)][index_of(t[i].tag)] += 1.0;
      }
    }
  }
  return m;
}

struct CooccurrenceRatio {
  std::array<SocialOrientationTag, kCircumplexTagCount> labels = kCircumplexTags;
  TagMatrix ratio{};
  double smoothing = 1.0;
  TagMatrix fail_counts{};
  TagMatrix success_counts{};
};

inline TagMatrix smooth_and_normalize(const TagMatrix& counts, double smoothing) {
  TagMatrix p{};
  double total = 0.0;
  for (std::size_t a = 0; a < kCircumplexTagCount; ++a) {
    for (std::size_t b = 0; b < kCircumplexTagCount; ++b) {
      p[a][b] = counts[a][b] + smoothing;
      total += p[a][b];
    }
  }
  if (!(total > 0.0)) throw Error(Errc::InvalidArgument, "no pairs to normalize; use smoothing > 0");
  for (auto& row : p) {
    for (double& x : row) x /= total;
  }
  return p;
}

inline CooccurrenceRatio cooccurrence_ratio(const Corpus& fail, const Corpus& success,
                                            const tagging::TagIndex& tags,
                                            double smoothing = 1.0) {
  if (fail.empty() || success.empty()) {
    throw Error(Errc::EmptyCorpus, "co-occurrence needs failed and successful conversations");
  }
  if (!(smoothing >= 0.0)) throw Error(Errc::InvalidArgument, "smoothing must be >= 0");
  CooccurrenceRatio r;
  r.smoothing = smoothing;
  r.fail_counts = cooccurrence_counts(fail, tags);
  r.success_counts = cooccurrence_counts(success, tags);
  const auto pf = smooth_and_normalize(r.fail_counts, smoothing);
  const auto ps = smooth_and_normalize(r.success_counts, smoothing);
  for (std::size_t a = 0; a < kCircumplexTagCount; ++a) {
    for (std::size_t b = 0; b < kCircumplexTagCount; ++b) {
      if (!(ps[a][b] > 0.0)) {
        throw Error(Errc::InvalidArgument, "zero success cell; use smoothing > 0");
      }
      r.ratio[a][b] = pf[a][b] / ps[a][b];
    }
  }
  return r;
}

/// Splits a labeled corpus by outcome first.
inline CooccurrenceRatio cooccurrence_ratio(const Corpus& corpus, const tagging::TagIndex& tags,
                                            double smoothing = 1.0) {
  std::vector<Conversation> f, s;
  for (const auto& c : corpus) {
    if (c.outcome == Outcome::Failure) f.push_back(c);
    if (c.outcome == Outcome::Success) s.push_back(c);
  }
  return cooccurrence_ratio(Corpus(corpus.id(), std::move(f)), Corpus(corpus.id(), std::move(s)),
                            tags, smoothing);
}

inline std::string matrix_csv(const TagMatrix& m, bool integral) {
  std::string out = "tag";
  for (auto t : kCircumplexTags) out += "," + std::string(tag_name(t));
  out += '\n';
  for (std::size_t a = 0; a < kCircumplexTagCount; ++a) {
    out += tag_name(kCircumplexTags[a]);
    for (std::size_t b = 0; b < kCircumplexTagCount; ++b) {
      out += ',';
      out += integral ? std::to_string(static_cast<long long>(m[a][b])) : text::format_fixed(m[a][b], 6);
    }
    out += '\n';
  }
  return out;
}

// --- prevalence ---------------------------------------------------------------------

using TagDistribution = std::array<double, kSocialTagCount>;

/// Per outcome, tag frequencies over all utterances summing to 1.
inline std::map<Outcome, TagDistribution> prevalence_by_outcome(const Corpus& corpus,
                                                                const tagging::TagIndex& tags) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "prevalence of an empty corpus");
  std::map<Outcome, TagDistribution> counts;
  for (const auto& conv : corpus) {
    if (!conv.is_labeled()) {
      throw Error(Errc::InvalidArgument, "conversation '" + conv.id + "' is unlabeled");
    }
    auto& row = counts[conv.outcome];
    for (const auto& a : tags.for_conversation(conv)) row[index_of(a.tag)] += 1.0;
  }
  for (auto& [o, row] : counts) {
    double total = 0.0;
    for (double x : row) total += x;
    if (total > 0.0) {
      for (double& x : row) x /= total;
    }
  }
  return counts;
}

inline std::string prevalence_csv(const std::map<Outcome, TagDistribution>& prev) {
  std::string out = "outcome";
  for (auto t : kSocialTags) out += "," + std::string(tag_name(t));
  out += '\n';
  for (const auto& [o, row] : prev) {
    out += outcome_name(o);
    for (double x : row) out += "," + text::format_fixed(x, 6);
    out += '\n';
  }
  return out;
}

}  // namespace socorient::explain
