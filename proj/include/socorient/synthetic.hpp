#pragma once

// Seeded synthetic corpus with planted interaction effects, for end-to-end
// checks. Each conversation draws a hostile or friendly mood that skews its
// tag mix; the outcome is then drawn from a logit over cross-speaker tag
// pairs:
//   (Cold, Cold) and (Arrogant-Calculating, Cold) raise failure odds,
//   (Warm-Agreeable, Unassuming-Ingenuous) lowers them.
// Utterance texts carry cue words of their planted tag only, so the lexicon
// tagger recovers the planted tags exactly.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/explain.hpp"
#include "socorient/rng.hpp"
#include "socorient/tagging/cache.hpp"
#include "socorient/tagging/lexicon.hpp"
#include "socorient/tags.hpp"

namespace socorient::synth {

struct SynthConfig {
  std::size_t n_conversations = 2000;
  std::size_t n_test = 500;  // the last n_test conversations form the Test split
  std::uint64_t seed = 7;
  std::size_t min_turns = 4;
  std::size_t max_turns = 12;
  double hostile_rate = 0.5;
  double base_logit = 0.0;
  double cold_cold = 2.0;
  double arrogant_cold = 2.0;
  double warm_unassuming = -2.5;
};

struct SynthCorpus {
  Corpus corpus;
  tagging::TagIndex tags;  // planted tags, source Human
};

namespace detail {

// Tag weights in canonical order, Not Available last.
inline constexpr std::array<double, kSocialTagCount> kHostileMix = {
    0.10, 0.06, 0.04, 0.05, 0.04, 0.10, 0.32, 0.25, 0.04};
inline constexpr std::array<double, kSocialTagCount> kFriendlyMix = {
    0.10, 0.14, 0.28, 0.22, 0.10, 0.06, 0.03, 0.03, 0.04};

inline constexpr std::array<std::string_view, 24> kFiller = {
    "the",    "article", "edit",     "section", "page",      "we",       "i",     "think",
    "this",   "that",    "about",    "change",  "wording",   "paragraph", "talk", "version",
    "on",     "is",      "it",       "to",      "revert",    "lead",     "text",  "here"};

inline SocialOrientationTag draw_tag(SeededRng& rng,
                                     const std::array<double, kSocialTagCount>& mix) {
  double u = rng.uniform01();
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (u < mix[i]) return kSocialTags[i];
    u -= mix[i];
  }
  return kSocialTags[mix.size() - 2];
}

inline const std::vector<std::string_view>& cues_for(SocialOrientationTag t) {
  static const auto table = [] {
    std::array<std::vector<std::string_view>, kCircumplexTagCount> out;
    for (const auto& c : tagging::kLexiconCues) out[index_of(c.tag)].push_back(c.word);
    return out;
  }();
  return table[index_of(t)];
}

inline std::string utterance_text(SeededRng& rng, SocialOrientationTag t) {
  if (!is_circumplex(t)) return "";
  const auto& cues = cues_for(t);
  const std::size_t n_filler = 3 + rng.uniform_index(5);
  const std::size_t n_cues = 1 + rng.uniform_index(2);
  std::vector<std::string_view> words;
  for (std::size_t i = 0; i < n_filler; ++i) words.push_back(kFiller[rng.uniform_index(kFiller.size())]);
  for (std::size_t i = 0; i < n_cues; ++i) {
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(words.size() + 1)),
                 cues[rng.uniform_index(cues.size())]);
  }
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  s += '.';
  return s;
}

}  // namespace detail

/// Failure logit of one conversation given its tags.
inline double planted_logit(const SynthConfig& cfg, const explain::TagPairSet& pairs) {
  using T = SocialOrientationTag;
  double z = cfg.base_logit;
  if (pairs.contains(TagPair::of(T::Cold, T::Cold))) z += cfg.cold_cold;
  if (pairs.contains(TagPair::of(T::ArrogantCalculating, T::Cold))) z += cfg.arrogant_cold;
  if (pairs.contains(TagPair::of(T::WarmAgreeable, T::UnassumingIngenuous))) {
    z += cfg.warm_unassuming;
  }
  return z;
}

inline SynthCorpus generate(const SynthConfig& cfg) {
  if (cfg.n_test >= cfg.n_conversations || cfg.min_turns < 2 || cfg.max_turns < cfg.min_turns) {
    throw Error(Errc::InvalidArgument, "bad synthetic corpus configuration");
  }
  SeededRng rng(cfg.seed);
  std::vector<Conversation> convs;
  std::vector<std::vector<TagAssignment>> all_tags;
  convs.reserve(cfg.n_conversations);
  for (std::size_t c = 0; c < cfg.n_conversations; ++c) {
    Conversation conv;
    conv.id = "synth-" + std::to_string(c);
    conv.source_page = "page-" + std::to_string(c / 2);
    conv.split = c + cfg.n_test >= cfg.n_conversations ? Split::Test : Split::Train;
    const bool hostile = rng.bernoulli(cfg.hostile_rate);
    const auto& mix = hostile ? detail::kHostileMix : detail::kFriendlyMix;
    const std::size_t n_turns = cfg.min_turns + rng.uniform_index(cfg.max_turns - cfg.min_turns + 1);
    const std::size_t n_speakers = 2 + rng.uniform_index(2);
    std::vector<TagAssignment> tags;
    std::size_t speaker = rng.uniform_index(n_speakers);
    for (std::size_t t = 0; t < n_turns; ++t) {
      // Consecutive turns always change speaker.
      if (t > 0) speaker = (speaker + 1 + rng.uniform_index(n_speakers - 1)) % n_speakers;
      const auto tag = detail::draw_tag(rng, mix);
      Utterance u;
      u.id = conv.id + "-u" + std::to_string(t);
      u.speaker_id = "speaker" + std::to_string(speaker);
      u.text = detail::utterance_text(rng, tag);
      u.position = t;
      conv.utterances.push_back(std::move(u));
      tags.push_back({conv.utterances.back().id, tag, TagSource::Human, std::nullopt});
    }
    const double z = planted_logit(cfg, explain::find_cross_speaker_pairs(conv, tags));
    const double p_fail = 1.0 / (1.0 + std::exp(-z));
    conv.outcome = rng.bernoulli(p_fail) ? Outcome::Failure : Outcome::Success;
    convs.push_back(std::move(conv));
    all_tags.push_back(std::move(tags));
  }
  SynthCorpus out{Corpus("synthetic", std::move(convs)), {}};
  for (std::size_t c = 0; c < out.corpus.size(); ++c) {
    out.tags.set(out.corpus[c].id, std::move(all_tags[c]));
  }
  return out;
}

}  // namespace socorient::synth
