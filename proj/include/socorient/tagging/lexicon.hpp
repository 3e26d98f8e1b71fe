#pragma once

// Deterministic offline taggers. The cue words are paraphrased from the tag
// definitions; they make the pipeline runnable without a model and make no
// claim to match LLM or human labels.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::tagging {

struct LexiconCue {
  std::string_view word;
  SocialOrientationTag tag;
};

// clang-format off
inline constexpr std::array kLexiconCues = {
    // Assured-Dominant: firm, forceful, assertive
    LexiconCue{"must", SocialOrientationTag::AssuredDominant},
    LexiconCue{"clearly", SocialOrientationTag::AssuredDominant},
    LexiconCue{"definitely", SocialOrientationTag::AssuredDominant},
    LexiconCue{"certainly", SocialOrientationTag::AssuredDominant},
    LexiconCue{"absolutely", SocialOrientationTag::AssuredDominant},
    LexiconCue{"insist", SocialOrientationTag::AssuredDominant},
    LexiconCue{"demand", SocialOrientationTag::AssuredDominant},
    LexiconCue{"listen", SocialOrientationTag::AssuredDominant},
    LexiconCue{"undeniably", SocialOrientationTag::AssuredDominant},
    LexiconCue{"fact", SocialOrientationTag::AssuredDominant},
    LexiconCue{"require", SocialOrientationTag::AssuredDominant},
    LexiconCue{"firmly", SocialOrientationTag::AssuredDominant},
    // Gregarious-Extraverted: friendly, enthusiastic, outgoing
    LexiconCue{"hi", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"hello", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"hey", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"everyone", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"welcome", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"awesome", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"fun", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"excited", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"glad", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"haha", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"cheers", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"wow", SocialOrientationTag::GregariousExtraverted},
    LexiconCue{"folks", SocialOrientationTag::GregariousExtraverted},
    // Warm-Agreeable: kind, polite, appreciative
    LexiconCue{"thank", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"thanks", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"please", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"appreciate", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"kind", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"kindness", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"sorry", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"respect", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"agree", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"helpful", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"grateful", SocialOrientationTag::WarmAgreeable},
    LexiconCue{"encouragement", SocialOrientationTag::WarmAgreeable},
    // Unassuming-Ingenuous: honest, modest, straightforward
    LexiconCue{"honestly", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"honest", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"fair", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"sincerely", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"truthfully", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"admit", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"frankly", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"source", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"sources", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"cite", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"correct", SocialOrientationTag::UnassumingIngenuous},
    LexiconCue{"modest", SocialOrientationTag::UnassumingIngenuous},
    // Unassured-Submissive: doubtful, timid, gives up easily
    LexiconCue{"maybe", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"guess", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"unsure", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"doubt", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"probably", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"confused", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"hopefully", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"whatever", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"dunno", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"might", SocialOrientationTag::UnassuredSubmissive},
    LexiconCue{"perhaps", SocialOrientationTag::UnassuredSubmissive},
    // Aloof-Introverted: quiet, distant, little to say
    LexiconCue{"ok", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"okay", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"fine", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"noted", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"meh", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"nevermind", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"hmm", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"sure", SocialOrientationTag::AloofIntroverted},
    LexiconCue{"busy", SocialOrientationTag::AloofIntroverted},
    // Cold: unsympathetic, hard-hearted
    LexiconCue{"care", SocialOrientationTag::Cold},
    LexiconCue{"yourself", SocialOrientationTag::Cold},
    LexiconCue{"problem", SocialOrientationTag::Cold},
    LexiconCue{"pathetic", SocialOrientationTag::Cold},
    LexiconCue{"stupid", SocialOrientationTag::Cold},
    LexiconCue{"idiot", SocialOrientationTag::Cold},
    LexiconCue{"useless", SocialOrientationTag::Cold},
    LexiconCue{"nonsense", SocialOrientationTag::Cold},
    LexiconCue{"ridiculous", SocialOrientationTag::Cold},
    LexiconCue{"deserve", SocialOrientationTag::Cold},
    LexiconCue{"shut", SocialOrientationTag::Cold},
    LexiconCue{"liar", SocialOrientationTag::Cold},
    LexiconCue{"cruel", SocialOrientationTag::Cold},
    // Arrogant-Calculating: boastful, cocky, manipulative
    LexiconCue{"superior", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"genius", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"smarter", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"naive", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"amateur", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"ignorant", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"brilliant", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"experts", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"laughable", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"cute", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"obviously", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"pity", SocialOrientationTag::ArrogantCalculating},
    LexiconCue{"clueless", SocialOrientationTag::ArrogantCalculating},
};
// clang-format on

inline bool is_empty_text(std::string_view s) { return text::trim(s).empty(); }

inline const std::unordered_map<std::string_view, SocialOrientationTag>& lexicon_cue_map() {
  static const auto map = [] {
    std::unordered_map<std::string_view, SocialOrientationTag> m;
    for (const auto& c : kLexiconCues) m.emplace(c.word, c.tag);
    return m;
  }();
  return map;
}

/// Cue hits per circumplex tag, in canonical order.
inline std::array<std::size_t, kCircumplexTagCount> lexicon_cue_counts(std::string_view text) {
  std::array<std::size_t, kCircumplexTagCount> counts{};
  const auto& cues = lexicon_cue_map();
  for (const auto& tok : text::tokenize(text)) {
    if (auto it = cues.find(tok); it != cues.end()) ++counts[index_of(it->second)];
  }
  return counts;
}

/// Tag with the most cue hits; ties go to the earlier tag in canonical
/// order, no hits gives Unassuming-Ingenuous, empty text Not Available.
inline SocialOrientationTag lexicon_tag(std::string_view text) {
  if (is_empty_text(text)) return SocialOrientationTag::NotAvailable;
  const auto counts = lexicon_cue_counts(text);
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return counts[best] == 0 ? SocialOrientationTag::UnassumingIngenuous : kCircumplexTags[best];
}

inline std::vector<TagAssignment> tag_with_lexicon(const Conversation& conv) {
  std::vector<TagAssignment> out;
  out.reserve(conv.utterances.size());
  for (const auto& u : conv.utterances) {
    out.push_back({u.id, lexicon_tag(u.text), TagSource::Lexicon, std::nullopt});
  }
  return out;
}

// Valence word lists for the sentiment fallback.
inline constexpr std::array<std::string_view, 22> kPositiveWords = {
    "good",   "great",     "thank",   "thanks",  "appreciate", "love",  "nice",   "glad",
    "happy",  "excellent", "awesome", "kind",    "helpful",    "agree", "welcome", "wonderful",
    "best",   "fair",      "respect", "perfect", "fun",        "好"};

inline constexpr std::array<std::string_view, 22> kNegativeWords = {
    "bad",      "wrong",    "stupid",     "idiot", "hate",     "terrible", "awful",  "pathetic",
    "useless",  "nonsense", "ridiculous", "liar",  "worst",    "annoying", "angry",  "shut",
    "problem",  "disagree", "fault",      "lying", "garbage",  "坏"};

struct SentimentAssignment {
  std::string utterance_id;
  SentimentTag tag = SentimentTag::NotAvailable;

  friend bool operator==(const SentimentAssignment&, const SentimentAssignment&) = default;
};

inline SentimentTag lexicon_sentiment(std::string_view text) {
  if (is_empty_text(text)) return SentimentTag::NotAvailable;
  int score = 0;
  for (const auto& tok : text::tokenize(text)) {
    for (auto w : kPositiveWords) {
      if (tok == w) ++score;
    }
    for (auto w : kNegativeWords) {
      if (tok == w) --score;
    }
  }
  if (score > 0) return SentimentTag::Positive;
  if (score < 0) return SentimentTag::Negative;
  return SentimentTag::Neutral;
}

inline std::vector<SentimentAssignment> sentiment_with_lexicon(const Conversation& conv) {
  std::vector<SentimentAssignment> out;
  out.reserve(conv.utterances.size());
  for (const auto& u : conv.utterances) out.push_back({u.id, lexicon_sentiment(u.text)});
  return out;
}

}  // namespace socorient::tagging
