#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace socorient {

/// The eight interpersonal circumplex orientations, in circular order, plus
/// NotAvailable for empty utterances. Adjacent enumerators are neighbours on
/// the circle and ArrogantCalculating wraps around to AssuredDominant.
enum class SocialOrientationTag : std::uint8_t {
  AssuredDominant = 0,
  GregariousExtraverted,
  WarmAgreeable,
  UnassumingIngenuous,
  UnassuredSubmissive,
  AloofIntroverted,
  Cold,
  ArrogantCalculating,
  NotAvailable,
};

inline constexpr std::size_t kCircumplexTagCount = 8;
inline constexpr std::size_t kSocialTagCount = 9;

inline constexpr std::array<SocialOrientationTag, kCircumplexTagCount> kCircumplexTags = {
    SocialOrientationTag::AssuredDominant,     SocialOrientationTag::GregariousExtraverted,
    SocialOrientationTag::WarmAgreeable,       SocialOrientationTag::UnassumingIngenuous,
    SocialOrientationTag::UnassuredSubmissive, SocialOrientationTag::AloofIntroverted,
    SocialOrientationTag::Cold,                SocialOrientationTag::ArrogantCalculating,
};

inline constexpr std::array<SocialOrientationTag, kSocialTagCount> kSocialTags = {
    SocialOrientationTag::AssuredDominant,     SocialOrientationTag::GregariousExtraverted,
    SocialOrientationTag::WarmAgreeable,       SocialOrientationTag::UnassumingIngenuous,
    SocialOrientationTag::UnassuredSubmissive, SocialOrientationTag::AloofIntroverted,
    SocialOrientationTag::Cold,                SocialOrientationTag::ArrogantCalculating,
    SocialOrientationTag::NotAvailable,
};

constexpr std::size_t index_of(SocialOrientationTag t) { return static_cast<std::size_t>(t); }

constexpr bool is_circumplex(SocialOrientationTag t) {
  return t != SocialOrientationTag::NotAvailable;
}

/// Display name with hyphens, e.g. "Warm-Agreeable", "Not Available".
constexpr std::string_view tag_name(SocialOrientationTag t) {
  switch (t) {
    case SocialOrientationTag::AssuredDominant: return "Assured-Dominant";
    case SocialOrientationTag::GregariousExtraverted: return "Gregarious-Extraverted";
    case SocialOrientationTag::WarmAgreeable: return "Warm-Agreeable";
    case SocialOrientationTag::UnassumingIngenuous: return "Unassuming-Ingenuous";
    case SocialOrientationTag::UnassuredSubmissive: return "Unassured-Submissive";
    case SocialOrientationTag::AloofIntroverted: return "Aloof-Introverted";
    case SocialOrientationTag::Cold: return "Cold";
    case SocialOrientationTag::ArrogantCalculating: return "Arrogant-Calculating";
    case SocialOrientationTag::NotAvailable: return "Not Available";
  }
  return "Not Available";
}

/// Exact wire-name lookup (protocol and cache files).
inline std::optional<SocialOrientationTag> tag_from_name(std::string_view name) {
  for (auto t : kSocialTags) {
    if (tag_name(t) == name) return t;
  }
  return std::nullopt;
}

namespace detail {
// Lowercase with spaces, hyphens and underscores removed.
inline std::string squash_tag_string(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '-' || c == '_' || c == '\t') continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
  }
  return out;
}
}  // namespace detail

/// Case-insensitive, hyphen/space tolerant lookup ("warm agreeable",
/// "WARM-AGREEABLE", "WarmAgreeable"). NotAvailable is only accepted when
/// `allow_not_available` is set.
inline std::optional<SocialOrientationTag> parse_tag_lenient(std::string_view s,
                                                             bool allow_not_available) {
  const std::string key = detail::squash_tag_string(s);
  if (key.empty()) return std::nullopt;
  for (auto t : kSocialTags) {
    if (!allow_not_available && !is_circumplex(t)) continue;
    if (detail::squash_tag_string(tag_name(t)) == key) return t;
  }
  return std::nullopt;
}

/// Steps between two circumplex tags around the circle (0..4).
constexpr int circumplex_distance(SocialOrientationTag a, SocialOrientationTag b) {
  const int d = static_cast<int>(index_of(a)) - static_cast<int>(index_of(b));
  const int ad = d < 0 ? -d : d;
  return ad > 4 ? 8 - ad : ad;
}

constexpr bool are_neighbors(SocialOrientationTag a, SocialOrientationTag b) {
  return is_circumplex(a) && is_circumplex(b) && circumplex_distance(a, b) == 1;
}

/// Unordered pair of tags, stored with the lower canonical index first.
struct TagPair {
  SocialOrientationTag first;
  SocialOrientationTag second;

  static constexpr TagPair of(SocialOrientationTag a, SocialOrientationTag b) {
    return index_of(a) <= index_of(b) ? TagPair{a, b} : TagPair{b, a};
  }

  friend constexpr bool operator==(const TagPair&, const TagPair&) = default;
  friend constexpr auto operator<=>(const TagPair& x, const TagPair& y) {
    return std::pair(index_of(x.first), index_of(x.second)) <=>
           std::pair(index_of(y.first), index_of(y.second));
  }
};

enum class SentimentTag : std::uint8_t { Negative = 0, Neutral, Positive, NotAvailable };

inline constexpr std::size_t kSentimentTagCount = 4;
inline constexpr std::array<SentimentTag, kSentimentTagCount> kSentimentTags = {
    SentimentTag::Negative, SentimentTag::Neutral, SentimentTag::Positive,
    SentimentTag::NotAvailable};

constexpr std::string_view sentiment_name(SentimentTag t) {
  switch (t) {
    case SentimentTag::Negative: return "Negative";
    case SentimentTag::Neutral: return "Neutral";
    case SentimentTag::Positive: return "Positive";
    case SentimentTag::NotAvailable: return "Not Available";
  }
  return "Not Available";
}

/// Where a tag came from.
enum class TagSource : std::uint8_t { Human, LLM, Distilled, Lexicon };

constexpr std::string_view source_name(TagSource s) {
  switch (s) {
    case TagSource::Human: return "human";
    case TagSource::LLM: return "llm";
    case TagSource::Distilled: return "distilled";
    case TagSource::Lexicon: return "lexicon";
  }
  return "human";
}

inline std::optional<TagSource> source_from_name(std::string_view s) {
  for (auto v : {TagSource::Human, TagSource::LLM, TagSource::Distilled, TagSource::Lexicon}) {
    if (source_name(v) == s) return v;
  }
  return std::nullopt;
}

/// One tag attached to one utterance.
struct TagAssignment {
  std::string utterance_id;
  SocialOrientationTag tag = SocialOrientationTag::NotAvailable;
  TagSource source = TagSource::Lexicon;
  std::optional<double> confidence;

  friend bool operator==(const TagAssignment&, const TagAssignment&) = default;
};

}  // namespace socorient
