#pragma once

// Conversation data model, convo-jsonl ingestion, outcome labeling
// conventions and seeded dataset construction (balanced pairing, stratified
// subsets, split assignment).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "socorient/error.hpp"
#include "socorient/rng.hpp"
#include "socorient/text.hpp"

namespace socorient {

enum class Outcome : std::uint8_t { Success, Failure, Unlabeled };
enum class Split : std::uint8_t { Train, Val, Test, Unassigned };

constexpr std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

constexpr std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

inline std::optional<Outcome> outcome_from_name(std::string_view s) {
  for (auto o : {Outcome::Success, Outcome::Failure, Outcome::Unlabeled}) {
    if (outcome_name(o) == s) return o;
  }
  return std::nullopt;
}

inline std::optional<Split> split_from_name(std::string_view s) {
  for (auto v : {Split::Train, Split::Val, Split::Test, Split::Unassigned}) {
    if (split_name(v) == s) return v;
  }
  return std::nullopt;
}

struct Utterance {
  std::string id;
  std::string speaker_id;
  std::string text;
  std::size_t position = 0;
  std::optional<bool> toxic;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  Outcome outcome = Outcome::Unlabeled;
  std::optional<std::string> source_page;
  Split split = Split::Unassigned;

  std::size_t speaker_count() const {
    std::unordered_set<std::string_view> speakers;
    for (const auto& u : utterances) speakers.insert(u.speaker_id);
    return speakers.size();
  }

  bool is_labeled() const { return outcome != Outcome::Unlabeled; }

  /// Renumbers positions to 0..n-1 in current order.
  void renumber() {
    for (std::size_t i = 0; i < utterances.size(); ++i) utterances[i].position = i;
  }

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// Immutable collection of conversations with unique ids.
class Corpus {
 public:
  Corpus() = default;

  /// Validates id uniqueness (conversations, and utterances within each
  /// conversation) and renumbers utterance positions.
  Corpus(std::string corpus_id, std::vector<Conversation> conversations)
      : id_(std::move(corpus_id)), conversations_(std::move(conversations)) {
    index_.reserve(conversations_.size());
    for (std::size_t i = 0; i < conversations_.size(); ++i) {
      auto& conv = conversations_[i];
      if (!index_.emplace(conv.id, i).second) {
        throw Error(Errc::DuplicateConversationId, "conversation id '" + conv.id + "'");
      }
      std::unordered_set<std::string_view> seen;
      for (const auto& u : conv.utterances) {
        if (!seen.insert(u.id).second) {
          throw Error(Errc::DuplicateUtteranceId,
                      "utterance id '" + u.id + "' in conversation '" + conv.id + "'");
        }
      }
      conv.renumber();
      ++label_counts_[conv.outcome];
    }
  }

  const std::string& id() const { return id_; }
  std::span<const Conversation> conversations() const { return conversations_; }
  std::size_t size() const { return conversations_.size(); }
  bool empty() const { return conversations_.empty(); }
  const Conversation& operator[](std::size_t i) const { return conversations_[i]; }
  auto begin() const { return conversations_.begin(); }
  auto end() const { return conversations_.end(); }

  const Conversation* find(std::string_view conversation_id) const {
    auto it = index_.find(std::string(conversation_id));
    return it == index_.end() ? nullptr : &conversations_[it->second];
  }

  /// Count per outcome; outcomes with no conversations are absent.
  const std::map<Outcome, std::size_t>& label_counts() const { return label_counts_; }

  std::size_t count(Outcome o) const {
    auto it = label_counts_.find(o);
    return it == label_counts_.end() ? 0 : it->second;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(conversations_.size());
    for (const auto& c : conversations_) out.push_back(c.id);
    return out;
  }

 private:
  std::string id_;
  std::vector<Conversation> conversations_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<Outcome, std::size_t> label_counts_;
};

namespace corpus {

inline constexpr std::string_view kConvoJsonl = "convo-jsonl";

namespace detail {

using nlohmann::json;

inline Conversation conversation_from_json(const json& j, std::uint64_t line) {
  auto fail = [line](const std::string& what) -> LocatedError {
    return LocatedError(Errc::MalformedRecord, line,
                        "line " + std::to_string(line) + ": " + what);
  };
  if (!j.is_object()) throw fail("record is not an object");

  Conversation conv;
  auto id = j.find("conversation_id");
  if (id == j.end() || !id->is_string()) throw fail("missing string field 'conversation_id'");
  conv.id = id->get<std::string>();

  if (auto sp = j.find("source_page"); sp != j.end() && !sp->is_null()) {
    if (!sp->is_string()) throw fail("'source_page' must be a string or null");
    conv.source_page = sp->get<std::string>();
  }

  if (auto oc = j.find("outcome"); oc != j.end() && !oc->is_null()) {
    if (!oc->is_string()) throw fail("'outcome' must be \"success\", \"failure\" or null");
    const auto s = oc->get<std::string>();
    if (s == "success") {
      conv.outcome = Outcome::Success;
    } else if (s == "failure") {
      conv.outcome = Outcome::Failure;
    } else {
      throw fail("unknown outcome '" + s + "'");
    }
  }

  if (auto sp = j.find("split"); sp != j.end() && !sp->is_null()) {
    auto parsed = sp->is_string() ? split_from_name(sp->get<std::string>()) : std::nullopt;
    if (!parsed) throw fail("'split' must be one of train/val/test/unassigned");
    conv.split = *parsed;
  }

  auto utts = j.find("utterances");
  if (utts == j.end() || !utts->is_array()) throw fail("missing array field 'utterances'");
  if (utts->empty()) throw fail("conversation has no utterances");
  for (std::size_t k = 0; k < utts->size(); ++k) {
    const auto& u = (*utts)[k];
    const std::string where = "utterance " + std::to_string(k) + ": ";
    if (!u.is_object()) throw fail(where + "not an object");
    Utterance utt;
    auto uid = u.find("utterance_id");
    if (uid == u.end() || !uid->is_string()) throw fail(where + "missing string 'utterance_id'");
    auto spk = u.find("speaker_id");
    if (spk == u.end() || !spk->is_string()) throw fail(where + "missing string 'speaker_id'");
    auto txt = u.find("text");
    if (txt == u.end() || !txt->is_string()) throw fail(where + "missing string 'text'");
    utt.id = uid->get<std::string>();
    utt.speaker_id = spk->get<std::string>();
    utt.text = txt->get<std::string>();
    if (auto tox = u.find("toxic"); tox != u.end() && !tox->is_null()) {
      if (!tox->is_boolean()) throw fail(where + "'toxic' must be a boolean");
      utt.toxic = tox->get<bool>();
    }
    utt.position = k;
    conv.utterances.push_back(std::move(utt));
  }
  return conv;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Conversation& conv) {
  nlohmann::ordered_json j;
  j["conversation_id"] = conv.id;
  j["source_page"] = conv.source_page ? nlohmann::ordered_json(*conv.source_page) : nullptr;
  j["outcome"] = conv.outcome == Outcome::Unlabeled
                     ? nlohmann::ordered_json(nullptr)
                     : nlohmann::ordered_json(std::string(outcome_name(conv.outcome)));
  if (conv.split != Split::Unassigned) j["split"] = std::string(split_name(conv.split));
  auto& utts = j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& u : conv.utterances) {
    nlohmann::ordered_json ju;
    ju["utterance_id"] = u.id;
    ju["speaker_id"] = u.speaker_id;
    ju["text"] = u.text;
    if (u.toxic) ju["toxic"] = *u.toxic;
    utts.push_back(std::move(ju));
  }
  return j;
}

/// Parses convo-jsonl text. Blank lines are skipped; line numbers in errors
/// are 1-based.
inline Corpus parse_corpus(std::string_view contents, std::string corpus_id) {
  std::vector<Conversation> convs;
  std::unordered_map<std::string, std::uint64_t> first_line;
  std::uint64_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    ++line_no;
    const std::string_view line = text::trim(contents.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LocatedError(Errc::MalformedRecord, line_no,
                         "line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    Conversation conv = detail::conversation_from_json(j, line_no);
    if (auto [it, inserted] = first_line.emplace(conv.id, line_no); !inserted) {
      throw LocatedError(Errc::DuplicateConversationId, line_no,
                         "line " + std::to_string(line_no) + ": conversation id '" + conv.id +
                             "' already defined on line " + std::to_string(it->second));
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& u : conv.utterances) {
      if (!seen.insert(u.id).second) {
        throw LocatedError(Errc::DuplicateUtteranceId, line_no,
                           "line " + std::to_string(line_no) + ": utterance id '" + u.id +
                               "' repeated in conversation '" + conv.id + "'");
      }
    }
    convs.push_back(std::move(conv));
  }
  return Corpus(std::move(corpus_id), std::move(convs));
}

/// Corpus id defaults to the file name without directory and extension.
inline std::string corpus_id_from_path(std::string_view path) {
  auto slash = path.find_last_of("/\\");
  std::string_view base = slash == std::string_view::npos ? path : path.substr(slash + 1);
  auto dot = base.find('.');
  return std::string(dot == std::string_view::npos ? base : base.substr(0, dot));
}

inline Corpus load_corpus(const std::string& path, std::string_view format_tag = kConvoJsonl) {
  if (format_tag != kConvoJsonl) {
    throw Error(Errc::InvalidArgument, "unsupported corpus format '" + std::string(format_tag) +
                                           "' (expected convo-jsonl)");
  }
  return parse_corpus(text::read_file(path), corpus_id_from_path(path));
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& conv : corpus) {
    out += to_json(conv).dump();
    out.push_back('\n');
  }
  return out;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  text::write_file_atomic(path, serialize_corpus(corpus));
}

/// Keeps only the context before the first toxic utterance. A conversation
/// with any toxic utterance is a Failure, otherwise a Success.
inline Conversation derive_context_and_label(const Conversation& conv) {
  Conversation out = conv;
  auto first_toxic = std::find_if(conv.utterances.begin(), conv.utterances.end(),
                                  [](const Utterance& u) { return u.toxic.value_or(false); });
  if (first_toxic == conv.utterances.end()) {
    out.outcome = Outcome::Success;
    return out;
  }
  const auto keep = static_cast<std::size_t>(first_toxic - conv.utterances.begin());
  if (keep == 0) {
    throw Error(Errc::EmptyContext,
                "conversation '" + conv.id + "' starts with a toxic utterance");
  }
  out.utterances.resize(keep);
  out.outcome = Outcome::Failure;
  return out;
}

/// Removes the final, outcome-revealing utterance.
inline Conversation drop_final_turn(const Conversation& conv) {
  if (conv.utterances.size() < 2) {
    throw Error(Errc::TooShort, "conversation '" + conv.id + "' has fewer than 2 utterances");
  }
  Conversation out = conv;
  out.utterances.pop_back();
  return out;
}

inline Corpus filter_candidates(const Corpus& corpus, std::size_t min_speakers = 2,
                                std::size_t min_turns = 1) {
  if (min_speakers < 1 || min_turns < 1) {
    throw Error(Errc::InvalidArgument, "min_speakers and min_turns must be >= 1");
  }
  std::vector<Conversation> kept;
  for (const auto& conv : corpus) {
    if (conv.utterances.size() >= min_turns && conv.speaker_count() >= min_speakers) {
      kept.push_back(conv);
    }
  }
  return Corpus(corpus.id(), std::move(kept));
}

/// Leading context filter from the Chinese pipeline: at least `min_turns`
/// utterances by `min_speakers` distinct speakers before the first toxic one.
inline bool has_pre_toxic_context(const Conversation& conv, std::size_t min_turns,
                                  std::size_t min_speakers) {
  std::unordered_set<std::string_view> speakers;
  std::size_t turns = 0;
  for (const auto& u : conv.utterances) {
    if (u.toxic.value_or(false)) break;
    ++turns;
    speakers.insert(u.speaker_id);
  }
  return turns >= min_turns && speakers.size() >= min_speakers;
}

struct PairingResult {
  std::vector<std::pair<Conversation, Conversation>> pairs;
  std::size_t dropped = 0;
};

/// Pairs every toxic conversation with an unused pool conversation from the
/// same source page, drawn uniformly with the given seed. Toxic conversations
/// without a partner (or without a source page) are dropped and counted.
inline PairingResult pair_balanced(std::span<const Conversation> toxic,
                                   std::span<const Conversation> pool, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_page;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].source_page) by_page[*pool[i].source_page].push_back(i);
  }
  SeededRng rng(seed);
  PairingResult result;
  for (const auto& t : toxic) {
    if (!t.source_page) {
      ++result.dropped;
      continue;
    }
    auto it = by_page.find(*t.source_page);
    if (it == by_page.end() || it->second.empty()) {
      ++result.dropped;
      continue;
    }
    auto& candidates = it->second;
    const std::size_t pick = rng.uniform_index(candidates.size());
    result.pairs.emplace_back(t, pool[candidates[pick]]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return result;
}

/// round(fraction * n), half away from zero, at least 1 when n > 0.
inline std::size_t stratum_quota(std::size_t n, double fraction) {
  if (n == 0) return 0;
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

/// Per-outcome sample without replacement. fraction == 1 returns the corpus
/// unchanged; selected conversations keep their original relative order.
inline Corpus stratified_subset(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Errc::InvalidArgument, "fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return corpus;

  std::map<Outcome, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[corpus[i].outcome].push_back(i);

  SeededRng rng(seed);
  std::vector<std::size_t> chosen;
  for (const auto& [outcome, members] : strata) {
    const std::size_t k = stratum_quota(members.size(), fraction);
    for (std::size_t j : rng.sample_without_replacement(members.size(), k)) {
      chosen.push_back(members[j]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Conversation> convs;
  convs.reserve(chosen.size());
  for (std::size_t i : chosen) convs.push_back(corpus[i]);
  return Corpus(corpus.id(), std::move(convs));
}

/// Stratified test/val/train assignment; everything not drawn for test or
/// val becomes train.
inline Corpus assign_splits(const Corpus& corpus, double test_fraction, double val_fraction,
                            std::uint64_t seed) {
  if (test_fraction < 0.0 || val_fraction < 0.0 || test_fraction + val_fraction >= 1.0) {
    throw Error(Errc::InvalidArgument, "test and val fractions must be >= 0 and sum below 1");
  }
  std::map<Outcome, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[corpus[i].outcome].push_back(i);

  std::vector<Conversation> convs(corpus.begin(), corpus.end());
  for (auto& c : convs) c.split = Split::Train;
  SeededRng rng(seed);
  for (const auto& [outcome, members] : strata) {
    auto order = rng.sample_without_replacement(members.size(), members.size());
    const auto n = static_cast<double>(members.size());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
    const auto n_val =
        std::min(static_cast<std::size_t>(std::llround(val_fraction * n)), members.size() - n_test);
    for (std::size_t k = 0; k < n_test; ++k) convs[members[order[k]]].split = Split::Test;
    for (std::size_t k = n_test; k < n_test + n_val; ++k) convs[members[order[k]]].split = Split::Val;
  }
  return Corpus(corpus.id(), std::move(convs));
}

inline Corpus select_split(const Corpus& corpus, Split split) {
  std::vector<Conversation> convs;
  for (const auto& c : corpus) {
    if (c.split == split) convs.push_back(c);
  }
  return Corpus(corpus.id(), std::move(convs));
}

inline Corpus select_labeled(const Corpus& corpus) {
  std::vector<Conversation> convs;
  for (const auto& c : corpus) {
    if (c.is_labeled()) convs.push_back(c);
  }
  return Corpus(corpus.id(), std::move(convs));
}

/// Stand-in for an external toxicity model: an utterance is toxic when any
/// of its tokens is on the keyword list. Only fills utterances whose flag is
/// unset.
class KeywordToxicityDetector {
 public:
  KeywordToxicityDetector()
      : keywords_{"idiot",  "stupid", "moron",   "dumb",    "shut",  "liar",
                  "loser",  "pathetic", "retard", "fuck",   "fucking", "bullshit",
                  "asshole", "jerk",  "scum",    "trash",   "hate",  "kill",
                  "白痴",   "滚",     "傻",      "蠢"} {}

  explicit KeywordToxicityDetector(std::vector<std::string> keywords)
      : keywords_(keywords.begin(), keywords.end()) {}

  bool is_toxic(std::string_view utterance_text) const {
    for (const auto& tok : text::tokenize(utterance_text)) {
      if (keywords_.contains(tok)) return true;
    }
    // Multi-character CJK keywords are matched as substrings.
    for (const auto& kw : keywords_) {
      if (text::char_count(kw) > 1 && static_cast<unsigned char>(kw[0]) >= 0x80 &&
          utterance_text.find(kw) != std::string_view::npos) {
        return true;
      }
    }
    return false;
  }

  Conversation annotate(const Conversation& conv) const {
    Conversation out = conv;
    for (auto& u : out.utterances) {
      if (!u.toxic) u.toxic = is_toxic(u.text);
    }
    return out;
  }

 private:
  std::set<std::string> keywords_;
};

}  // namespace corpus
}  // namespace socorient
