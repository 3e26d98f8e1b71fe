#pragma once

// Persistent tag store. Line-delimited JSON: an optional header record
// {"corpus_id": ..., "format": "socorient-tag-cache", "version": 1}
// followed by one record per utterance
// {"conversation_id": ..., "utterance_id": ..., "tag": ..., "source": ..., "confidence": ...}.
// Every record, including the last, ends with '\n'; a missing terminator is
// treated as truncation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::tagging {

/// Tags grouped by conversation, remembering insertion order. Records that
/// carry no conversation id are kept in a flat utterance-id map and used as
/// a fallback lookup.
class TagIndex {
 public:
  void set(const std::string& conversation_id, std::vector<TagAssignment> tags) {
    auto [it, inserted] = by_conversation_.insert_or_assign(conversation_id, std::move(tags));
    if (inserted) order_.push_back(conversation_id);
  }

  void add_loose(TagAssignment a) {
    if (!loose_.contains(a.utterance_id)) loose_order_.push_back(a.utterance_id);
    loose_.insert_or_assign(a.utterance_id, std::move(a));
  }

  const std::vector<TagAssignment>* find(const std::string& conversation_id) const {
    auto it = by_conversation_.find(conversation_id);
    return it == by_conversation_.end() ? nullptr : &it->second;
  }

  const TagAssignment* find_loose(const std::string& utterance_id) const {
    auto it = loose_.find(utterance_id);
    return it == loose_.end() ? nullptr : &it->second;
  }

  /// True when every utterance of `conv` has a tag.
  bool covers(const Conversation& conv) const {
    try {
      (void)for_conversation(conv);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  /// Tags aligned with the conversation's utterances.
  std::vector<TagAssignment> for_conversation(const Conversation& conv) const {
    std::unordered_map<std::string_view, const TagAssignment*> by_utt;
    if (const auto* tags = find(conv.id)) {
      for (const auto& a : *tags) by_utt.emplace(a.utterance_id, &a);
    }
    std::vector<TagAssignment> out;
    out.reserve(conv.utterances.size());
    for (const auto& u : conv.utterances) {
      const TagAssignment* a = nullptr;
      if (auto it = by_utt.find(u.id); it != by_utt.end()) a = it->second;
      if (!a) a = find_loose(u.id);
      if (!a) {
        throw Error(Errc::MissingTag,
                    "no tag for utterance '" + u.id + "' of conversation '" + conv.id + "'");
      }
      out.push_back(*a);
    }
    return out;
  }

  const std::vector<std::string>& conversation_order() const { return order_; }
  std::size_t conversation_count() const { return order_.size(); }
  bool empty() const { return order_.empty() && loose_.empty(); }

  std::vector<TagAssignment> loose() const {
    std::vector<TagAssignment> out;
    out.reserve(loose_order_.size());
    for (const auto& id : loose_order_) out.push_back(loose_.at(id));
    return out;
  }

  /// Every assignment: grouped ones in conversation order, then loose ones.
  std::vector<TagAssignment> all() const {
    std::vector<TagAssignment> out;
    for (const auto& id : order_) {
      const auto& v = by_conversation_.at(id);
      out.insert(out.end(), v.begin(), v.end());
    }
    auto rest = loose();
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
  }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::vector<TagAssignment>> by_conversation_;
  std::vector<std::string> loose_order_;
  std::unordered_map<std::string, TagAssignment> loose_;
};

struct TagCache {
  std::string corpus_id;
  TagIndex tags;
};

inline constexpr std::string_view kTagCacheFormat = "socorient-tag-cache";

namespace detail {

inline std::string cache_header_line(std::string_view corpus_id) {
  nlohmann::ordered_json h;
  h["corpus_id"] = corpus_id;
  h["format"] = kTagCacheFormat;
  h["version"] = 1;
  return h.dump() + "\n";
}

inline std::string cache_record_line(const std::string* conversation_id, const TagAssignment& a) {
  nlohmann::ordered_json j;
  if (conversation_id) j["conversation_id"] = *conversation_id;
  j["utterance_id"] = a.utterance_id;
  j["tag"] = tag_name(a.tag);
  j["source"] = source_name(a.source);
  j["confidence"] = a.confidence ? nlohmann::ordered_json(*a.confidence) : nullptr;
  return j.dump() + "\n";
}

}  // namespace detail

inline std::string serialize_tag_cache(std::string_view corpus_id, const TagIndex& index) {
  std::string out = detail::cache_header_line(corpus_id);
  for (const auto& conv_id : index.conversation_order()) {
    for (const auto& a : *index.find(conv_id)) out += detail::cache_record_line(&conv_id, a);
  }
  for (const auto& a : index.loose()) out += detail::cache_record_line(nullptr, a);
  return out;
}

inline void cache_store(std::string_view corpus_id, const TagIndex& index, const std::string& path) {
  text::write_file_atomic(path, serialize_tag_cache(corpus_id, index));
}

/// Stores assignments that are not grouped by conversation.
inline void cache_store(std::string_view corpus_id, std::span<const TagAssignment> assignments,
                        const std::string& path) {
  TagIndex index;
  for (const auto& a : assignments) index.add_loose(a);
  cache_store(corpus_id, index, path);
}

inline TagCache parse_tag_cache(std::string_view contents) {
  TagCache cache;
  std::vector<std::string> conv_order;
  std::unordered_map<std::string, std::vector<TagAssignment>> grouped;
  std::unordered_set<std::string> seen;  // conversation_id + '\n' + utterance_id + '\n' + source

  std::size_t offset = 0;
  bool first = true;
  while (offset < contents.size()) {
    const std::size_t nl = contents.find('\n', offset);
    if (nl == std::string_view::npos) {
      throw LocatedError(Errc::CorruptCache, offset,
                         "truncated record at byte " + std::to_string(offset));
    }
    const std::string_view line = contents.substr(offset, nl - offset);
    const std::size_t line_start = offset;
    offset = nl + 1;
    if (text::trim(line).empty()) continue;

    auto corrupt = [line_start](const std::string& what) {
      return LocatedError(Errc::CorruptCache, line_start,
                          "byte " + std::to_string(line_start) + ": " + what);
    };

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw corrupt("invalid JSON");
    }
    if (!j.is_object()) throw corrupt("record is not an object");

    if (first && j.contains("format")) {
      first = false;
      const auto& fmt = j["format"];
      if (!fmt.is_string() || fmt.get<std::string>() != kTagCacheFormat) {
        throw corrupt("unknown cache format");
      }
      if (auto c = j.find("corpus_id"); c != j.end() && c->is_string()) {
        cache.corpus_id = c->get<std::string>();
      }
      continue;
    }
    first = false;

    auto uid = j.find("utterance_id");
    auto tag = j.find("tag");
    auto src = j.find("source");
    if (uid == j.end() || !uid->is_string()) throw corrupt("missing string 'utterance_id'");
    if (tag == j.end() || !tag->is_string()) throw corrupt("missing string 'tag'");
    if (src == j.end() || !src->is_string()) throw corrupt("missing string 'source'");

    TagAssignment a;
    a.utterance_id = uid->get<std::string>();
    auto parsed_tag = tag_from_name(tag->get<std::string>());
    if (!parsed_tag) throw corrupt("unknown tag '" + tag->get<std::string>() + "'");
    a.tag = *parsed_tag;
    auto parsed_src = source_from_name(src->get<std::string>());
    if (!parsed_src) throw corrupt("unknown source '" + src->get<std::string>() + "'");
    a.source = *parsed_src;
    if (auto conf = j.find("confidence"); conf != j.end() && !conf->is_null()) {
      if (!conf->is_number()) throw corrupt("'confidence' must be a number or null");
      a.confidence = conf->get<double>();
    }

    std::string conv_id;
    if (auto cid = j.find("conversation_id"); cid != j.end() && !cid->is_null()) {
      if (!cid->is_string()) throw corrupt("'conversation_id' must be a string");
      conv_id = cid->get<std::string>();
    }
    const std::string key =
        conv_id + '\n' + a.utterance_id + '\n' + std::string(source_name(a.source));
    if (!seen.insert(key).second) {
      throw corrupt("duplicate record for utterance '" + a.utterance_id + "'");
    }
    if (conv_id.empty()) {
      cache.tags.add_loose(std::move(a));
    } else {
      auto [it, inserted] = grouped.try_emplace(conv_id);
      if (inserted) conv_order.push_back(conv_id);
      it->second.push_back(std::move(a));
    }
  }
  for (const auto& id : conv_order) cache.tags.set(id, std::move(grouped[id]));
  return cache;
}

inline TagCache cache_load(const std::string& path) {
  return parse_tag_cache(text::read_file(path));
}

/// Appends one conversation's tags per call, flushing each time, so an
/// interrupted run leaves a loadable prefix.
class TagCacheWriter {
 public:
  TagCacheWriter(const std::string& path, std::string_view corpus_id) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error(Errc::Io, "cannot open " + path + " for appending");
    if (fresh) write(detail::cache_header_line(corpus_id));
  }

  void append(const std::string& conversation_id, std::span<const TagAssignment> tags) {
    std::string block;
    for (const auto& a : tags) block += detail::cache_record_line(&conversation_id, a);
    write(block);
  }

 private:
  void write(const std::string& s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    out_.flush();
    if (!out_) throw Error(Errc::Io, "write to tag cache failed");
  }

  std::ofstream out_;
};

}  // namespace socorient::tagging
