#pragma once

// Network tagger backends.
//
// Distilled-tagger protocol, one chunk per POST:
//   request  {"conversation_id": str, "window": int,
//             "utterances": [{"utterance_id": str, "speaker_id": str, "text": str}]}
//   response {"tags": [{"utterance_id": str, "tag": str, "confidence": number|null}]}
// Tag strings are the hyphenated display names ("Warm-Agreeable", "Not Available").
//
// LLM labeling goes through an OpenAI-style chat completions endpoint with the
// markdown prompt from prompt.hpp.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/http.hpp"
#include "socorient/tagging/chunking.hpp"
#include "socorient/tagging/lexicon.hpp"
#include "socorient/tagging/markdown.hpp"
#include "socorient/tagging/prompt.hpp"
#include "socorient/tags.hpp"

namespace socorient::tagging {

struct TaggerConfig {
  double temperature = 0.4;
  std::size_t context_window = 2;
  std::size_t max_chunk_chars = 12000;
  std::optional<std::string> endpoint;
  http::ClientOptions client;

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
    if (context_window < 1) throw Error(Errc::InvalidArgument, "context_window must be >= 1");
    if (max_chunk_chars < 1) throw Error(Errc::InvalidArgument, "max_chunk_chars must be >= 1");
  }
};

using ChunkTagger = std::function<std::vector<TagAssignment>(const PromptChunk&)>;

/// Shared driver: empty utterances get Not Available locally, the rest are
/// chunked, tagged chunk by chunk and merged. Output follows utterance order.
inline std::vector<TagAssignment> tag_by_chunks(const Conversation& conv,
                                                std::size_t max_chunk_chars,
                                                const ChunkTagger& tag_chunk,
                                                TagSource source) {
  std::vector<Utterance> spoken;
  for (const auto& u : conv.utterances) {
    if (!is_empty_text(u.text)) spoken.push_back(u);
  }
  std::vector<TagAssignment> merged;
  if (!spoken.empty()) {
    std::vector<ChunkTags> per_chunk;
    for (auto& chunk : chunk_utterances(conv.id, spoken, max_chunk_chars)) {
      auto tags = tag_chunk(chunk);
      per_chunk.emplace_back(std::move(chunk), std::move(tags));
    }
    merged = merge_chunk_tags(per_chunk);
  }
  std::vector<TagAssignment> out;
  out.reserve(conv.utterances.size());
  std::size_t k = 0;
  for (const auto& u : conv.utterances) {
    if (is_empty_text(u.text)) {
      out.push_back({u.id, SocialOrientationTag::NotAvailable, source, std::nullopt});
    } else {
      out.push_back(std::move(merged[k++]));
    }
  }
  return out;
}

inline nlohmann::json make_tag_request(const PromptChunk& chunk, std::size_t window) {
  nlohmann::json utts = nlohmann::json::array();
  for (const auto& u : chunk.utterances) {
    utts.push_back({{"utterance_id", u.id}, {"speaker_id", u.speaker_id}, {"text", u.text}});
  }
  return {{"conversation_id", chunk.conversation_id}, {"window", window}, {"utterances", utts}};
}

/// Validates a distilled-tagger response against the chunk it answers.
inline std::vector<TagAssignment> parse_tag_response(const nlohmann::json& response,
                                                     const PromptChunk& chunk) {
  auto bad = [](const std::string& what) { return Error(Errc::ProtocolError, what); };
  if (!response.is_object()) throw bad("response is not an object");
  auto tags = response.find("tags");
  if (tags == response.end() || !tags->is_array()) throw bad("response lacks a 'tags' array");

  std::unordered_set<std::string> in_chunk;
  for (const auto& u : chunk.utterances) in_chunk.insert(u.id);

  std::vector<TagAssignment> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : *tags) {
    if (!t.is_object()) throw bad("tag entry is not an object");
    auto uid = t.find("utterance_id");
    auto tag = t.find("tag");
    if (uid == t.end() || !uid->is_string()) throw bad("tag entry lacks string 'utterance_id'");
    if (tag == t.end() || !tag->is_string()) throw bad("tag entry lacks string 'tag'");
    TagAssignment a;
    a.utterance_id = uid->get<std::string>();
    a.source = TagSource::Distilled;
    if (!in_chunk.contains(a.utterance_id)) {
      throw bad("tag for utterance '" + a.utterance_id + "' which was not requested");
    }
    if (!seen.insert(a.utterance_id).second) {
      throw bad("duplicate tag for utterance '" + a.utterance_id + "'");
    }
    auto parsed = tag_from_name(tag->get<std::string>());
    if (!parsed) throw bad("unknown tag '" + tag->get<std::string>() + "'");
    a.tag = *parsed;
    if (auto c = t.find("confidence"); c != t.end() && !c->is_null()) {
      if (!c->is_number()) throw bad("'confidence' must be a number or null");
      const double v = c->get<double>();
      if (!(v >= 0.0 && v <= 1.0)) throw bad("'confidence' outside [0, 1]");
      a.confidence = v;
    }
    out.push_back(std::move(a));
  }
  return out;
}

/// Tags one conversation through a distilled-tagger endpoint.
inline std::vector<TagAssignment> tag_with_remote(const Conversation& conv,
                                                  const TaggerConfig& config) {
  config.validate();
  if (!config.endpoint) throw Error(Errc::InvalidArgument, "remote tagger endpoint not configured");
  const auto ep = http::parse_endpoint(*config.endpoint);
  return tag_by_chunks(
      conv, config.max_chunk_chars,
      [&](const PromptChunk& chunk) {
        return parse_tag_response(
            http::post_json(ep, make_tag_request(chunk, config.context_window), config.client),
            chunk);
      },
      TagSource::Distilled);
}

struct LlmConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model = "gpt-4-0314";
  std::optional<std::string> api_key;
  double temperature = 0.4;
  std::size_t max_chunk_chars = 12000;
  http::ClientOptions client;
};

inline nlohmann::json make_chat_request(const PromptMessages& prompt, const LlmConfig& cfg) {
  return {{"model", cfg.model},
          {"temperature", cfg.temperature},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                  {{"role", "user"}, {"content", prompt.user}}})}};
}

inline std::string chat_response_content(const nlohmann::json& response) {
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ProtocolError, "chat response lacks choices[0].message.content");
  }
}

/// Every prompt that tagging `conv` would send, in order.
inline std::vector<std::string> prompts_for(const Conversation& conv, std::size_t max_chunk_chars,
                                            std::string_view definitions,
                                            std::span<const FewshotExample> fewshot) {
  std::vector<Utterance> spoken;
  for (const auto& u : conv.utterances) {
    if (!is_empty_text(u.text)) spoken.push_back(u);
  }
  std::vector<std::string> out;
  if (spoken.empty()) return out;
  for (const auto& chunk : chunk_utterances(conv.id, spoken, max_chunk_chars)) {
    out.push_back(build_prompt(chunk, definitions, fewshot));
  }
  return out;
}

inline std::vector<TagAssignment> tag_with_llm(const Conversation& conv, const LlmConfig& cfg,
                                               std::string_view definitions,
                                               std::span<const FewshotExample> fewshot) {
  const auto ep = http::parse_endpoint(cfg.endpoint);
  http::ClientOptions opts = cfg.client;
  if (cfg.api_key) opts.headers.emplace_back("Authorization", "Bearer " + *cfg.api_key);
  return tag_by_chunks(
      conv, cfg.max_chunk_chars,
      [&](const PromptChunk& chunk) {
        const auto prompt = build_prompt_messages(chunk, definitions, fewshot);
        const auto response = http::post_json(ep, make_chat_request(prompt, cfg), opts);
        const auto expected = chunk.expected();
        return parse_tag_table(chat_response_content(response), expected, TagSource::LLM);
      },
      TagSource::LLM);
}

}  // namespace socorient::tagging
