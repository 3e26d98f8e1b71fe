#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/tagging/markdown.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::tagging {

/// A contiguous slice of one conversation that fits in a single prompt.
/// When `overlap_head` is set, the first utterance repeats the previous
/// chunk's last one.
struct PromptChunk {
  std::string conversation_id;
  std::vector<Utterance> utterances;
  bool overlap_head = false;

  std::vector<ExpectedUtterance> expected() const {
    std::vector<ExpectedUtterance> out;
    out.reserve(utterances.size());
    for (const auto& u : utterances) out.push_back({u.id, u.speaker_id});
    return out;
  }
};

/// Budget cost of one utterance: code points of its rendered table row.
inline std::size_t rendered_size(const Utterance& u) {
  return text::char_count(render_row(u.id, u.speaker_id, u.text));
}

/// Greedy packing in order. When the next utterance would overflow the
/// budget a new chunk is started that repeats the previous chunk's last
/// utterance, so consecutive chunks share exactly one utterance.
inline std::vector<PromptChunk> chunk_utterances(const std::string& conversation_id,
                                                 std::span<const Utterance> utterances,
                                                 std::size_t max_chunk_chars) {
  std::vector<std::size_t> cost(utterances.size());
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    cost[i] = rendered_size(utterances[i]);
    if (cost[i] > max_chunk_chars) {
      throw Error(Errc::UtteranceTooLong,
                  "utterance '" + utterances[i].id + "' renders to " + std::to_string(cost[i]) +
                      " characters, budget is " + std::to_string(max_chunk_chars));
    }
  }

  std::vector<PromptChunk> chunks;
  if (utterances.empty()) return chunks;

  PromptChunk cur{conversation_id, {utterances[0]}, false};
  std::size_t used = cost[0];
  for (std::size_t i = 1; i < utterances.size(); ++i) {
    if (used + cost[i] <= max_chunk_chars) {
      cur.utterances.push_back(utterances[i]);
      used += cost[i];
      continue;
    }
    const std::size_t head = i - 1;
    if (cost[head] + cost[i] > max_chunk_chars) {
      throw Error(Errc::UtteranceTooLong,
                  "utterance '" + utterances[i].id + "' does not fit next to the overlap utterance '" +
                      utterances[head].id + "' within " + std::to_string(max_chunk_chars) +
                      " characters");
    }
    chunks.push_back(std::move(cur));
    cur = PromptChunk{conversation_id, {utterances[head], utterances[i]}, true};
    used = cost[head] + cost[i];
  }
  chunks.push_back(std::move(cur));
  return chunks;
}

inline std::vector<PromptChunk> chunk_for_prompt(const Conversation& conv,
                                                 std::size_t max_chunk_chars) {
  return chunk_utterances(conv.id, conv.utterances, max_chunk_chars);
}

/// Inverse of chunking: drops each chunk's overlap head and concatenates.
inline std::vector<Utterance> reconstruct(std::span<const PromptChunk> chunks) {
  std::vector<Utterance> out;
  for (const auto& c : chunks) {
    for (std::size_t k = c.overlap_head ? 1 : 0; k < c.utterances.size(); ++k) {
      out.push_back(c.utterances[k]);
    }
  }
  return out;
}

using ChunkTags = std::pair<PromptChunk, std::vector<TagAssignment>>;

/// One assignment per utterance, in conversation order. An overlap utterance
/// keeps the tag from the earlier chunk, which saw more of the preceding
/// context.
inline std::vector<TagAssignment> merge_chunk_tags(std::span<const ChunkTags> per_chunk) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::optional<TagAssignment>> merged;
  for (const auto& [chunk, assignments] : per_chunk) {
    std::unordered_map<std::string_view, const TagAssignment*> by_id;
    for (const auto& a : assignments) by_id.emplace(a.utterance_id, &a);
    for (const auto& u : chunk.utterances) {
      auto [it, inserted] = merged.try_emplace(u.id);
      if (inserted) order.push_back(u.id);
      if (it->second) continue;  // earlier chunk wins
      if (auto f = by_id.find(u.id); f != by_id.end()) it->second = *f->second;
    }
  }
  std::vector<TagAssignment> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& slot = merged.at(id);
    if (!slot) throw Error(Errc::CoverageGap, "no tag for utterance '" + id + "'");
    out.push_back(std::move(*slot));
  }
  return out;
}

}  // namespace socorient::tagging
