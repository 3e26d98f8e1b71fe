#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/tagging/chunking.hpp"
#include "socorient/tagging/markdown.hpp"
#include "socorient/tagging/prompt_assets.hpp"
#include "socorient/tags.hpp"

namespace socorient::tagging {

/// A labeled conversation shown to the model before the target.
struct FewshotExample {
  Conversation conversation;
  std::vector<SocialOrientationTag> labels;  // one per utterance
};

/// Parses few-shot examples from JSONL where each utterance carries "label".
inline std::vector<FewshotExample> parse_fewshot(std::string_view jsonl) {
  std::vector<FewshotExample> out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(jsonl, '\n')) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(raw);
      FewshotExample ex;
      ex.conversation.id = j.at("conversation_id").get<std::string>();
      for (const auto& u : j.at("utterances")) {
        Utterance utt;
        utt.id = u.at("utterance_id").get<std::string>();
        utt.speaker_id = u.at("speaker_id").get<std::string>();
        utt.text = u.at("text").get<std::string>();
        utt.position = ex.conversation.utterances.size();
        const auto label = u.at("label").get<std::string>();
        auto tag = tag_from_name(label);
        if (!tag || !is_circumplex(*tag)) {
          throw Error(Errc::UnknownTag, "few-shot label '" + label + "'");
        }
        ex.conversation.utterances.push_back(std::move(utt));
        ex.labels.push_back(*tag);
      }
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw LocatedError(Errc::MalformedRecord, line_no,
                         "few-shot line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// The four shipped example conversations.
inline const std::vector<FewshotExample>& default_fewshot() {
  static const std::vector<FewshotExample> examples = parse_fewshot(assets::kFewshotJsonl);
  return examples;
}

inline std::string_view default_definitions() { return assets::kTagDefinitions; }

struct PromptMessages {
  std::string system;
  std::string user;

  /// Single-string form: "System Prompt: ...\n\nUser Input: ...".
  std::string render() const { return "System Prompt: " + system + "\n\nUser Input: " + user; }
};

inline PromptMessages build_prompt_messages(const PromptChunk& chunk, std::string_view definitions,
                                            std::span<const FewshotExample> fewshot) {
  for (auto t : kCircumplexTags) {
    if (definitions.find(tag_name(t)) == std::string_view::npos) {
      throw Error(Errc::InvalidArgument,
                  "tag definitions do not cover '" + std::string(tag_name(t)) + "'");
    }
  }
  std::string user;
  user += assets::kTaskIntro;
  user += "\n\n";
  user += definitions;
  user += "\n\n";
  user += assets::kTableInstructions;
  user += '\n';
  for (const auto& ex : fewshot) {
    const auto& utts = ex.conversation.utterances;
    if (ex.labels.size() != utts.size()) {
      throw Error(Errc::InvalidArgument,
                  "few-shot example '" + ex.conversation.id + "' has mismatched labels");
    }
    std::vector<LabelRow> rows;
    rows.reserve(utts.size());
    for (std::size_t i = 0; i < utts.size(); ++i) {
      rows.push_back({utts[i].id, utts[i].speaker_id, ex.labels[i]});
    }
    user += "---\n";
    user += render_text_table(utts);
    user += '\n';
    user += render_label_table(rows);
  }
  user += "---\n";
  user += render_text_table(chunk.utterances);
  return {std::string(assets::kSystemPrompt), std::move(user)};
}

/// Full prompt text for one chunk: system line, tag definitions, the
/// few-shot input/label table pairs, then the target table.
inline std::string build_prompt(const PromptChunk& chunk, std::string_view definitions,
                                std::span<const FewshotExample> fewshot) {
  return build_prompt_messages(chunk, definitions, fewshot).render();
}

inline std::string build_prompt(const PromptChunk& chunk) {
  return build_prompt(chunk, default_definitions(), default_fewshot());
}

}  // namespace socorient::tagging
