#include <gtest/gtest.h>

#include <atomic>

#include "socorient/tagging/cache.hpp"
#include "socorient/tagging/chunking.hpp"
#include "socorient/tagging/lexicon.hpp"
#include "socorient/tagging/markdown.hpp"
#include "socorient/tagging/prompt.hpp"
#include "socorient/tagging/remote.hpp"
#include "support.hpp"

using namespace socorient;
using namespace socorient::tagging;
using namespace testing_support;
using T = SocialOrientationTag;

namespace {

std::string data_file(const std::string& name) {
  return text::read_file(std::string(SOCORIENT_TEST_DATA) + "/" + name);
}

std::vector<Utterance> numbered(std::size_t n, std::size_t text_len) {
  std::vector<Utterance> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(utt(std::to_string(i), "s" + std::to_string(i % 2), std::string(text_len, 'x')));
  }
  return out;
}

std::string table_reply(std::span<const Utterance> utts, T t) {
  std::vector<LabelRow> rows;
  for (const auto& u : utts) rows.push_back({u.id, u.speaker_id, t});
  return "Sure, here are the labels.\n\n" + render_label_table(rows) + "\nDone.";
}

}  // namespace

// --- tag names ------------------------------------------------------------

TEST(Tags, CanonicalNamesRoundTrip) {
  for (auto t : kSocialTags) EXPECT_EQ(tag_from_name(tag_name(t)), t);
  EXPECT_EQ(tag_name(T::NotAvailable), "Not Available");
  EXPECT_FALSE(tag_from_name("warm-agreeable").has_value());
}

TEST(Tags, LenientParsingIsCaseAndSeparatorInsensitive) {
  EXPECT_EQ(parse_tag_lenient("warm agreeable", false), T::WarmAgreeable);
  EXPECT_EQ(parse_tag_lenient(" ARROGANT_calculating ", false), T::ArrogantCalculating);
  EXPECT_FALSE(parse_tag_lenient("Not Available", false).has_value());
  EXPECT_EQ(parse_tag_lenient("not-available", true), T::NotAvailable);
  EXPECT_FALSE(parse_tag_lenient("Friendly", true).has_value());
}

// --- markdown -------------------------------------------------------------

TEST(Markdown, EscapesPipesBackslashesAndNewlines) {
  const std::string nasty = "a|b\\c\nd\re";
  const auto esc = escape_cell(nasty);
  EXPECT_EQ(esc.find('\n'), std::string::npos);
  EXPECT_EQ(unescape_cell(esc), nasty);
  const auto row = render_row("1", "s|x", "t\\|");
  const auto cells = split_row(row);
  ASSERT_TRUE(cells.has_value());
  ASSERT_EQ(cells->size(), 3u);
  EXPECT_EQ(unescape_cell((*cells)[1]), "s|x");
  EXPECT_EQ(unescape_cell((*cells)[2]), "t\\|");
}

TEST(Markdown, ParseTagTableFollowsExpectedOrder) {
  const std::vector<ExpectedUtterance> expected{{"1", "a"}, {"2", "b"}};
  const std::string reply =
      "| Utterance ID | Speaker ID | Label |\n| --- | --- | --- |\n"
      "| 2 | b | cold |\n| 1 | a | Warm-Agreeable |\n";
  const auto r = parse_tag_table(reply, expected);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].utterance_id, "1");
  EXPECT_EQ(r[0].tag, T::WarmAgreeable);
  EXPECT_EQ(r[1].tag, T::Cold);
  EXPECT_EQ(r[1].source, TagSource::LLM);
}

TEST(Markdown, ParseTagTableRejectsBadReplies) {
  const std::vector<ExpectedUtterance> expected{{"1", "a"}, {"2", "b"}};
  const std::string head = "| Utterance ID | Speaker ID | Label |\n| --- | --- | --- |\n";
  auto code = [&](const std::string& reply) {
    try {
      parse_tag_table(reply, expected);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;  // sentinel: nothing thrown
  };
  EXPECT_EQ(code("no table here"), Errc::MalformedTable);
  EXPECT_EQ(code(head + "| 1 | a | Warm-Agreeable | extra |\n"), Errc::MalformedTable);
  EXPECT_EQ(code(head + "| 1 | a | Friendly |\n| 2 | b | Cold |\n"), Errc::UnknownTag);
  EXPECT_EQ(code(head + "| 1 | a | Cold |\n| 9 | b | Cold |\n"), Errc::IdMismatch);
  EXPECT_EQ(code(head + "| 1 | a | Cold |\n| 1 | a | Cold |\n"), Errc::IdMismatch);
  EXPECT_EQ(code(head + "| 1 | zz | Cold |\n| 2 | b | Cold |\n"), Errc::IdMismatch);
  EXPECT_EQ(code(head + "| 1 | a | Cold |\n"), Errc::MissingUtterance);
  EXPECT_EQ(code(head + "| 1 | a | Not Available |\n| 2 | b | Cold |\n"), Errc::UnknownTag);
}

TEST(Markdown, RenderedTableRoundTripsRandomChunks) {
  SeededRng rng(11);
  for (int k = 0; k < 50; ++k) {
    auto tc = random_tagged(rng, "c" + std::to_string(k), 1 + rng.uniform_index(30), 3, false, 40);
    std::vector<LabelRow> rows;
    std::vector<ExpectedUtterance> expected;
    for (std::size_t i = 0; i < tc.tags.size(); ++i) {
      rows.push_back({tc.conv.utterances[i].id, tc.conv.utterances[i].speaker_id, tc.tags[i].tag});
      expected.push_back({tc.conv.utterances[i].id, tc.conv.utterances[i].speaker_id});
    }
    EXPECT_EQ(parse_tag_table(render_label_table(rows), expected, TagSource::Human), tc.tags);
  }
}

// --- chunking -------------------------------------------------------------

TEST(Chunking, SingleChunkWhenEverythingFits) {
  const auto utts = numbered(5, 10);
  const auto chunks = chunk_utterances("c", utts, 100000);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_FALSE(chunks[0].overlap_head);
  EXPECT_EQ(reconstruct(chunks), utts);
}

TEST(Chunking, ConsecutiveChunksShareOneUtterance) {
  const auto utts = numbered(20, 50);
  const std::size_t row = rendered_size(utts[0]);
  const auto chunks = chunk_utterances("c", utts, row * 4);
  ASSERT_GT(chunks.size(), 1u);
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    EXPECT_TRUE(chunks[i].overlap_head);
    EXPECT_EQ(chunks[i].utterances.front(), chunks[i - 1].utterances.back());
  }
  for (const auto& c : chunks) {
    std::size_t used = 0;
    for (const auto& u : c.utterances) used += rendered_size(u);
    EXPECT_LE(used, row * 4);
  }
  EXPECT_EQ(reconstruct(chunks), utts);
}

TEST(Chunking, OversizedUtteranceIsAnError) {
  auto utts = numbered(3, 10);
  utts[1].text = std::string(500, 'y');
  try {
    chunk_utterances("c", utts, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UtteranceTooLong);
  }
}

TEST(Chunking, RandomConversationsReconstruct) {
  SeededRng rng(5);
  for (int k = 0; k < 100; ++k) {
    auto tc = random_tagged(rng, "c", 1 + rng.uniform_index(60), 3, false, 200);
    std::size_t max_row = 0;
    for (const auto& u : tc.conv.utterances) max_row = std::max(max_row, rendered_size(u));
    const auto chunks = chunk_for_prompt(tc.conv, 2 * max_row + rng.uniform_index(500));
    EXPECT_EQ(reconstruct(chunks), tc.conv.utterances);
  }
}

TEST(Chunking, MergeKeepsEarlierChunkTagForOverlap) {
  const auto utts = numbered(4, 50);
  const auto chunks = chunk_utterances("c", utts, rendered_size(utts[0]) * 2);
  ASSERT_EQ(chunks.size(), 3u);
  std::vector<ChunkTags> per;
  const T order[] = {T::Cold, T::WarmAgreeable, T::AloofIntroverted};
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    std::vector<TagAssignment> tags;
    for (const auto& u : chunks[i].utterances) tags.push_back(tag(u.id, order[i]));
    per.emplace_back(chunks[i], tags);
  }
  const auto merged = merge_chunk_tags(per);
  ASSERT_EQ(merged.size(), 4u);
  EXPECT_EQ(merged[1].tag, T::Cold);  // overlap of chunk 0 and 1
  EXPECT_EQ(merged[2].tag, T::WarmAgreeable);
  EXPECT_EQ(merged[3].tag, T::AloofIntroverted);
}

// --- prompt ---------------------------------------------------------------

TEST(Prompt, ReferenceExampleMatchesGolden) {
  const auto target = corpus::parse_corpus(data_file("reference_target.jsonl"), "reference");
  const auto chunks = chunk_for_prompt(target[0], 12000);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(build_prompt(chunks[0]), data_file("reference_prompt.txt"));
}

TEST(Prompt, ReferenceResponseParses) {
  const auto target = corpus::parse_corpus(data_file("reference_target.jsonl"), "reference");
  const auto chunk = chunk_for_prompt(target[0], 12000)[0];
  const auto tags = parse_tag_table(data_file("reference_response.txt"), chunk.expected());
  ASSERT_EQ(tags.size(), 3u);
  EXPECT_EQ(tags[0].tag, T::WarmAgreeable);
  EXPECT_EQ(tags[1].tag, T::UnassuredSubmissive);
  EXPECT_EQ(tags[2].tag, T::WarmAgreeable);
}

TEST(Prompt, ListsEveryTagAndEndsWithTargetTable) {
  const auto c = conv("c", {utt("u1", "a", "hello there"), utt("u2", "b", "go away")});
  const auto chunk = chunk_for_prompt(c, 12000)[0];
  const auto p = build_prompt(chunk);
  for (auto t : kCircumplexTags) EXPECT_NE(p.find(tag_name(t)), std::string::npos);
  EXPECT_EQ(p.rfind("| Utterance ID | Speaker ID | Text |"),
            p.size() - render_text_table(chunk.utterances).size());
  EXPECT_THROW(build_prompt(chunk, "only Cold is defined", {}), Error);
}

// --- lexicon --------------------------------------------------------------

TEST(Lexicon, EmptyTextIsNotAvailableAndTiesBreakCanonically) {
  const auto c = conv("c", {utt("1", "a", "   "), utt("2", "b", "thanks, great idea"),
                            utt("3", "a", "whatever")});
  const auto tags = tag_with_lexicon(c);
  ASSERT_EQ(tags.size(), 3u);
  EXPECT_EQ(tags[0].tag, T::NotAvailable);
  EXPECT_TRUE(is_circumplex(tags[1].tag));
  EXPECT_EQ(tags[1].source, TagSource::Lexicon);
  EXPECT_EQ(tag_with_lexicon(c), tags);
  EXPECT_TRUE(is_circumplex(lexicon_tag("zzz qqq")));  // no cue still yields a tag
}

TEST(Lexicon, SentimentIsDeterministic) {
  EXPECT_EQ(lexicon_sentiment(""), SentimentTag::NotAvailable);
  EXPECT_EQ(lexicon_sentiment("thanks, this is great"), SentimentTag::Positive);
  EXPECT_EQ(lexicon_sentiment("this is terrible and wrong"), SentimentTag::Negative);
  EXPECT_EQ(lexicon_sentiment("the table has four legs"), SentimentTag::Neutral);
}

// --- cache ----------------------------------------------------------------

TEST(Cache, RoundTripAndCoverage) {
  TagIndex idx;
  idx.set("c1", {tag("1", T::Cold), tag("2", T::WarmAgreeable)});
  auto a = tag("9", T::AloofIntroverted);
  a.confidence = 0.25;
  idx.add_loose(a);
  const auto text = serialize_tag_cache("corp", idx);
  const auto back = parse_tag_cache(text);
  EXPECT_EQ(back.corpus_id, "corp");
  EXPECT_EQ(serialize_tag_cache("corp", back.tags), text);
  const auto c1 = conv("c1", {utt("1", "a", "x"), utt("2", "b", "y")});
  EXPECT_TRUE(back.tags.covers(c1));
  const auto c2 = conv("c2", {utt("9", "a", "x"), utt("10", "b", "y")});
  EXPECT_FALSE(back.tags.covers(c2));
  try {
    back.tags.for_conversation(c2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingTag);
  }
}

TEST(Cache, TruncatedTailReportsByteOffset) {
  TagIndex idx;
  idx.set("c1", {tag("1", T::Cold)});
  auto text = serialize_tag_cache("corp", idx);
  const auto good_len = text.size();
  text += R"({"conversation_id":"c1","utterance_id":"2")";
  try {
    parse_tag_cache(text);
    FAIL();
  } catch (const LocatedError& e) {
    EXPECT_EQ(e.code(), Errc::CorruptCache);
    EXPECT_EQ(e.location(), good_len);
  }
}

TEST(Cache, WriterAppendsLoadablePrefix) {
  const auto dir = scratch_dir("cache-writer");
  const auto path = (dir / "tags.jsonl").string();
  {
    TagCacheWriter w(path, "corp");
    w.append("c1", std::vector{tag("1", T::Cold)});
  }
  {
    TagCacheWriter w(path, "corp");
    w.append("c2", std::vector{tag("1", T::WarmAgreeable)});
  }
  const auto back = cache_load(path);
  EXPECT_EQ(back.corpus_id, "corp");
  ASSERT_NE(back.tags.find("c2"), nullptr);
  EXPECT_EQ(back.tags.find("c2")->front().tag, T::WarmAgreeable);
  std::filesystem::remove_all(dir);
}

// --- remote tagger and LLM client -----------------------------------------

TEST(Remote, DistilledTaggerOverHttp) {
  std::atomic<int> calls{0};
  MockServer server("/tag", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = nlohmann::json::parse(req.body);
    EXPECT_EQ(body["window"], 2);
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& u : body["utterances"]) {
      tags.push_back({{"utterance_id", u["utterance_id"]}, {"tag", "Cold"}, {"confidence", 0.8}});
    }
    res.set_content(nlohmann::json{{"tags", tags}}.dump(), "application/json");
  });
  TaggerConfig cfg;
  cfg.endpoint = server.url("/tag");
  cfg.max_chunk_chars = 34;
  const auto c = conv("c", {utt("1", "a", "one"), utt("2", "b", ""), utt("3", "a", "three"),
                            utt("4", "b", "four")});
  const auto tags = tag_with_remote(c, cfg);
  ASSERT_EQ(tags.size(), 4u);
  EXPECT_EQ(tags[1].tag, T::NotAvailable);
  EXPECT_EQ(tags[0].tag, T::Cold);
  EXPECT_EQ(tags[0].source, TagSource::Distilled);
  EXPECT_EQ(tags[0].confidence, 0.8);
  EXPECT_GT(calls.load(), 1);  // small budget forces several chunks
}

TEST(Remote, ProtocolViolationsAreRejected) {
  const auto c = conv("c", {utt("1", "a", "one")});
  const auto chunk = chunk_for_prompt(c, 1000)[0];
  auto code = [&](const nlohmann::json& j) {
    try {
      parse_tag_response(j, chunk);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  using nlohmann::json;
  EXPECT_EQ(code(json::array()), Errc::ProtocolError);
  EXPECT_EQ(code(json{{"tags", 1}}), Errc::ProtocolError);
  EXPECT_EQ(code(json{{"tags", {{{"utterance_id", "7"}, {"tag", "Cold"}}}}}), Errc::ProtocolError);
  EXPECT_EQ(code(json{{"tags", {{{"utterance_id", "1"}, {"tag", "Chilly"}}}}}), Errc::ProtocolError);
  EXPECT_EQ(code(json{{"tags", {{{"utterance_id", "1"}, {"tag", "Cold"}, {"confidence", 1.5}}}}}),
            Errc::ProtocolError);
  EXPECT_EQ(code(json{{"tags", {{{"utterance_id", "1"}, {"tag", "Cold"}},
                                {{"utterance_id", "1"}, {"tag", "Cold"}}}}}),
            Errc::ProtocolError);
}

TEST(Remote, UnreachableEndpointIsTransportError) {
  TaggerConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(dead_port()) + "/tag";
  cfg.client.connect_timeout = std::chrono::milliseconds(500);
  try {
    tag_with_remote(conv("c", {utt("1", "a", "x")}), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TransportError);
  }
}

TEST(Remote, LlmClientSendsPromptAndParsesTable) {
  std::string auth, model;
  MockServer server("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    model = body["model"];
    const std::string user = body["messages"][1]["content"];
    // Answer with a label table for the target (last) table in the prompt.
    const auto start = user.rfind("| Utterance ID | Speaker ID | Text |");
    std::vector<Utterance> utts;
    for (const auto& line : text::split(user.substr(start), '\n')) {
      auto cells = split_row(line);
      if (!cells || cells->size() != 3 || (*cells)[0] == "Utterance ID" || (*cells)[0] == "---") continue;
      utts.push_back(utt(unescape_cell((*cells)[0]), unescape_cell((*cells)[1]), ""));
    }
    const nlohmann::json reply{
        {"choices", {{{"message", {{"role", "assistant"}, {"content", table_reply(utts, T::Cold)}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  LlmConfig cfg;
  cfg.endpoint = server.url("/v1/chat/completions");
  cfg.api_key = "k123";
  const auto c = conv("c", {utt("1", "a", "hello | there"), utt("2", "b", "")});
  const auto tags = tag_with_llm(c, cfg, default_definitions(), default_fewshot());
  ASSERT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags[0].tag, T::Cold);
  EXPECT_EQ(tags[0].source, TagSource::LLM);
  EXPECT_EQ(tags[1].tag, T::NotAvailable);
  EXPECT_EQ(auth, "Bearer k123");
  EXPECT_EQ(model, "gpt-4-0314");
}

TEST(Remote, ChatResponseWithoutContentIsProtocolError) {
  try {
    chat_response_content(nlohmann::json{{"choices", nlohmann::json::array()}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ProtocolError);
  }
}

TEST(Remote, PromptsForSkipsEmptyUtterances) {
  const auto c = conv("c", {utt("1", "a", ""), utt("2", "b", "hi")});
  const auto prompts = prompts_for(c, 12000, default_definitions(), default_fewshot());
  ASSERT_EQ(prompts.size(), 1u);
  EXPECT_EQ(prompts[0].find("| 1 | a |"), std::string::npos);
  EXPECT_NE(prompts[0].find("| 2 | b | hi |"), std::string::npos);
}
