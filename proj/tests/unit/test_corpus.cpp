#include <gtest/gtest.h>

#include <set>

#include "socorient/corpus.hpp"
#include "support.hpp"

using namespace socorient;
using namespace testing_support;

namespace {

const char* kTwoConvs =
    R"({"conversation_id":"c1","source_page":"p1","outcome":"failure","utterances":[{"utterance_id":"u1","speaker_id":"a","text":"hi"},{"utterance_id":"u2","speaker_id":"b","text":"you idiot","toxic":true}]})"
    "\n\n"
    R"({"conversation_id":"c2","source_page":null,"outcome":null,"split":"test","utterances":[{"utterance_id":"u1","speaker_id":"a","text":"hello"}]})"
    "\n";

}  // namespace

TEST(Corpus, ParsesConvoJsonl) {
  const auto c = corpus::parse_corpus(kTwoConvs, "demo");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.id(), "demo");
  EXPECT_EQ(c[0].outcome, Outcome::Failure);
  EXPECT_EQ(c[0].source_page, "p1");
  EXPECT_EQ(c[0].utterances[1].toxic, true);
  EXPECT_FALSE(c[0].utterances[0].toxic.has_value());
  EXPECT_EQ(c[1].outcome, Outcome::Unlabeled);
  EXPECT_EQ(c[1].split, Split::Test);
  EXPECT_EQ(c.count(Outcome::Failure), 1u);
  EXPECT_EQ(c.find("c2"), &c[1]);
}

TEST(Corpus, RoundTripsThroughSerialization) {
  const auto c = corpus::parse_corpus(kTwoConvs, "demo");
  const auto again = corpus::parse_corpus(corpus::serialize_corpus(c), "demo");
  ASSERT_EQ(again.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(again[i], c[i]);
  EXPECT_EQ(corpus::serialize_corpus(again), corpus::serialize_corpus(c));
}

TEST(Corpus, MalformedLineReportsLineNumber) {
  const std::string bad = std::string(kTwoConvs) + "{not json}\n";
  try {
    corpus::parse_corpus(bad, "x");
    FAIL() << "expected MalformedRecord";
  } catch (const LocatedError& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRecord);
    EXPECT_EQ(e.location(), 4u);
  }
}

TEST(Corpus, RejectsMissingFieldsAndBadOutcome) {
  EXPECT_THROW(corpus::parse_corpus(R"({"utterances":[]})", "x"), LocatedError);
  EXPECT_THROW(corpus::parse_corpus(
                   R"({"conversation_id":"a","outcome":"maybe","utterances":[{"utterance_id":"1","speaker_id":"s","text":"t"}]})",
                   "x"),
               LocatedError);
  EXPECT_THROW(corpus::parse_corpus(R"({"conversation_id":"a","utterances":[]})", "x"), LocatedError);
}

TEST(Corpus, DuplicateIdsAreRejected) {
  const std::string line =
      R"({"conversation_id":"a","utterances":[{"utterance_id":"1","speaker_id":"s","text":"t"}]})";
  try {
    corpus::parse_corpus(line + "\n" + line + "\n", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateConversationId);
  }
  try {
    corpus::parse_corpus(
        R"({"conversation_id":"a","utterances":[{"utterance_id":"1","speaker_id":"s","text":"t"},{"utterance_id":"1","speaker_id":"s","text":"u"}]})",
        "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateUtteranceId);
  }
}

TEST(Corpus, DeriveContextTruncatesBeforeFirstToxic) {
  auto c = conv("c", {utt("1", "a", "x"), utt("2", "b", "y"), utt("3", "a", "z")});
  c.utterances[1].toxic = true;
  const auto d = corpus::derive_context_and_label(c);
  EXPECT_EQ(d.outcome, Outcome::Failure);
  ASSERT_EQ(d.utterances.size(), 1u);
  EXPECT_EQ(d.utterances[0].id, "1");

  c.utterances[1].toxic = false;
  EXPECT_EQ(corpus::derive_context_and_label(c).outcome, Outcome::Success);
  EXPECT_EQ(corpus::derive_context_and_label(c).utterances.size(), 3u);

  c.utterances[0].toxic = true;
  try {
    corpus::derive_context_and_label(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyContext);
  }
}

TEST(Corpus, DropFinalTurn) {
  auto c = conv("c", {utt("1", "a", "x"), utt("2", "b", "y")});
  EXPECT_EQ(corpus::drop_final_turn(c).utterances.size(), 1u);
  auto one = conv("d", {utt("1", "a", "x")});
  try {
    corpus::drop_final_turn(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooShort);
  }
}

TEST(Corpus, FilterCandidates) {
  Corpus c("x", {conv("solo", {utt("1", "a", "x"), utt("2", "a", "y")}),
                 conv("duo", {utt("1", "a", "x"), utt("2", "b", "y")})});
  const auto f = corpus::filter_candidates(c, 2, 2);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].id, "duo");
  EXPECT_EQ(corpus::filter_candidates(c, 1, 3).size(), 0u);
}

TEST(Corpus, PreToxicContext) {
  auto c = conv("c", {utt("1", "a", "x"), utt("2", "b", "y"), utt("3", "a", "z")});
  c.utterances[2].toxic = true;
  EXPECT_TRUE(corpus::has_pre_toxic_context(c, 2, 2));
  EXPECT_FALSE(corpus::has_pre_toxic_context(c, 3, 2));
}

TEST(Corpus, PairingIsSamePageAndSeeded) {
  std::vector<Conversation> toxic, pool;
  for (int i = 0; i < 4; ++i) {
    auto t = conv("t" + std::to_string(i), {utt("1", "a", "x")}, Outcome::Failure);
    t.source_page = "p" + std::to_string(i % 2);
    toxic.push_back(t);
  }
  auto orphan = conv("t-orphan", {utt("1", "a", "x")}, Outcome::Failure);
  orphan.source_page = "nowhere";
  toxic.push_back(orphan);
  for (int i = 0; i < 6; ++i) {
    auto s = conv("s" + std::to_string(i), {utt("1", "a", "x")}, Outcome::Success);
    s.source_page = "p" + std::to_string(i % 2);
    pool.push_back(s);
  }
  const auto r = corpus::pair_balanced(toxic, pool, 3);
  EXPECT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.dropped, 1u);
  std::set<std::string> used;
  for (const auto& [t, s] : r.pairs) {
    EXPECT_EQ(t.source_page, s.source_page);
    EXPECT_TRUE(used.insert(s.id).second);
  }
  const auto again = corpus::pair_balanced(toxic, pool, 3);
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    EXPECT_EQ(r.pairs[i].second.id, again.pairs[i].second.id);
  }
}

TEST(Corpus, StratifiedSubsetKeepsProportionsAndOrder) {
  std::vector<Conversation> convs;
  for (int i = 0; i < 100; ++i) {
    convs.push_back(conv("c" + std::to_string(i), {utt("1", "a", "x")},
                         i < 90 ? Outcome::Success : Outcome::Failure));
  }
  const Corpus c("x", convs);
  const auto s = corpus::stratified_subset(c, 0.1, 42);
  EXPECT_EQ(s.count(Outcome::Success), 9u);
  EXPECT_EQ(s.count(Outcome::Failure), 1u);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_LT(c.find(s[i - 1].id) - &c[0], c.find(s[i].id) - &c[0]);
  }
  EXPECT_EQ(corpus::stratified_subset(c, 0.1, 42).ids(), s.ids());
  EXPECT_NE(corpus::stratified_subset(c, 0.1, 43).ids(), s.ids());
  EXPECT_EQ(corpus::stratified_subset(c, 1.0, 7).size(), 100u);
  // Tiny fractions still keep one per class.
  EXPECT_EQ(corpus::stratified_subset(c, 0.01, 42).size(), 2u);
  EXPECT_THROW(corpus::stratified_subset(c, 0.0, 42), Error);
}

TEST(Corpus, AssignSplitsIsStratified) {
  std::vector<Conversation> convs;
  for (int i = 0; i < 50; ++i) {
    convs.push_back(conv("c" + std::to_string(i), {utt("1", "a", "x")},
                         i % 5 == 0 ? Outcome::Failure : Outcome::Success));
  }
  const auto s = corpus::assign_splits(Corpus("x", convs), 0.2, 0.1, 1);
  const auto test = corpus::select_split(s, Split::Test);
  EXPECT_EQ(test.count(Outcome::Failure), 2u);
  EXPECT_EQ(test.count(Outcome::Success), 8u);
  EXPECT_EQ(corpus::select_split(s, Split::Val).size(), 5u);
  EXPECT_EQ(corpus::select_split(s, Split::Train).size(), 35u);
}

TEST(Corpus, KeywordToxicity) {
  corpus::KeywordToxicityDetector det;
  EXPECT_TRUE(det.is_toxic("You are an IDIOT."));
  EXPECT_FALSE(det.is_toxic("idiomatic phrasing"));
  EXPECT_TRUE(det.is_toxic("你这个白痴"));
  auto c = conv("c", {utt("1", "a", "fine"), utt("2", "b", "stupid")});
  c.utterances[0].toxic = true;  // existing flags win
  const auto a = det.annotate(c);
  EXPECT_EQ(a.utterances[0].toxic, true);
  EXPECT_EQ(a.utterances[1].toxic, true);
}
