#include <gtest/gtest.h>

#include <sstream>

#include "cli_app.hpp"
#include "support.hpp"

using namespace socorient;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return text::read_file(p.string()); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    const auto r = run({"synth", "--out-dir", p("synth"), "--n", "240", "--n-test", "60", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }
  std::string corpus() const { return p("synth/corpus.jsonl"); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PipelineIsByteDeterministic) {
  for (const std::string tag_dir : {"t1", "t2"}) {
    ASSERT_EQ(run({"tag", "--corpus", corpus(), "--out-dir", p(tag_dir)}).code, 0);
  }
  EXPECT_EQ(slurp(p("t1/tags.jsonl")), slurp(p("t2/tags.jsonl")));
  EXPECT_EQ(slurp(p("t1/manifest.json")).size(), slurp(p("t2/manifest.json")).size());
  for (const std::string m : {"m1", "m2"}) {
    const auto r = run({"train", "--corpus", corpus(), "--tags", p("t1/tags.jsonl"), "--out-dir", p(m),
                        "--features", "social_counts+tfidf", "--max-epochs", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(p("m1/model.txt")), slurp(p("m2/model.txt")));
  EXPECT_TRUE(fs::exists(p("m1/vocab.csv")));
  const auto e = run({"evaluate", "--corpus", corpus(), "--tags", p("t1/tags.jsonl"), "--model",
                      p("m1/model.txt"), "--vocab", p("m1/vocab.csv"), "--out-dir", p("e")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(slurp(p("e/metrics.csv")).substr(0, 22), "metric,value\naccuracy,");
  const auto manifest = nlohmann::json::parse(slurp(p("e/manifest.json")));
  EXPECT_EQ(manifest["command"], "evaluate");
  EXPECT_TRUE(manifest["inputs"].contains(p("m1/model.txt")));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().substr(0, 8), "fnv1a64:");
}

TEST_F(CliTest, AnalysisCommandsWriteReports) {
  ASSERT_EQ(run({"tag", "--corpus", corpus(), "--out-dir", p("t")}).code, 0);
  const auto tags = p("t/tags.jsonl");
  ASSERT_EQ(run({"train", "--corpus", corpus(), "--tags", tags, "--out-dir", p("m")}).code, 0);
  const auto i = run({"intervene", "--corpus", corpus(), "--tags", tags, "--model", p("m/model.txt"),
                      "--out-dir", p("i")});
  ASSERT_EQ(i.code, 0) << i.err;
  const auto report = slurp(p("i/interventions.csv"));
  EXPECT_EQ(report.substr(0, report.find('\n')), "intervention,pos2neg,neg2pos,same,n_filtered");
  EXPECT_EQ(explain::parse_specs(slurp(p("i/intervention_specs.jsonl"))).size(), 4u);

  const auto c = run({"cooccur", "--corpus", corpus(), "--tags", tags, "--out-dir", p("c")});
  ASSERT_EQ(c.code, 0) << c.err;
  for (const auto* f : {"cooccurrence_ratio.csv", "cooccurrence_fail_counts.csv",
                        "cooccurrence_success_counts.csv", "prevalence.csv"}) {
    EXPECT_TRUE(fs::exists(p(std::string("c/") + f))) << f;
  }

  const auto a = run({"ablate", "--corpus", corpus(), "--tags", tags, "--out-dir", p("a"),
                      "--methods", "majority,social_counts", "--baseline", "majority",
                      "--fractions", "0.5,1.0", "--seeds", "42,43", "--max-epochs", "100"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto abl = slurp(p("a/ablation.csv"));
  EXPECT_EQ(std::count(abl.begin(), abl.end(), '\n'), 5);
  EXPECT_EQ(abl.substr(0, abl.find('\n')), std::string(eval::kAblationHeader));

  text::write_file_atomic(p("x.txt"), "0.52\n0.55\n0.61\n0.58\n0.49\n");
  text::write_file_atomic(p("y.txt"), "0.50\n0.51\n0.49\n0.50\n0.52\n");
  const auto t = run({"ttest", "--a", p("x.txt"), "--b", p("y.txt"), "--out-dir", p("tt")});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(slurp(p("tt/ttest.csv")).find(",*\n"), std::string::npos);
  const auto t2 = run({"ttest", "--a", p("a/runs.csv"), "--b", p("a/runs.csv"), "--method",
                       "social_counts", "--fraction", "1", "--out-dir", p("tt2")});
  ASSERT_EQ(t2.code, 0) << t2.err;
  EXPECT_EQ(slurp(p("tt2/ttest.csv")).substr(0, 36), "n_a,n_b,t,df,p_two_sided,significant");
}

TEST_F(CliTest, AgreeAcrossAnnotationFiles) {
  ASSERT_EQ(run({"tag", "--corpus", corpus(), "--out-dir", p("t")}).code, 0);
  const auto r = run({"agree", "--annotations", p("synth/planted_tags.jsonl") + "," + p("t/tags.jsonl"),
                      "--out-dir", p("ag")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(p("ag/agreement.csv")).find("fleiss_kappa,1.000000"), std::string::npos);
}

TEST_F(CliTest, DryRunWritesPromptsWithoutNetwork) {
  const auto r = run({"tag", "--corpus", corpus(), "--backend", "llm", "--dry-run-prompts",
                      "--out-dir", p("d")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(p("d/prompts/synth-0.0.txt")));
  EXPECT_FALSE(fs::exists(p("d/tags.jsonl")));
}

TEST_F(CliTest, TaggingResumesFromPartialCache) {
  ASSERT_EQ(run({"tag", "--corpus", corpus(), "--out-dir", p("full")}).code, 0);
  const auto full = slurp(p("full/tags.jsonl"));
  // Keep roughly the first third plus half a line.
  const auto cut = full.find('\n', full.size() / 3);
  fs::create_directories(p("res"));
  text::write_file_atomic(p("res/tags.jsonl.partial"), full.substr(0, cut + 20));
  const auto r = run({"tag", "--corpus", corpus(), "--out-dir", p("res")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resumed"), std::string::npos);
  EXPECT_EQ(r.out.find("(0 resumed)"), std::string::npos);
  EXPECT_EQ(slurp(p("res/tags.jsonl")), full);
  EXPECT_FALSE(fs::exists(p("res/tags.jsonl.partial")));
}

TEST_F(CliTest, ConfigFileFillsOptionsAndFlagsWin) {
  text::write_file_atomic(p("train.cfg"), "# training\nfeatures = social_counts\nmax-epochs = 5\nno-class-weights = true\n");
  const auto r = run({"train", "--config", p("train.cfg"), "--corpus", corpus(), "--tags",
                      p("synth/planted_tags.jsonl"), "--max-epochs", "3", "--out-dir", p("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epochs,3\n"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(p("m/manifest.json")));
  EXPECT_EQ(manifest["options"]["no-class-weights"], "true");
  text::write_file_atomic(p("bad.cfg"), "colour = blue\n");
  EXPECT_EQ(run({"train", "--config", p("bad.cfg"), "--out-dir", p("m2")}).code, cli::kUsage);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"train", "--out-dir", p("x")}).code, cli::kUsage);  // missing --corpus
  EXPECT_EQ(run({"tag", "--corpus", corpus()}).code, cli::kUsage);   // missing --out-dir
  EXPECT_EQ(run({"ablate", "--corpus", corpus(), "--tags", corpus(), "--fractions", "0,1",
                 "--out-dir", p("x")})
                .code,
            cli::kUsage);
  EXPECT_FALSE(fs::exists(p("x")));  // nothing written on usage errors

  text::write_file_atomic(p("broken.jsonl"), "{\"conversation_id\": 1}\n");
  const auto bad = run({"tag", "--corpus", p("broken.jsonl"), "--out-dir", p("b")});
  EXPECT_EQ(bad.code, cli::kData);
  EXPECT_NE(bad.err.find("line 1"), std::string::npos);

  const auto dead = run({"tag", "--corpus", corpus(), "--backend", "remote", "--endpoint",
                         "http://127.0.0.1:" + std::to_string(dead_port()) + "/tag", "--out-dir",
                         p("dead"), "--timeout-ms", "500"});
  EXPECT_EQ(dead.code, cli::kTagging);

  // single-class training data
  const auto one_class = run({"train", "--corpus", corpus(), "--tags", p("synth/planted_tags.jsonl"),
                              "--split", "val", "--out-dir", p("oc")});
  EXPECT_EQ(one_class.code, cli::kData);  // empty split

  const auto down = run({"intervene", "--corpus", corpus(), "--tags", p("synth/planted_tags.jsonl"),
                         "--predictor-endpoint",
                         "http://127.0.0.1:" + std::to_string(dead_port()) + "/p", "--out-dir", p("dn")});
  EXPECT_EQ(down.code, cli::kAnalysis);
  EXPECT_NE(down.err.find("partial:"), std::string::npos);
}
