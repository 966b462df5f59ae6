#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "affecton/cli.hpp"
#include "support/test_support.hpp"

namespace affecton {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<MappedPair> read_mapped(const fs::path& p) {
  std::ifstream in(p);
  return load_mapped_tsv(in);
}

std::string fixture(const char* name) { return (testing::fixture_dir() / name).string(); }

/// Trains the fixture models once for the whole suite.
class CliTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    const auto r = run_cli({"train", "--corpus", fixture("fixture_pairs.tsv"), "--out", model(), "--ref-out", ref(),
                            "--heldout-fraction", "0.2", "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    train_out_ = r.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string model() { return (*dir_ / "gen.model").string(); }
  static std::string ref() { return (*dir_ / "ref.model").string(); }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static testing::TempDir* dir_;
  static std::string train_out_;
};

testing::TempDir* CliTest::dir_ = nullptr;
std::string CliTest::train_out_;

TEST_F(CliTest, TrainReportsVocabularyAndTokens) {
  EXPECT_NE(train_out_.find("vocabulary: "), std::string::npos) << train_out_;
  EXPECT_NE(train_out_.find("tokens: "), std::string::npos);
  EXPECT_NE(train_out_.find("reference vocabulary: "), std::string::npos);
  std::ifstream in(model());
  const auto m = NGramModel::load(in);
  EXPECT_EQ(m.order(), 3);
  EXPECT_NE(train_out_.find("vocabulary: " + std::to_string(m.vocabulary().size()) + "\n"), std::string::npos);
}

TEST_F(CliTest, TrainIsByteIdenticalAcrossRuns) {
  const auto again = path("again.model");
  const auto again_ref = path("again.ref");
  const auto r = run_cli({"train", "--corpus", fixture("fixture_pairs.tsv"), "--out", again, "--ref-out", again_ref,
                          "--heldout-fraction", "0.2", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(again), slurp(model()));
  EXPECT_EQ(slurp(again_ref), slurp(ref()));
}

TEST_F(CliTest, MissingCorpusIsAUsageError) {
  const auto r = run_cli({"train", "--corpus", path("does-not-exist.tsv"), "--out", path("x.model")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("cannot read corpus"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("x.model")));
}

TEST_F(CliTest, MissingRequiredFlagIsAUsageError) {
  EXPECT_EQ(run_cli({"train", "--out", path("x.model")}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST_F(CliTest, UnknownPresetIsAUsageError) {
  const auto r = run_cli({"generate", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--target", "XYZ", "hello"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("XYZ"), std::string::npos) << r.err;
}

TEST_F(CliTest, BadDecoderValuesAreUsageErrors) {
  const std::vector<std::string> base = {"generate", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv")};
  for (const auto& extra : std::vector<std::vector<std::string>>{
           {"--lambda", "1.5"}, {"--lambda", "-0.1"}, {"--k", "0"}, {"--renorm", "nope"}, {"--target", "0.5,2,0"}}) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("hi");
    EXPECT_EQ(run_cli(args).code, cli::kExitUsage) << extra[0] << " " << extra[1];
  }
}

TEST_F(CliTest, LambdaZeroGenerationEqualsGreedy) {
  std::ifstream min(model());
  const auto m = NGramModel::load(min);
  std::ifstream pin(fixture("fixture_pairs.tsv"));
  const auto pairs = load_pairs_tsv(pin);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& p = pairs[i * 37];
    const auto r = run_cli({"generate", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--lambda", "0",
                            "--target", "LML", p.raw_source});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, detokenize(greedy_decode(m, p.source, 20)) + "\n") << p.raw_source;
  }
}

TEST_F(CliTest, GenerateWritesTraceLines) {
  const auto trace = path("gen.trace.jsonl");
  const auto r = run_cli({"generate", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--trace", trace,
                          "how", "was", "the", "trip", "?"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(trace);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["utterance"].get<std::string>(), "generate");
    EXPECT_EQ(j["step"].get<std::size_t>(), n);
    ++n;
  }
  EXPECT_GE(n, 1u);
}

TEST_F(CliTest, MapWithEmptyLexiconChangesNothing) {
  const auto empty = path("empty_lexicon.tsv");
  std::ofstream(empty) << "term\tvalence\tarousal\tdominance\n";
  const auto out = path("mapped_empty.tsv");
  const auto r = run_cli({"map", "--model", model(), "--lexicon", empty, "--corpus", fixture("fixture_pairs.tsv"), "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("utterances: 2000\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("changed: 0\n"), std::string::npos) << r.out;
  for (const auto& row : read_mapped(out)) EXPECT_EQ(row.mapped, row.original) << row.id;
}

TEST_F(CliTest, MapKeepsLengthsAndIsIndependentOfWorkerCount) {
  const auto one = path("mapped_w1.tsv"), three = path("mapped_w3.tsv");
  const std::vector<std::string> base = {"map", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--corpus",
                                         fixture("fixture_pairs.tsv"), "--target", "HHH", "--lambda", "0.7"};
  auto a = base;
  a.insert(a.end(), {"--out", one});
  auto b = base;
  b.insert(b.end(), {"--out", three, "--workers", "3"});
  ASSERT_EQ(run_cli(a).code, 0);
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(slurp(one), slurp(three));
  const auto rows = read_mapped(one);
  ASSERT_EQ(rows.size(), 2000u);
  std::size_t changed = 0;
  for (const auto& row : rows) {
    EXPECT_EQ(row.mapped.size(), row.original.size());
    EXPECT_EQ(row.target, "HHH");
    changed += row.changed();
  }
  EXPECT_GT(changed, 0u);
}

TEST_F(CliTest, EvalOfUnchangedCorpusHasPerfectBleu) {
  const auto empty = path("empty_lexicon2.tsv");
  std::ofstream(empty) << "";
  const auto mapped = path("mapped_identity.tsv");
  ASSERT_EQ(run_cli({"map", "--model", model(), "--lexicon", empty, "--corpus", fixture("fixture_pairs.tsv"), "--out", mapped}).code, 0);
  const auto report_path = path("report.json");
  const auto r = run_cli({"eval", "--ref-model", ref(), "--lexicon", fixture("fixture_lexicon.tsv"), "--mapped", mapped, "--out", report_path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(report_path));
  ASSERT_EQ(report["runs"].size(), 1u);
  const auto& run = report["runs"][0];
  EXPECT_NEAR(run["bleu"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(run["changed"].get<std::size_t>(), 0u);
  EXPECT_EQ(run["utterance_count"].get<std::size_t>(), 2000u);
  EXPECT_EQ(run["target"], "HHH");
  EXPECT_DOUBLE_EQ(run["mean_compound"].get<double>(), report["original"]["mean_compound"].get<double>());
  EXPECT_DOUBLE_EQ(run["perplexity"].get<double>(), report["original"]["perplexity"].get<double>());
  EXPECT_GT(run["perplexity"].get<double>(), 1.0);
  EXPECT_NE(r.out.find("original"), std::string::npos);
}

TEST_F(CliTest, EvalReportsEveryTarget) {
  std::vector<std::string> args = {"eval", "--ref-model", ref(), "--lexicon", fixture("fixture_lexicon.tsv")};
  for (const char* t : {"HHH", "MLM", "LML"}) {
    const auto out = path(std::string("mapped_") + t + ".tsv");
    ASSERT_EQ(run_cli({"map", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--corpus", fixture("fixture_pairs.tsv"),
                       "--target", t, "--out", out})
                  .code,
              0);
    args.insert(args.end(), {"--mapped", out});
  }
  const auto report_path = path("report3.json");
  args.insert(args.end(), {"--out", report_path});
  ASSERT_EQ(run_cli(args).code, 0);
  const auto report = nlohmann::json::parse(slurp(report_path));
  ASSERT_EQ(report["runs"].size(), 3u);
  std::set<std::string> targets;
  for (const auto& run : report["runs"]) {
    targets.insert(run["target"].get<std::string>());
    for (const char* key : {"file", "target", "mean_compound", "perplexity", "bleu", "utterance_count", "changed"})
      EXPECT_TRUE(run.contains(key)) << key;
    EXPECT_LT(run["bleu"].get<double>(), 1.0);
  }
  EXPECT_EQ(targets, (std::set<std::string>{"HHH", "MLM", "LML"}));
}

TEST_F(CliTest, EvalRejectsMissingMappedFile) {
  const auto r = run_cli({"eval", "--ref-model", ref(), "--lexicon", fixture("fixture_lexicon.tsv"), "--mapped", path("nope.tsv")});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(CliTest, SelectBuildsBalancedStableItemFile) {
  std::vector<std::string> args = {"select", "--corpus", fixture("fixture_pairs.tsv"), "--golden", fixture("golden.tsv"), "--n", "60"};
  for (const char* t : {"HHH", "MLM", "LML"}) {
    const auto out = path(std::string("sel_") + t + ".tsv");
    ASSERT_EQ(run_cli({"map", "--model", model(), "--lexicon", fixture("fixture_lexicon.tsv"), "--corpus", fixture("fixture_pairs.tsv"),
                       "--target", t, "--out", out})
                  .code,
              0);
    args.insert(args.end(), {"--mapped", out});
  }
  auto first = args, second = args;
  first.insert(first.end(), {"--out", path("items1.jsonl")});
  second.insert(second.end(), {"--out", path("items2.jsonl")});
  const auto r = run_cli(first);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "items: 180\ngolden: 2\n");
  ASSERT_EQ(run_cli(second).code, 0);
  EXPECT_EQ(slurp(path("items1.jsonl")), slurp(path("items2.jsonl")));

  std::ifstream in(path("items1.jsonl"));
  const auto items = load_rating_items(in);
  ASSERT_EQ(items.size(), 182u);
  std::set<std::string> ids;
  std::map<std::string, std::size_t> per_target;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ids.insert(items[i].id);
    if (items[i].golden) continue;
    ++per_target[items[i].target];
    EXPECT_FALSE(items[i].preceding.empty()) << items[i].id;
    // Targets alternate round-robin in sorted order.
    EXPECT_EQ(items[i].target, (std::vector<std::string>{"HHH", "LML", "MLM"})[i % 3]) << i;
  }
  EXPECT_EQ(ids.size(), 182u);
  EXPECT_EQ(per_target, (std::map<std::string, std::size_t>{{"HHH", 60}, {"LML", 60}, {"MLM", 60}}));
  EXPECT_TRUE(ids.count("golden-happy"));
  EXPECT_TRUE(ids.count("golden-sad"));
}

TEST_F(CliTest, RelativePathsResolveAgainstDataDir) {
  fs::copy_file(fixture("fixture_lexicon.tsv"), path("lex.tsv"), fs::copy_options::overwrite_existing);
  fs::copy_file(model(), path("rel.model"), fs::copy_options::overwrite_existing);
  ::setenv("AFFECTON_DATA_DIR", dir_->path().c_str(), 1);
  const auto r = run_cli({"generate", "--model", "rel.model", "--lexicon", "lex.tsv", "--trace", "rel_trace.jsonl", "hi", "there"});
  ::unsetenv("AFFECTON_DATA_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("rel_trace.jsonl")));
  EXPECT_EQ(run_cli({"generate", "--model", "rel.model", "--lexicon", "lex.tsv", "hi"}).code, cli::kExitUsage);
}

TEST_F(CliTest, LemmaExceptionsFileMustExist) {
  const auto r = run_cli({"--lemma-exceptions", path("missing.tsv"), "generate", "--model", model(), "--lexicon",
                          fixture("fixture_lexicon.tsv"), "hi"});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

}  // namespace
}  // namespace affecton
