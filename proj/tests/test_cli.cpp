#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ltt/ast.hpp"
#include "process.hpp"

namespace fs = std::filesystem;

namespace {

using proc::slurp;

proc::Run run(const std::string& args) { return proc::run_cli(args); }

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ltt_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "src");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, IngestCountsAndSkipsFailures) {
  write("src/a.ml0", "fn f() { return 1; }\n");
  write("src/b.ml0", "fn g(int x) { return x; }\n");
  write("src/c.ml0", "int y = 2;\n");
  auto r = run("ingest " + path("src") + " -o " + path("ok.asts.jsonl"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(line_count(path("ok.asts.jsonl")), 3u);

  write("src/c.ml0", "fn ( {\n");
  r = run("ingest " + path("src") + " -o " + path("bad.asts.jsonl"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(line_count(path("bad.asts.jsonl")), 2u);
  EXPECT_NE(r.out.find("1 failures"), std::string::npos) << r.out;
}

TEST_F(Cli, IngestIsByteIdentical) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("a.jsonl")).code, 0);
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("b.jsonl")).code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_FALSE(slurp(path("a.jsonl")).empty());
}

TEST_F(Cli, IngestEmptyDirectoryFails) {
  auto r = run("ingest " + path("src") + " -o " + path("x.jsonl"));
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(Cli, SplitSizesAndDeterminism) {
  for (int i = 0; i < 100; ++i) write("src/p" + std::to_string(100 + i) + ".ml0", "int v = " + std::to_string(i) + ";\n");
  ASSERT_EQ(run("ingest " + path("src") + " -o " + path("c.jsonl")).code, 0);
  ASSERT_EQ(run("split " + path("c.jsonl") + " --fractions 0.7,0.1,0.2 --seed 3 -o " + path("s")).code, 0);
  EXPECT_EQ(line_count(path("s.train.asts.jsonl")), 70u);
  EXPECT_EQ(line_count(path("s.valid.asts.jsonl")), 10u);
  EXPECT_EQ(line_count(path("s.test.asts.jsonl")), 20u);
  ASSERT_EQ(run("split " + path("c.jsonl") + " --fractions 0.7,0.1,0.2 --seed 3 -o " + path("t")).code, 0);
  for (const char* part : {".train.asts.jsonl", ".valid.asts.jsonl", ".test.asts.jsonl"}) {
    EXPECT_EQ(slurp(path(std::string("s") + part)), slurp(path(std::string("t") + part)));
  }
  ASSERT_EQ(run("split " + path("c.jsonl") + " --fractions 1,0,0 --seed 3 -o " + path("u")).code, 0);
  EXPECT_EQ(line_count(path("u.train.asts.jsonl")), 100u);
  EXPECT_EQ(line_count(path("u.valid.asts.jsonl")), 0u);
  EXPECT_EQ(line_count(path("u.test.asts.jsonl")), 0u);
  EXPECT_EQ(run("split " + path("c.jsonl") + " --fractions 0.7,0.1,0.1 -o " + path("v")).code, 1);
}

TEST_F(Cli, SplitKeepsAuthorsTogether) {
  std::string authors;
  for (int i = 0; i < 30; ++i) {
    const std::string name = "p" + std::to_string(100 + i) + ".ml0";
    write("src/" + name, "int v = " + std::to_string(i) + ";\n");
    authors += name + "\tu" + std::to_string(i % 6) + "\n";
  }
  write("authors.tsv", authors);
  ASSERT_EQ(run("ingest " + path("src") + " -o " + path("c.jsonl")).code, 0);
  auto r = run("split " + path("c.jsonl") + " --authors " + path("authors.tsv") + " -o " + path("s"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::size_t train = line_count(path("s.train.asts.jsonl"));
  EXPECT_EQ(train % 5, 0u);
  EXPECT_EQ(line_count(path("s.test.asts.jsonl")) % 5, 0u);
}

TEST_F(Cli, TrainThenEvalPcfg) {
  write("src/a.ml0", "fn f() { return 1; }\n");
  write("src/b.ml0", "fn g(int x) { return x + 1; }\n");
  ASSERT_EQ(run("ingest " + path("src") + " -o " + path("c.jsonl")).code, 0);
  auto r = run("train --variant pcfg --train " + path("c.jsonl") + " -o " + path("m.ltt"));
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("eval --model " + path("m.ltt") + " --corpus " + path("c.jsonl") + " --report " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(path("r.json")));
  auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_TRUE(std::isfinite(j["bitsPerToken"].get<double>()));
  EXPECT_EQ(j["variant"], "pcfg");
}

TEST_F(Cli, SampleIsReproducible) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("c.jsonl")).code, 0);
  ASSERT_EQ(run("train --variant ltt-hi --dim 8 --epochs 1 --train " + path("c.jsonl") + " -o " + path("m.ltt")).code, 0);
  const std::string args = "sample --model " + path("m.ltt") + " --root ForStatement --n 5 --seed 7";
  auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  std::istringstream lines(a.out);
  int n = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    ++n;
    EXPECT_EQ(line.rfind("for (", 0), 0u) << line;
  }
  EXPECT_EQ(n, 5);
}

TEST_F(Cli, SampleScopeAndAstOutput) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("c.jsonl")).code, 0);
  ASSERT_EQ(run("train --variant ltt-hiseq-scope --dim 8 --epochs 1 --train " + path("c.jsonl") + " -o " + path("m.ltt")).code, 0);
  auto r = run("sample --model " + path("m.ltt") + " --root IdentifierName:local --n 3 --scope int:count --ast-out " + path("s.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "count\ncount\ncount\n");
  EXPECT_EQ(ltt::read_corpus(path("s.jsonl")).size(), 3u);
}

TEST_F(Cli, InspectPrintsSupportAndNeighbors) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("c.jsonl")).code, 0);
  ASSERT_EQ(run("train --variant ltt0 --dim 8 --epochs 1 --train " + path("c.jsonl") + " -o " + path("m.ltt")).code, 0);
  auto r = run("inspect --model " + path("m.ltt") + " --kind ForStatement --top 3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Keyword:for"), std::string::npos) << r.out;
}

TEST_F(Cli, ExitCodes) {
  write("src/a.ml0", "fn f() { return 1; }\n");
  ASSERT_EQ(run("ingest " + path("src") + " -o " + path("c.jsonl")).code, 0);
  EXPECT_EQ(run("train --variant nosuch --train " + path("c.jsonl") + " -o " + path("m")).code, 1);
  EXPECT_EQ(run("train --variant pcfg --train " + path("missing.jsonl") + " -o " + path("m")).code, 2);
  EXPECT_EQ(run("eval --model " + path("missing.ltt") + " --corpus " + path("c.jsonl")).code, 2);
  EXPECT_EQ(run("eval").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  write("garbage.ltt", "not a model");
  EXPECT_EQ(run("eval --model " + path("garbage.ltt") + " --corpus " + path("c.jsonl")).code, 2);
  write("bad.cfg", "dim = -3\n");
  EXPECT_EQ(run("train --config " + path("bad.cfg") + " --train " + path("c.jsonl") + " -o " + path("m")).code, 1);
}

TEST_F(Cli, ModelFileRoundTripThroughEval) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("c.jsonl")).code, 0);
  ASSERT_EQ(run("train --variant ltt-seq --dim 8 --epochs 1 --seed 4 --train " + path("c.jsonl") + " -o " + path("a.ltt")).code, 0);
  ASSERT_EQ(run("train --variant ltt-seq --dim 8 --epochs 1 --seed 4 --train " + path("c.jsonl") + " -o " + path("b.ltt")).code, 0);
  EXPECT_EQ(slurp(path("a.ltt")), slurp(path("b.ltt")));
  ASSERT_EQ(run("eval --model " + path("a.ltt") + " --corpus " + path("c.jsonl") + " --report " + path("ra.json")).code, 0);
  ASSERT_EQ(run("eval --model " + path("b.ltt") + " --corpus " + path("c.jsonl") + " --threads 3 --report " + path("rb.json")).code, 0);
  EXPECT_EQ(slurp(path("ra.json")), slurp(path("rb.json")));
}

// Training-split bits per token are at least the test-split value for every
// variant trained on the bundled corpus (reduced sizes keep this quick).
TEST_F(Cli, TrainSplitScoresAtLeastTestSplit) {
  ASSERT_EQ(run("ingest " + std::string(LTT_CORPUS_DIR) + " -o " + path("all.jsonl")).code, 0);
  ASSERT_EQ(run("split " + path("all.jsonl") + " --seed 1 -o " + path("s")).code, 0);
  const std::string train = path("s.train.asts.jsonl"), valid = path("s.valid.asts.jsonl"),
                    test = path("s.test.asts.jsonl");
  for (const std::string variant :
       {"ngram2", "ngram3", "ngram4", "ngram5", "lbl-ngram10", "pcfg", "ltt0", "ltt-hi", "ltt-seq",
        "ltt-hiseq", "ltt-hiseq-scope", "ltt-latent", "lbl-hmm"}) {
    const std::string model = path(variant + ".ltt");
    std::string extra = " --dim 12 --epochs 2";
    if (variant == "ltt-latent" || variant == "lbl-hmm") extra += " --latent-states 3";
    auto r = run("train --variant " + variant + " --train " + train + " --valid " + valid + extra + " -o " + model);
    ASSERT_EQ(r.code, 0) << variant << "\n" << r.out;
    auto bits = [&](const std::string& corpus) {
      const std::string report = path(variant + ".json");
      auto e = run("eval --model " + model + " --corpus " + corpus + " --report " + report);
      EXPECT_EQ(e.code, 0) << e.out;
      return nlohmann::json::parse(slurp(report))["bitsPerToken"].get<double>();
    };
    const double on_train = bits(train), on_test = bits(test);
    EXPECT_GE(on_train, on_test) << variant;
  }
}
