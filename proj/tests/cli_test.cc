#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.h"
#include "cws/serialize.h"
#include "cws/utf8.h"
#include "oracles.h"

namespace cws {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cws(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (const auto& ch : utf8::split(s)) {
    if (!utf8::is_space(ch) || ch == "\n") out += ch;
  }
  return out;
}

TEST(Gradcheck, PassesAndIsDeterministic) {
  const Result a = cws({"gradcheck", "--seed", "1"});
  EXPECT_EQ(a.code, 0) << a.out << a.err;
  EXPECT_EQ(a.out.rfind("max_rel_error=", 0), 0u);
  EXPECT_EQ(cws({"gradcheck", "--seed", "1"}).out, a.out);
}

TEST(Gradcheck, SeveralSeedsAndDepths) {
  for (const char* seed : {"2", "3", "42"}) {
    EXPECT_EQ(cws({"gradcheck", "--seed", seed}).code, 0) << seed;
  }
  EXPECT_EQ(cws({"gradcheck", "--extra-layers", "1", "--memory-span", "2"}).code, 0);
}

TEST(Gradcheck, CorruptedGradientFails) {
  const Result r = cws({"gradcheck", "--seed", "1", "--corrupt-gradient"});
  EXPECT_NE(r.code, 0);
}

TEST(Gradcheck, ModelCheckCoversBigramChannel) {
  cli::GradcheckOptions opts;
  opts.bigram = true;
  opts.window = 3;
  EXPECT_LT(cli::model_gradient_check(opts), cli::kGradcheckThreshold);
}

class TrainedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("cli");
    const Result r = cws({"train", "--train", CWS_TOY_CORPUS, "--dev", CWS_TOY_CORPUS, "--out",
                          (*dir_ / "model").string(), "--hidden", "32", "--emb-dim", "16",
                          "--batch-size", "4", "--epochs", "40"});
    ASSERT_EQ(r.code, 0) << r.err;
    train_out_ = new std::string(r.out);
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete train_out_;
  }
  static oracle::TempDir* dir_;
  static std::string* train_out_;
};

oracle::TempDir* TrainedModel::dir_ = nullptr;
std::string* TrainedModel::train_out_ = nullptr;

TEST_F(TrainedModel, PrintsOneLinePerEpoch) {
  std::istringstream lines(*train_out_);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    ++count;
    EXPECT_EQ(line.rfind("epoch=" + std::to_string(count) + " nll=", 0), 0u) << line;
    EXPECT_NE(line.find(" f1="), std::string::npos);
  }
  EXPECT_EQ(count, 40u);
  EXPECT_EQ(load_model(*dir_ / "model").config.hidden, 32u);
}

TEST_F(TrainedModel, SegmentsExampleSentence) {
  std::ofstream(*dir_ / "raw.txt") << "中国向全世界发出倡议\n\n北京是中国的首都\n";
  const Result r = cws({"segment", "--model", (*dir_ / "model").string(), "--input",
                        (*dir_ / "raw.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "中国 向 全世界 发出 倡议\n\n北京 是 中国 的 首都\n");
}

TEST_F(TrainedModel, SegmentConservesCharacters) {
  const std::string raw = "IBM公司在2001年发布了ＡＢＣ新产品１２３\n  我们 一起\n\n天安门\n";
  std::ofstream(*dir_ / "mixed.txt") << raw;
  const auto out_path = *dir_ / "mixed.seg";
  const Result r = cws({"segment", "--model", (*dir_ / "model").string(), "--input",
                        (*dir_ / "mixed.txt").string(), "--output", out_path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const std::string seg = read_file(out_path);
  EXPECT_EQ(strip_spaces(seg), strip_spaces(raw));
  // Latin and digit runs stay whole.
  EXPECT_NE(seg.find("IBM"), std::string::npos);
  EXPECT_NE(seg.find("2001"), std::string::npos);
}

TEST_F(TrainedModel, EvalScoresSegmentOutput) {
  std::ifstream gold(CWS_TOY_CORPUS);
  std::ofstream raw(*dir_ / "toy_raw.txt");
  std::string line;
  while (std::getline(gold, line)) raw << strip_spaces(line) << "\n";
  raw.close();
  const auto pred = *dir_ / "toy.seg";
  ASSERT_EQ(cws({"segment", "--model", (*dir_ / "model").string(), "--input",
                 (*dir_ / "toy_raw.txt").string(), "--output", pred.string()})
                .code,
            0);
  const Result r = cws({"eval", "--gold", CWS_TOY_CORPUS, "--pred", pred.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "p=1.0000 r=1.0000 f1=1.0000\n");
}

TEST(Train, SameSeedGivesIdenticalParams) {
  oracle::TempDir dir("det");
  auto train = [&](const std::string& name) {
    return cws({"train", "--train", CWS_TOY_CORPUS, "--epochs", "5", "--seed", "42", "--hidden", "12",
                "--emb-dim", "8", "--out", (dir / name).string()});
  };
  const Result a = train("a");
  const Result b = train("b");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(read_file(dir / "a" / "params.bin"), read_file(dir / "b" / "params.bin"));
  EXPECT_EQ(read_file(dir / "a" / "manifest.json"), read_file(dir / "b" / "manifest.json"));
}

TEST(Train, ReportsDefaultsAndSplit) {
  oracle::TempDir dir("defaults");
  const Result r = cws({"train", "--train", CWS_TOY_CORPUS, "--epochs", "1", "--out",
                        (dir / "m").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("batch=50 hidden=150 emb=100"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("split 90/10"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("train=29 dev=3"), std::string::npos) << r.err;
  EXPECT_EQ(load_model(dir / "m").config.hidden, 150u);
}

TEST(Train, UsesPretrainedEmbeddingDimension) {
  oracle::TempDir dir("emb");
  std::ofstream(dir / "vec.txt") << "2 3\n中 0.1 0.2 0.3\n国 0.4 0.5 0.6\n";
  const Result r = cws({"train", "--train", CWS_TOY_CORPUS, "--dev", CWS_TOY_CORPUS, "--epochs", "1",
                        "--hidden", "8", "--embeddings", (dir / "vec.txt").string(), "--out",
                        (dir / "m").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_model(dir / "m").config.emb_dim, 3u);
  const Result clash = cws({"train", "--train", CWS_TOY_CORPUS, "--epochs", "1", "--emb-dim", "4",
                            "--embeddings", (dir / "vec.txt").string(), "--out", (dir / "n").string()});
  EXPECT_NE(clash.code, 0);
}

TEST(Errors, ReportedWithNonzeroExit) {
  EXPECT_NE(cws({}).code, 0);
  EXPECT_NE(cws({"train", "--train", "/nonexistent.txt", "--out", "/tmp/x"}).code, 0);
  EXPECT_NE(cws({"segment", "--model", "/tmp", "--input", CWS_TOY_CORPUS}).code, 0);
  EXPECT_NE(cws({"eval", "--gold", CWS_TOY_CORPUS}).code, 0);
  EXPECT_NE(cws({"gradcheck", "--bogus"}).code, 0);
  oracle::TempDir dir("err");
  std::ofstream(dir / "bad.txt") << "中国\n\xff\n";
  const Result r = cws({"train", "--train", (dir / "bad.txt").string(), "--dev", CWS_TOY_CORPUS,
                        "--out", (dir / "m").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Help, PrintsUsage) {
  const Result r = cws({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("segment"), std::string::npos);
}

}  // namespace
}  // namespace cws
