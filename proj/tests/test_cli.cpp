#include "dualhead/cli.hpp"
#include "dualhead/config.hpp"
#include "dualhead/csv.hpp"
#include "dualhead/dataset.hpp"
#include "dualhead/error.hpp"
#include "dualhead/run_report.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dualhead;

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dualhead");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "dualhead_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> train_args(const std::string& task, const std::string& dir) {
  const std::string prefix = task == "A" ? "task_a" : "task_b";
  return {"train", "--task", task, "--train_path", DUALHEAD_TEST_DATA "/" + prefix + "_train.csv",
          "--val_path", DUALHEAD_TEST_DATA "/" + prefix + "_val.csv", "--out_dir", dir,
          "--hidden", "32", "--ffn_dim", "64", "--max_len", "32"};
}

// Trained once and shared by the read-only tests below.
const std::string& trained_task_a() {
  static const std::string dir = [] {
    auto d = scratch("shared_a");
    auto args = train_args("A", d);
    args.insert(args.end(), {"--residual", "true"});
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, UnknownFlagPrintsUsage) {
  auto r = run({"train", "--no-such-flag", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(run({}).code, kExitUsage); }

TEST(Cli, TaskRequiredForTrain) {
  auto r = run({"train", "--train_path", "x.csv", "--val_path", "y.csv"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--task"), std::string::npos);
}

TEST(Cli, MissingDataPathIsUsageError) {
  auto r = run({"train", "--task", "A", "--val_path", "y.csv"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("train_path"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyRejected) {
  auto r = run({"train", "--task", "A", "--set", "bogus=1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
}

TEST(Cli, MissingDataFileIsDataError) {
  auto dir = scratch("missing");
  auto r = run({"train", "--task", "A", "--train_path", dir + "/nope.csv", "--val_path", dir + "/nope.csv",
                "--out_dir", dir});
  EXPECT_EQ(r.code, kExitData);
}

TEST(Cli, TrainWritesSixEpochRecordsAndCheckpoint) {
  const auto& dir = trained_task_a();
  EXPECT_TRUE(fs::exists(dir + "/model.ckpt"));
  EXPECT_TRUE(fs::exists(dir + "/vocab.txt"));
  auto records = read_run_report(dir + "/report.jsonl");
  ASSERT_EQ(records.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(records[i].epoch, i + 1);
}

TEST(Cli, TrainStreamsRecordsToStdout) {
  auto dir = scratch("stream");
  auto args = train_args("B", dir);
  args.insert(args.end(), {"--epochs", "2"});
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = lines_of(r.out);
  ASSERT_EQ(out.size(), 2u);
  std::ifstream file(dir + "/report.jsonl");
  std::stringstream content;
  content << file.rdbuf();
  EXPECT_EQ(content.str(), r.out);
  EXPECT_EQ(nlohmann::json::parse(out[0])["epoch"], 1);
}

TEST(Cli, SameSeedGivesByteIdenticalReports) {
  std::string reports[2];
  for (int i = 0; i < 2; ++i) {
    auto dir = scratch("determinism_" + std::to_string(i));
    auto args = train_args("A", dir);
    args.insert(args.end(), {"--epochs", "2", "--seed", "9"});
    ASSERT_EQ(run(args).code, 0);
    std::ifstream in(dir + "/report.jsonl");
    std::stringstream s;
    s << in.rdbuf();
    reports[i] = s.str();
  }
  EXPECT_FALSE(reports[0].empty());
  EXPECT_EQ(reports[0], reports[1]);
}

TEST(Cli, EvalMatchesLastValidationRecord) {
  const auto& dir = trained_task_a();
  auto r = run({"eval", "--task", "A", "--out_dir", dir, "--val_path", DUALHEAD_TEST_DATA "/task_a_val.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto metrics = nlohmann::json::parse(r.out);
  auto last = read_run_report(dir + "/report.jsonl").back();
  EXPECT_EQ(metrics["loss"].get<double>(), last.val_loss);
  EXPECT_EQ(metrics["accuracy_1"].get<double>(), last.accuracy_1);
  EXPECT_EQ(metrics["accuracy_2"].get<double>(), last.accuracy_2);
  EXPECT_EQ(metrics["overall_accuracy"].get<double>(), last.overall_accuracy);
  EXPECT_EQ(metrics["task_f1"].get<double>(), last.task_f1);
}

TEST(Cli, EvalRejectsWrongTask) {
  const auto& dir = trained_task_a();
  auto r = run({"eval", "--task", "B", "--out_dir", dir, "--val_path", DUALHEAD_TEST_DATA "/task_b_val.csv"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("task"), std::string::npos) << r.err;
}

TEST(Cli, EvalRejectsForeignVocabulary) {
  const auto& dir = trained_task_a();
  auto other = scratch("foreign_vocab");
  fs::copy_file(dir + "/model.ckpt", other + "/model.ckpt");
  ASSERT_EQ(run({"tokenize", "--corpus", DUALHEAD_TEST_DATA "/corpus_mixed.txt", "--vocab_path",
                 other + "/vocab.txt", "--vocab_size", "300"})
                .code,
            0);
  auto r = run({"eval", "--task", "A", "--out_dir", other, "--val_path", DUALHEAD_TEST_DATA "/task_a_val.csv"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("vocabulary"), std::string::npos) << r.err;
}

TEST(Cli, PredictWritesLabelsAndProbabilities) {
  const auto& dir = trained_task_a();
  auto r = run({"predict", "--task", "A", "--out_dir", dir, "--predict_path", DUALHEAD_TEST_DATA "/task_a_predict.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir + "/predictions.csv");
  std::stringstream s;
  s << in.rdbuf();
  auto records = parse_csv(s.str());
  ASSERT_EQ(records.size(), 7u);
  EXPECT_EQ(records[0].fields,
            (std::vector<std::string>{"id", "fake", "hate", "p_fake_0", "p_fake_1", "p_hate_0", "p_hate_1"}));
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    EXPECT_NEAR(std::stod(f[3]) + std::stod(f[4]), 1.0, 1e-12);
    EXPECT_TRUE(f[1] == "0" || f[1] == "1");
  }
}

TEST(Cli, ConfigFileWithFlagPrecedence) {
  auto dir = scratch("config_file");
  {
    std::ofstream cfg(dir + "/run.cfg");
    cfg << "# small run\nepochs = 1\nhidden = 16\nattn_heads = 2\nffn_dim = 32\nseed = 5\n";
  }
  auto args = train_args("A", dir);
  args.insert(args.end(), {"--config", dir + "/run.cfg", "--epochs", "2"});
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).size(), 2u);
}

TEST(Cli, GradcheckPassesAndListsBothVariants) {
  auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("dual_head_model[residual]"), std::string::npos);
  EXPECT_NE(r.out.find("dual_head_model[no_residual]"), std::string::npos);
}

TEST(Cli, GradcheckFaultInjectionFailsNamingGelu) {
  auto r = run({"gradcheck", "--inject-fault", "gelu"});
  EXPECT_EQ(r.code, kExitVerification);
  EXPECT_NE(r.out.find("FAIL gelu"), std::string::npos) << r.out;
}

TEST(Cli, TokenizeRoundTrip) {
  auto dir = scratch("tokenize");
  ASSERT_EQ(run({"tokenize", "--corpus", DUALHEAD_TEST_DATA "/corpus_mixed.txt", "--out_dir", dir}).code, 0);
  auto r = run({"tokenize", "--out_dir", dir, "--text", "आज  ki   खबर viral"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["decoded"], "आज ki खबर viral");
  EXPECT_EQ(j["ids"][0], 0);
}

TEST(Cli, BinaryExitCodes) {
  const int status = std::system(DUALHEAD_CLI " train --definitely-not-a-flag > /dev/null 2>&1");
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
  const int help = std::system(DUALHEAD_CLI " --help > /dev/null 2>&1");
  EXPECT_EQ(WEXITSTATUS(help), 0);
}
