// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <unistd.h>

#include "cli_pipeline.hpp"

namespace fs = std::filesystem;
using clipipe::run;
using edgeseizure::cli::kExitDataError;
using edgeseizure::cli::kExitOk;
using edgeseizure::cli::kExitUsage;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("edgeseizure_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("stream"), std::string::npos);
  EXPECT_EQ(run({"stream", "--help"}).code, kExitOk);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"synth"}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--out", p("r"), "--hours", "-1"}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--out", p("r"), "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--out", p("w.edl")}).code, kExitUsage);
  EXPECT_EQ(run({"cost", "--family", "rnn"}).code, kExitUsage);
  EXPECT_EQ(run({"cost", "--format", "xml"}).code, kExitUsage);
}

TEST_F(CliTest, DataErrorsExitOne) {
  const auto missing = run({"rank", "--recording", p("nothing")});
  EXPECT_EQ(missing.code, kExitDataError);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  write("junk.edl", "not a weight file");
  const auto bad = run({"quantize", "--weights", p("junk.edl"), "--out", p("q.edl")});
  EXPECT_EQ(bad.code, kExitDataError);
  EXPECT_NE(bad.err.find("BadMagic"), std::string::npos);
}

TEST_F(CliTest, ConfigValidation) {
  ASSERT_EQ(run({"synth", "--out", p("r"), "--hours", "0.05", "--fs", "64", "--channels", "2"}).code, 0);
  ASSERT_EQ(run({"train", "--init-only", "--out", p("w.edl"), "--family", "dnn", "--fs", "64",
                 "--channels", "2", "--seconds", "0.5"}).code, 0);
  const std::vector<std::string> base{"stream", "--recording", p("r"), "--weights", p("w.edl"), "--config"};
  auto with = [&](const std::string& text) {
    write("c.json", text);
    auto args = base;
    args.push_back(p("c.json"));
    return run(args);
  };
  auto r = with(R"({"train": {"xyz": 1}})");
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_NE(r.err.find("unknown field 'train.xyz'"), std::string::npos);
  r = with(R"({"wmv": {"window": "sixty"}})");
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_NE(r.err.find("wmv.window"), std::string::npos);
  EXPECT_NE(r.err.find("wrong type"), std::string::npos);
  r = with(R"({"extra": {}})");
  EXPECT_EQ(r.code, kExitDataError);
  r = with(R"({"wmv": {"theta_ictal": -1}})");
  EXPECT_EQ(r.code, kExitDataError);
  r = with("{oops");
  EXPECT_EQ(r.code, kExitDataError);
  r = with(R"({"wmv": {"window": 4, "theta_ictal": 1e9, "theta_preictal": 1e9}})");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("events=0\n"), std::string::npos);
}

TEST_F(CliTest, StreamWithoutAnnotations) {
  ASSERT_EQ(run({"synth", "--out", p("r"), "--hours", "0.05", "--seizures", "0", "--fs", "64",
                 "--channels", "3"}).code, 0);
  ASSERT_EQ(run({"train", "--init-only", "--out", p("w.edl"), "--fs", "64", "--channels", "3",
                 "--seed", "4"}).code, 0);
  const auto r = run({"stream", "--recording", p("r"), "--weights", p("w.edl"), "--csv", p("s.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("detection_sensitivity=nan\n"), std::string::npos);
  const auto csv = clipipe::slurp(p("s.csv"));
  EXPECT_EQ(csv.rfind("time_s,score_ictal,score_preictal,pred_label,event\n", 0), 0u);
  // One row per half-second window start in 180 s: (180 - 1) / 0.5 + 1.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 359);
  // Rank needs annotations.
  EXPECT_EQ(run({"rank", "--recording", p("r")}).code, kExitDataError);
}

TEST_F(CliTest, TableFormat) {
  const auto r = run({"cost", "--family", "dnn", "--format", "table"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("macs_fc "), std::string::npos);
  EXPECT_EQ(r.out.find('='), std::string::npos);
  const auto kv = run({"cost", "--family", "dnn"});
  EXPECT_NE(kv.out.find("macs_fc=92720\n"), std::string::npos);
}

TEST_F(CliTest, PipelineIsByteDeterministic) {
  ASSERT_EQ(clipipe::run_pipeline(dir_ / "a", "1"), "");
  ASSERT_EQ(clipipe::run_pipeline(dir_ / "b", "1"), "");
  ASSERT_EQ(clipipe::run_pipeline(dir_ / "c", "3"), "");
  EXPECT_EQ(clipipe::differing_outputs(dir_ / "a", dir_ / "b"), std::vector<std::string>{});
  EXPECT_EQ(clipipe::differing_outputs(dir_ / "a", dir_ / "c"), std::vector<std::string>{});
  const auto kfold = clipipe::slurp(dir_ / "a" / "kfold.txt");
  EXPECT_NE(kfold.find("fold3_"), std::string::npos);
  const auto loocv = clipipe::slurp(dir_ / "a" / "loocv.txt");
  EXPECT_NE(loocv.find("fold4_detection_tp"), std::string::npos);
  EXPECT_NE(loocv.find("total_detection_tp"), std::string::npos);
}
