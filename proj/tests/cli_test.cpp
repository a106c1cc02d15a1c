// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "eagr/eagr.hpp"
#include "json.hpp"

namespace eagr {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;  ///< stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(EAGR_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  auto bytes = detail::read_file(p);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

double field(const std::string& out, const std::string& key) {
  const auto at = out.find(key + " ");
  if (at == std::string::npos) return std::nan("");
  return std::stod(out.substr(at + key.size() + 1));
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("eagr_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("synth --out " + (dir_ / "train").string() + " --count 16 --seed 3").code, 0);
    ASSERT_EQ(run("synth --out " + (dir_ / "test").string() + " --count 8 --seed 4").code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  /// Writes a config file and trains on the shared training set.
  static RunResult train_with(const std::string& name, const std::string& config, const std::string& extra = "") {
    write_text(path(name + ".cfg"), config);
    return run("train --data " + path("train") + " --config " + path(name + ".cfg") + " --out " + path(name + ".ckpt") +
               " " + extra);
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, SynthIsByteReproducible) {
  ASSERT_EQ(run("synth --out " + path("a") + " --count 3 --seed 9 --size 20x24").code, 0);
  ASSERT_EQ(run("synth --out " + path("b") + " --count 3 --seed 9 --size 20x24").code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(path("a"))) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(path("b")) / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 7u);  // image and labels per sample, plus the manifest
  auto samples = load_dataset(path("a"));
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].image.shape(), (Shape{20, 24, 3}));
}

TEST_F(Cli, SynthCountZeroAndHundred) {
  ASSERT_EQ(run("synth --out " + path("empty") + " --count 0").code, 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(path("empty")), fs::directory_iterator()), 1);
  EXPECT_TRUE(load_dataset(path("empty")).empty());
  ASSERT_EQ(run("synth --out " + path("hundred") + " --count 100 --seed 5").code, 0);
  auto samples = load_dataset(path("hundred"));
  ASSERT_EQ(samples.size(), 100u);
  for (const auto& s : samples) EXPECT_NO_THROW(s.labels.validate(kFaceClasses));
}

TEST_F(Cli, TrainSmokeRunLowersLoss) {
  RunResult r = train_with("smoke", "epochs=1\n");
  ASSERT_EQ(r.code, 0) << r.out;
  const double initial = field(r.out, "initial_loss"), final_loss = field(r.out, "final_loss");
  EXPECT_TRUE(std::isfinite(initial) && std::isfinite(final_loss)) << r.out;
  EXPECT_LT(final_loss, initial);
  EXPECT_NE(r.out.find("step 4 "), std::string::npos);
  EXPECT_TRUE(fs::exists(path("smoke.ckpt.log")));
}

TEST_F(Cli, BaselineCheckpointHasNoGraphBlocks) {
  ASSERT_EQ(train_with("base", "epochs=1\n", "--ablate baseline").code, 0);
  Checkpoint ck = Checkpoint::load(path("base.ckpt"));
  for (const auto& e : ck.entries()) EXPECT_NE(e.name.rfind("eagr.", 0), 0u) << e.name;
  EXPECT_EQ(ck.find(kAblationEntry)->item(), static_cast<double>(Ablation::kBaseline));
}

TEST_F(Cli, ZeroLearningRateKeepsInitialization) {
  ASSERT_EQ(train_with("frozen", "epochs=1\nlr=0\nseed=11\n").code, 0);
  NetConfig cfg;
  NetParams loaded = params_from_checkpoint(Checkpoint::load(path("frozen.ckpt")), cfg);
  cfg.seed = 11;
  NetParams init = NetParams::init(cfg);
  auto a = loaded.named(), b = init.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].second->values(), b[i].second->values()) << a[i].first;
}

TEST_F(Cli, CheckpointReencodesIdentically) {
  ASSERT_EQ(train_with("rt", "epochs=1\n").code, 0);
  const auto bytes = detail::read_file(path("rt.ckpt"));
  Checkpoint ck = Checkpoint::load(path("rt.ckpt"));
  EXPECT_EQ(ck.encode(), bytes);
  NetConfig cfg;
  NetParams p = params_from_checkpoint(ck, cfg);
  EXPECT_EQ(to_checkpoint(p, cfg).encode(), bytes);
}

TEST_F(Cli, EvalIsDeterministicAndBounded) {
  ASSERT_EQ(train_with("untrained", "epochs=1\nlr=0\n").code, 0);
  const std::string args = "eval --data " + path("test") + " --ckpt " + path("untrained.ckpt") + " --format json";
  RunResult a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["samples"], 8);
  for (const char* key : {"pixel_acc", "miou", "mean_f1_excl_bg", "merged_overall_f1"}) {
    EXPECT_GE(j[key].get<double>(), 0.0) << key;
    EXPECT_LE(j[key].get<double>(), 1.0) << key;
  }
  RunResult text = run("eval --data " + path("test") + " --ckpt " + path("untrained.ckpt"));
  ASSERT_EQ(text.code, 0);
  EXPECT_NE(text.out.find("samples=8\n"), std::string::npos);
  EXPECT_NE(text.out.find("f1.nose="), std::string::npos);
}

TEST_F(Cli, TrainedModelBeatsAllBackground) {
  ASSERT_EQ(train_with("fit", "epochs=6\nlr=0.05\n").code, 0);
  RunResult r = run("eval --data " + path("test") + " --ckpt " + path("fit.ckpt") + " --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  ConfusionMatrix bg(kFaceClasses);
  for (const auto& s : load_dataset(path("test")))
    accumulate(bg, LabelMap(s.labels.height, s.labels.width), s.labels);
  EXPECT_GT(nlohmann::json::parse(r.out)["mean_f1_excl_bg"].get<double>(), scores(bg).mean_f1_excl_bg);
}

TEST_F(Cli, TrainWritesPerEpochEvaluation) {
  ASSERT_EQ(train_with("logged", "epochs=2\n", "--eval-data " + path("test") + " --log " + path("run.log")).code, 0);
  const std::string log = slurp(path("run.log"));
  EXPECT_NE(log.find("miou"), std::string::npos) << log;
}

TEST_F(Cli, GradcheckPasses) {
  RunResult r = run("gradcheck --seeds 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, BenchReportsExactRatio) {
  RunResult r = run("bench --size 12x12 --channels 8 --t 4 --grid 3x3 --sel 2x2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("attention_mac_ratio=36/1"), std::string::npos) << r.out;
  EXPECT_EQ(run("bench --grid 6").code, 1);
}

TEST_F(Cli, ResponseMap) {
  ASSERT_EQ(train_with("resp", "epochs=1\n").code, 0);
  const std::string base = "respmap --ckpt " + path("resp.ckpt") + " --image " + path("test/000000_image.ppm");
  RunResult r = run(base + " --vertex 3 --out " + path("v3.pgm"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(field(r.out, "row_sum"), 1.0, 1e-9);
  LabelMap img = read_pgm(path("v3.pgm"));
  EXPECT_GT(img.size(), 0u);
  EXPECT_EQ(run(base + " --vertex 16 --out " + path("bad.pgm")).code, 1);
  ASSERT_EQ(train_with("resp_base", "epochs=1\n", "--ablate baseline").code, 0);
  EXPECT_EQ(run("respmap --ckpt " + path("resp_base.ckpt") + " --image " + path("test/000000_image.ppm") +
                " --vertex 0 --out " + path("x.pgm"))
                .code,
            1);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("synth --count 3").code, 1);
  EXPECT_EQ(run("train --data x --config y --out z --ablate everything").code, 1);
  EXPECT_EQ(run("eval --data x --ckpt y --format xml").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, IoAndParseErrorsExitThree) {
  EXPECT_EQ(run("eval --data " + path("nowhere") + " --ckpt " + path("nothing.ckpt")).code, 3);
  write_text(path("broken.cfg"), "epochs=1\nlr=fast\n");
  RunResult r = run("train --data " + path("train") + " --config " + path("broken.cfg") + " --out " + path("b.ckpt"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
  ASSERT_EQ(train_with("trunc", "epochs=1\n").code, 0);
  auto bytes = detail::read_file(path("trunc.ckpt"));
  bytes.resize(bytes.size() / 2);
  detail::write_file(path("trunc.ckpt"), bytes);
  EXPECT_EQ(run("eval --data " + path("test") + " --ckpt " + path("trunc.ckpt")).code, 3);
}

}  // namespace
}  // namespace eagr
