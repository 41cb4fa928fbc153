#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "t3s/cli.hpp"

using namespace t3s;
namespace fs = std::filesystem;

namespace {

const char* kTiny =
    "[train]\n"
    "epochs = 1\n"
    "pretrain_epochs = 1\n"
    "batch_size = 4\n"
    "channels = 4\n"
    "n_bases = 3\n"
    "[data]\n"
    "size = 16\n"
    "source_count = 4\n"
    "target_count = 2\n"
    "[ablation]\n"
    "seeds = 1\n";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("t3s_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(T3S_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.ini";
  std::ofstream(p) << kTiny;
  return p;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const RunConfig c = parse_config("");
  const RunConfig d;
  EXPECT_EQ(c.pipeline.train.epochs, d.pipeline.train.epochs);
  EXPECT_EQ(c.pipeline.train.lambda_sty, 0.1);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_TRUE(c.warnings.empty());
}

TEST(Config, ParsesSectionsAndComments) {
  const RunConfig c = parse_config(
      "# header\nlambda_sty = 0.25\n[data]\nsize = 16  # small\n[ablation]\nseeds = 4, 5\nmixup = off\n");
  EXPECT_EQ(c.pipeline.train.lambda_sty, 0.25);
  EXPECT_EQ(c.layout.size, 16u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_FALSE(c.mixup);
}

TEST(Config, BadValueNamesTheLine) {
  try {
    parse_config("[train]\nbatch_size = eight\n", "run.ini");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("run.ini:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch_size"), std::string::npos) << msg;
  }
}

TEST(Config, RejectsNegativeCountsAndBadBooleans) {
  EXPECT_THROW(parse_config("epochs = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("[ablation]\nfm = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_config("jobs = 0\n"), ConfigError);
}

TEST(Config, UnknownKeysAndSectionsWarn) {
  const RunConfig c = parse_config("colour = blue\n[extra]\nx = 1\n");
  ASSERT_EQ(c.warnings.size(), 2u);
  EXPECT_NE(c.warnings[0].find("colour"), std::string::npos);
  EXPECT_NE(c.warnings[1].find("extra"), std::string::npos);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/t3s.ini"), ConfigError);
}

TEST(Arms, FlagMapping) {
  const RunConfig c = parse_config(kTiny);
  const PipelineConfig base = arm_pipeline(c, false, false, false, 9);
  EXPECT_FALSE(base.fm);
  EXPECT_EQ(base.train.mixup_prob, 0.0);
  EXPECT_EQ(base.train.lambda_sty, 0.0);
  EXPECT_EQ(base.train.style_mode, StyleMode::kOff);
  EXPECT_EQ(base.train.seed, 9u);
  const PipelineConfig full = arm_pipeline(c, true, true, true, 9);
  EXPECT_TRUE(full.fm);
  EXPECT_EQ(full.train.mixup_prob, c.pipeline.train.mixup_prob);
  EXPECT_EQ(full.train.lambda_sty, c.pipeline.train.lambda_sty);
  EXPECT_EQ(full.train.style_mode, StyleMode::kAlways);
}

TEST(Arms, BaselineArmIsPlainTraining) {
  const RunConfig c = parse_config(kTiny);
  const auto domains = default_layout(c.layout);
  PipelineConfig plain = c.pipeline;
  plain.fm = false;
  plain.train.seed = 3;
  plain.train.mixup_prob = 0.0;
  plain.train.lambda_sty = 0.0;
  plain.train.style_mode = StyleMode::kOff;
  const TrainResult tr = train_pipeline(select_split(domains, Split::kSource), plain);
  const ArmResult arm = run_arm(c, domains, false, false, false, 3);
  EXPECT_EQ(arm.checksum, tr.params.checksum());
  EXPECT_EQ(arm.unseen.dice,
            evaluate_model(tr.params, select_split(domains, Split::kTargetUnseen)).dice);
}

TEST(Arms, AblationCoversEveryArmAndSeed) {
  RunConfig c = parse_config(kTiny);
  c.seeds = {1, 2};
  const auto rows = run_ablation(c, default_layout(c.layout));
  ASSERT_EQ(rows.size(), 16u);
  for (int arm = 0; arm < 8; ++arm)
    for (int s = 0; s < 2; ++s) {
      const ArmResult& r = rows[static_cast<std::size_t>(arm * 2 + s)];
      EXPECT_EQ(r.fm, (arm & 4) != 0);
      EXPECT_EQ(r.mixup, (arm & 2) != 0);
      EXPECT_EQ(r.csdm, (arm & 1) != 0);
      EXPECT_EQ(r.seed, static_cast<std::uint64_t>(s + 1));
    }
  const fs::path dir = fresh_dir("ablation_csv");
  write_ablation_csv(rows, dir / "a.csv");
  std::istringstream in(slurp(dir / "a.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "fm,mixup,csdm,seed,iou,dice,seen_iou,seen_dice");
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 16u);
}

TEST(Tool, UsageErrorsExitTwo) {
  EXPECT_EQ(run_tool(""), 2);
  EXPECT_EQ(run_tool("frobnicate"), 2);
  EXPECT_EQ(run_tool("gen --no-such-flag"), 2);
  EXPECT_EQ(run_tool("train --epochs many"), 2);
  EXPECT_EQ(run_tool("project"), 2);
  EXPECT_EQ(run_tool("--help"), 0);
  const fs::path dir = fresh_dir("bad_config");
  std::ofstream(dir / "bad.ini") << "batch_size = eight\n";
  EXPECT_EQ(run_tool("gen -c " + (dir / "bad.ini").string() + " --out " + (dir / "d").string()), 2);
}

TEST(Tool, RuntimeFailureExitsOne) {
  const fs::path dir = fresh_dir("runtime");
  EXPECT_EQ(run_tool("eval --data " + (dir / "missing").string() + " --out " + dir.string()), 1);
}

TEST(Tool, GenIsByteDeterministic) {
  const fs::path dir = fresh_dir("gen");
  const std::string cfg = tiny_config(dir).string();
  ASSERT_EQ(run_tool("gen -c " + cfg + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_tool("gen -c " + cfg + " --out " + (dir / "b").string()), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = dir / "b" / fs::relative(e.path(), dir / "a");
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path();
  }
  EXPECT_GT(files, 9u);
  ASSERT_EQ(run_tool("gen -c " + cfg + " --seed 8 --out " + (dir / "c").string()), 0);
  EXPECT_NE(slurp(dir / "a/layout.txt").size(), 0u);
  const auto dirs = layout_dirs(dir / "a");
  EXPECT_NE(slurp(dir / "a" / dirs[0] / "0000.ppm"), slurp(dir / "c" / dirs[0] / "0000.ppm"));
}

TEST(Tool, EvalOfGroundTruthPredictionsIsPerfect) {
  const fs::path dir = fresh_dir("eval_gt");
  const std::string cfg = tiny_config(dir).string();
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_tool("gen -c " + cfg + " --out " + data), 0);
  ASSERT_EQ(run_tool("eval -c " + cfg + " --data " + data + " --predictions " + data + " --out " +
                     (dir / "out").string()),
            0);
  std::istringstream in(slurp(dir / "out/eval.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "domain,split,images,iou,dice");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.size() - 4), ",1,1") << line;
  }
  EXPECT_EQ(rows, 12u);  // 9 domains and 3 split totals
}

TEST(Tool, EndToEndProducesAllOutputs) {
  const fs::path dir = fresh_dir("e2e");
  const std::string cfg = tiny_config(dir).string();
  const std::string data = (dir / "data").string(), out = (dir / "out").string();
  ASSERT_EQ(run_tool("gen -c " + cfg + " --out " + data), 0);
  ASSERT_EQ(run_tool("train -c " + cfg + " --data " + data + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out/model.t3s"));
  EXPECT_TRUE(fs::exists(dir / "out/train_report.csv"));
  ASSERT_EQ(run_tool("eval -c " + cfg + " --data " + data + " --out " + out), 0);
  ASSERT_EQ(run_tool("diagnose -c " + cfg + " --data " + data + " --out " + out), 0);
  for (const char* f : {"eval.csv", "styles.csv", "shift_pre.csv", "shift_post.csv", "shift_pre.txt",
                        "shift_post.txt", "projection.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const std::string unseen = (dir / "data" / layout_dirs(dir / "data").back()).string();
  ASSERT_EQ(run_tool("project -c " + cfg + " --checkpoint " + out + "/model.t3s --input " + unseen +
                     " --out " + (dir / "proj").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "proj/0000_mask.pgm"));
  EXPECT_TRUE(fs::exists(dir / "proj/projection_weights.csv"));
  ASSERT_EQ(run_tool("ablate -c " + cfg + " --data " + data + " --out " + (dir / "abl").string()), 0);
  std::istringstream in(slurp(dir / "abl/ablation.csv"));
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 9u);
  EXPECT_TRUE(fs::exists(dir / "abl/ablation_summary.csv"));
}
