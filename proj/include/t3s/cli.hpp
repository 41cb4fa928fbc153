#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t3s/evalmetrics.hpp"
#include "t3s/segmodel.hpp"
#include "t3s/synthdomains.hpp"

namespace t3s {

/// Malformed config file or flag value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  PipelineConfig pipeline;  // arm flags below decide fm, mixup and style use
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  LayoutOptions layout;
  bool fm_analogue = true;
  bool mixup = true;
  bool csdm = true;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool timing = false;
  std::size_t jobs = 1;
  std::vector<std::string> warnings;  // unknown keys seen while loading
};

/// Sections [train], [data] and [ablation] of `key = value` lines; `#`
/// starts a comment. Unknown keys become warnings; values that fail to
/// parse throw ConfigError naming the line.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// Pipeline settings of one ablation arm. With csdm off the style hook is
/// disabled and the orthogonality weight is zero; with mixup off the mixup
/// probability is zero.
PipelineConfig arm_pipeline(const RunConfig& cfg, bool fm, bool mixup, bool csdm,
                            std::uint64_t seed);

struct ArmResult {
  bool fm = false;
  bool mixup = false;
  bool csdm = false;
  std::uint64_t seed = 0;
  SegScores unseen;
  SegScores seen;
  std::uint64_t checksum = 0;
};

ArmResult run_arm(const RunConfig& cfg, const std::vector<DomainDataset>& domains, bool fm,
                  bool mixup, bool csdm, std::uint64_t seed);

/// Every (fm, mixup, csdm) combination for every seed, in arm-major order.
std::vector<ArmResult> run_ablation(const RunConfig& cfg, const std::vector<DomainDataset>& domains);
void write_ablation_csv(const std::vector<ArmResult>& rows, const std::filesystem::path& path);

/// Entry point of the `t3s` tool. 0 on success, 1 on runtime failure, 2 on
/// usage errors.
int dispatch(int argc, char** argv);

}  // namespace t3s
