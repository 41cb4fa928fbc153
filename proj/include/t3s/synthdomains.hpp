#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t3s/augment.hpp"

namespace t3s {

/// Appearance of one synthetic domain. Content (shapes and texture) depends
/// only on `seed` and the sample index; the style parameters act on the
/// rendered content afterwards.
struct DomainSpec {
  std::string name;
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  double noise = 0.0;
  std::size_t min_shapes = 1;
  std::size_t max_shapes = 4;
  std::uint64_t seed = 0;
};

enum class Split { kSource, kTargetSeen, kTargetUnseen };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct DomainDataset {
  std::string name;
  Split split = Split::kSource;
  std::vector<Sample> samples;
};

inline constexpr std::size_t kNumClasses = 2;

/// Validates the ranges of a spec (gains > 0, |bias| <= 0.5, noise in
/// [0, 0.3], 1 <= min_shapes <= max_shapes).
void validate_spec(const DomainSpec& spec);

/// Content rendering shared by all domains: base RGB image and exact mask.
struct Content {
  std::vector<double> base;  // (3, size, size) in [0, 1]
  std::vector<std::uint8_t> mask;
};
Content render_content(std::uint64_t seed, std::size_t index, std::size_t size,
                       std::size_t min_shapes, std::size_t max_shapes);

DomainDataset gen_domain(const DomainSpec& spec, std::size_t count, std::size_t size,
                         Split split = Split::kSource);

/// Style specs of the default experiment: three source styles, reused by the
/// seen-style targets, and three unseen styles outside their hull.
std::vector<DomainSpec> default_source_specs(std::uint64_t seed);
std::vector<DomainSpec> default_unseen_specs(std::uint64_t seed);

struct LayoutOptions {
  std::uint64_t seed = 7;
  std::size_t size = 32;
  std::size_t source_count = 60;
  std::size_t target_count = 20;
};

/// 3 source domains, 3 seen-style targets, 3 unseen-style targets.
std::vector<DomainDataset> default_layout(const LayoutOptions& opts);

/// One domain per directory: numbered PPM images, PGM masks (value = class
/// index) and `manifest.txt` listing "image<TAB>mask<TAB>domain" per line.
void write_dataset(const DomainDataset& ds, const std::filesystem::path& dir);
DomainDataset read_dataset(const std::filesystem::path& dir);

/// A layout root holds `layout.txt` with "split<TAB>relative-dir" lines.
void write_layout(const std::vector<DomainDataset>& domains, const std::filesystem::path& root);
std::vector<DomainDataset> read_layout(const std::filesystem::path& root);
std::vector<std::string> layout_dirs(const std::filesystem::path& root);

std::vector<const DomainDataset*> select_split(const std::vector<DomainDataset>& domains,
                                               Split split);

}  // namespace t3s
