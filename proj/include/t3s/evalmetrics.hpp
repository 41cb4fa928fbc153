#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "t3s/synthdomains.hpp"

namespace t3s {

struct ModelParams;

struct ConfusionCounts {
  std::vector<std::uint64_t> tp, fp, fn;
};

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                          std::size_t classes);

/// TP / (TP + FP + FN); 1.0 when the class is absent from both masks.
double iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t k);
/// 2TP / (2TP + FP + FN); 1.0 when the class is absent from both masks.
double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t k);

struct SegScores {
  double iou = 0.0;
  double dice = 0.0;
};

/// Class-averaged scores of one image.
SegScores macro_scores(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                       std::size_t classes);

/// Per-image macro scores averaged over images.
class ScoreAccumulator {
 public:
  void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
           std::size_t classes);
  SegScores mean() const;
  std::size_t count() const { return count_; }

 private:
  double iou_sum_ = 0.0;
  double dice_sum_ = 0.0;
  std::size_t count_ = 0;
};

/// Model predictions scored against every sample of the given domains.
SegScores evaluate_model(const ModelParams& params, const std::vector<const DomainDataset*>& domains,
                         std::size_t limit = 0);

struct StyleRow {
  std::string domain;
  std::string split;
  std::string phase;  // "pre" or "post"
  std::vector<double> coords;  // mu followed by sigma
};

/// One pre- and one post-projection row per sample.
std::vector<StyleRow> collect_styles(const std::vector<const DomainDataset*>& domains,
                                     const ModelParams& params);
void write_styles_csv(const std::vector<StyleRow>& rows, std::size_t channels,
                      const std::filesystem::path& path);
std::vector<StyleRow> export_styles(const std::vector<const DomainDataset*>& domains,
                                    const ModelParams& params, const std::filesystem::path& path);

struct Pca2d {
  std::vector<std::array<double, 2>> coords;
  std::array<std::vector<double>, 2> axes;
  double retained_variance = 0.0;  // fraction of total variance on the two axes
  bool degenerate = false;         // zero-variance input; coords are all zero
  std::size_t iterations = 0;
};

/// Projection of centred points onto their top-2 principal directions, by
/// power iteration with deflation (tolerance 1e-9, at most 1000 iterations).
Pca2d pca2d(const std::vector<std::vector<double>>& points);

}  // namespace t3s
