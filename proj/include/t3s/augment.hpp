#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t3s/rng.hpp"

namespace t3s {

/// An RGB image with its segmentation target. The image is stored
/// channel-major (3, H, W) in [0, 1]; `soft_mask` is (K, H, W) and sums to
/// one at every pixel.
struct Sample {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 2;
  std::vector<double> image;
  std::vector<std::uint8_t> mask;
  std::vector<double> soft_mask;
  std::string domain;

  std::size_t pixels() const { return height * width; }
};

inline constexpr const char* kMixDomain = "mix";

/// Builds a sample with a one-hot soft mask from hard labels.
Sample make_sample(std::size_t height, std::size_t width, std::size_t classes,
                   std::vector<double> image, std::vector<std::uint8_t> mask, std::string domain);

/// lambda * p + (1 - lambda) * q on image and soft mask alike. The hard mask
/// of the result is the per-pixel argmax of the mixed soft mask (lowest
/// class on ties).
Sample mixup(const Sample& p, const Sample& q, double lambda);

/// lambda ~ U(0, 1), open interval.
double draw_lambda(Rng& rng);

}  // namespace t3s
