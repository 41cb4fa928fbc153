#include "t3s/augment.hpp"

#include "t3s/tensor.hpp"

namespace t3s {

Sample make_sample(std::size_t height, std::size_t width, std::size_t classes,
                   std::vector<double> image, std::vector<std::uint8_t> mask, std::string domain) {
  const std::size_t px = height * width;
  if (image.size() != 3 * px || mask.size() != px) {
    throw ShapeError("make_sample: image/mask sizes do not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  Sample s;
  s.height = height;
  s.width = width;
  s.classes = classes;
  s.image = std::move(image);
  s.mask = std::move(mask);
  s.domain = std::move(domain);
  s.soft_mask.assign(classes * px, 0.0);
  for (std::size_t i = 0; i < px; ++i) {
    if (s.mask[i] >= classes) {
      throw Error("make_sample: label " + std::to_string(s.mask[i]) + " out of range at pixel " +
                  std::to_string(i));
    }
    s.soft_mask[s.mask[i] * px + i] = 1.0;
  }
  return s;
}

Sample mixup(const Sample& p, const Sample& q, double lambda) {
  if (p.height != q.height || p.width != q.width || p.classes != q.classes) {
    throw ShapeError("mixup: shape mismatch " + std::to_string(p.height) + "x" +
                     std::to_string(p.width) + " vs " + std::to_string(q.height) + "x" +
                     std::to_string(q.width));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("mixup: lambda outside [0, 1]");
  const double mu = 1.0 - lambda;
  Sample out;
  out.height = p.height;
  out.width = p.width;
  out.classes = p.classes;
  out.domain = kMixDomain;
  out.image.resize(p.image.size());
  for (std::size_t i = 0; i < p.image.size(); ++i) out.image[i] = lambda * p.image[i] + mu * q.image[i];
  out.soft_mask.resize(p.soft_mask.size());
  for (std::size_t i = 0; i < p.soft_mask.size(); ++i) {
    out.soft_mask[i] = lambda * p.soft_mask[i] + mu * q.soft_mask[i];
  }
  const std::size_t px = p.pixels();
  out.mask.assign(px, 0);
  for (std::size_t i = 0; i < px; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.classes; ++k) {
      if (out.soft_mask[k * px + i] > out.soft_mask[best * px + i]) best = k;
    }
    out.mask[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

double draw_lambda(Rng& rng) { return uniform_open(rng); }

}  // namespace t3s
