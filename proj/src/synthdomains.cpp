#include "t3s/synthdomains.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "t3s/netpbm.hpp"
#include "t3s/rng.hpp"

namespace t3s {
namespace {

// Base palette: eosin-like background, haematoxylin-like foreground.
constexpr std::array<double, 3> kBackground{0.85, 0.65, 0.78};
constexpr std::array<double, 3> kForeground{0.45, 0.30, 0.60};
constexpr double kSpeckle = 0.03;
constexpr double kShading = 0.05;
constexpr double kPi = 3.141592653589793;

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_open(rng); }

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string sample_stem(std::size_t i) {
  std::ostringstream os;
  os.width(4);
  os.fill('0');
  os << i;
  return os.str();
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kSource: return "source";
    case Split::kTargetSeen: return "target_seen";
    case Split::kTargetUnseen: return "target_unseen";
  }
  return "source";
}

Split parse_split(std::string_view name) {
  if (name == "source") return Split::kSource;
  if (name == "target_seen") return Split::kTargetSeen;
  if (name == "target_unseen") return Split::kTargetUnseen;
  throw Error("unknown split '" + std::string(name) + "'");
}

void validate_spec(const DomainSpec& spec) {
  for (int c = 0; c < 3; ++c) {
    if (!(spec.gain[c] > 0.0)) throw Error("domain " + spec.name + ": gains must be positive");
    if (std::abs(spec.bias[c]) > 0.5) throw Error("domain " + spec.name + ": bias outside [-0.5, 0.5]");
  }
  if (spec.noise < 0.0 || spec.noise > 0.3) throw Error("domain " + spec.name + ": noise outside [0, 0.3]");
  if (spec.min_shapes < 1 || spec.min_shapes > spec.max_shapes) {
    throw Error("domain " + spec.name + ": invalid shape-count range");
  }
}

Content render_content(std::uint64_t seed, std::size_t index, std::size_t size,
                       std::size_t min_shapes, std::size_t max_shapes) {
  Rng rng(derive_seed(seed, "content", index));
  const std::size_t px = size * size;
  const double s = static_cast<double>(size);
  Content out;
  out.mask.assign(px, 0);

  const std::size_t shapes = min_shapes + uniform_index(rng, max_shapes - min_shapes + 1);
  for (std::size_t k = 0; k < shapes; ++k) {
    const bool ellipse = uniform_open(rng) < 0.6;
    const double cx = uniform(rng, 0.15 * s, 0.85 * s);
    const double cy = uniform(rng, 0.15 * s, 0.85 * s);
    const double rx = uniform(rng, 0.08 * s, 0.2 * s);
    const double ry = uniform(rng, 0.08 * s, 0.2 * s);
    const double angle = uniform(rng, 0.0, kPi);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        bool inside = false;
        if (ellipse) {
          const double u = (ca * dx + sa * dy) / rx;
          const double v = (-sa * dx + ca * dy) / ry;
          inside = u * u + v * v <= 1.0;
        } else {
          inside = std::abs(dx) <= rx && std::abs(dy) <= ry;
        }
        if (inside) out.mask[y * size + x] = 1;
      }
  }

  const double fx = uniform(rng, 0.5, 2.0), fy = uniform(rng, 0.5, 2.0);
  const double phase = uniform(rng, 0.0, 2.0 * kPi);
  out.base.resize(3 * px);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t i = y * size + x;
      const auto& colour = out.mask[i] ? kForeground : kBackground;
      const double shade =
          kShading * std::sin(2.0 * kPi * (fx * static_cast<double>(x) + fy * static_cast<double>(y)) / s + phase);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = colour[c] + shade + kSpeckle * standard_normal(rng);
        out.base[c * px + i] = std::clamp(v, 0.0, 1.0);
      }
    }
  return out;
}

DomainDataset gen_domain(const DomainSpec& spec, std::size_t count, std::size_t size, Split split) {
  validate_spec(spec);
  if (count < 1) throw Error("gen_domain: count must be at least 1");
  if (size == 0 || size % 4 != 0) throw Error("gen_domain: size must be a positive multiple of 4");
  DomainDataset ds;
  ds.name = spec.name;
  ds.split = split;
  const std::size_t px = size * size;
  for (std::size_t i = 0; i < count; ++i) {
    Content content = render_content(spec.seed, i, size, spec.min_shapes, spec.max_shapes);
    Rng noise_rng(derive_seed(spec.seed, "style:" + spec.name, i));
    std::vector<double> image(3 * px);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < px; ++p) {
        double v = spec.gain[c] * content.base[c * px + p] + spec.bias[c];
        if (spec.noise > 0.0) v += spec.noise * standard_normal(noise_rng);
        image[c * px + p] = std::clamp(v, 0.0, 1.0);
      }
    ds.samples.push_back(
        make_sample(size, size, kNumClasses, std::move(image), std::move(content.mask), spec.name));
  }
  return ds;
}

std::vector<DomainSpec> default_source_specs(std::uint64_t seed) {
  std::vector<DomainSpec> specs = {
      {"stomach", {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.04, 1, 4, 0},
      {"pancreas", {1.0, 1.0, 1.0}, {-0.2, 0.1, -0.1}, 0.05, 1, 4, 0},
      {"colorectum", {1.0, 1.0, 1.0}, {0.0, -0.25, -0.05}, 0.04, 1, 4, 0},
  };
  for (auto& s : specs) s.seed = derive_seed(seed, s.name);
  return specs;
}

std::vector<DomainSpec> default_unseen_specs(std::uint64_t seed) {
  std::vector<DomainSpec> specs = {
      {"ampullary", {0.6, 0.6, 0.6}, {0.416, 0.49, 0.447}, 0.06, 1, 4, 0},
      {"gallbladder", {1.3, 1.3, 1.3}, {-0.477, -0.38, -0.48}, 0.08, 1, 4, 0},
      {"intestine", {1.0, 1.0, 1.0}, {0.16, -0.15, -0.305}, 0.06, 1, 4, 0},
  };
  for (auto& s : specs) s.seed = derive_seed(seed, s.name);
  return specs;
}

std::vector<DomainDataset> default_layout(const LayoutOptions& opts) {
  std::vector<DomainDataset> out;
  for (const auto& spec : default_source_specs(opts.seed)) {
    out.push_back(gen_domain(spec, opts.source_count, opts.size, Split::kSource));
  }
  // Seen-style targets: source styles on fresh content.
  for (auto spec : default_source_specs(opts.seed)) {
    spec.name += "_test";
    spec.seed = derive_seed(opts.seed, spec.name);
    out.push_back(gen_domain(spec, opts.target_count, opts.size, Split::kTargetSeen));
  }
  for (const auto& spec : default_unseen_specs(opts.seed)) {
    out.push_back(gen_domain(spec, opts.target_count, opts.size, Split::kTargetUnseen));
  }
  return out;
}

void write_dataset(const DomainDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw Error("cannot write " + (dir / "manifest.txt").string());
  const std::size_t classes = ds.samples.empty() ? kNumClasses : ds.samples.front().classes;
  manifest << "# split " << split_name(ds.split) << "\n# classes " << classes << "\n";
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    const std::size_t px = s.pixels();
    Raster img{s.width, s.height, 3, 255, std::vector<std::uint8_t>(3 * px)};
    for (std::size_t p = 0; p < px; ++p)
      for (std::size_t c = 0; c < 3; ++c) img.pixels[3 * p + c] = quantize(s.image[c * px + p]);
    Raster mask{s.width, s.height, 1, 255, s.mask};
    const std::string stem = sample_stem(i);
    write_ppm(dir / (stem + ".ppm"), img);
    write_pgm(dir / (stem + "_mask.pgm"), mask);
    manifest << stem << ".ppm\t" << stem << "_mask.pgm\t" << s.domain << "\n";
  }
  if (!manifest) throw Error("write failed for " + (dir / "manifest.txt").string());
}

DomainDataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw Error(manifest_path.string() + ": missing manifest");
  DomainDataset ds;
  ds.name = dir.filename().string();
  std::size_t classes = kNumClasses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, key, value;
      fields >> hash >> key >> value;
      if (key == "split") ds.split = parse_split(value);
      if (key == "classes") classes = std::stoul(value);
      continue;
    }
    std::string image_name, mask_name, domain;
    if (!(fields >> image_name >> mask_name >> domain)) {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) +
                  ": expected 'image mask domain'");
    }
    const auto image_path = dir / image_name;
    const auto mask_path = dir / mask_name;
    if (!std::filesystem::exists(image_path)) {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) + ": missing " +
                  image_path.string());
    }
    if (!std::filesystem::exists(mask_path)) {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) + ": missing " +
                  mask_path.string());
    }
    const Raster img = read_netpbm(image_path);
    const Raster mask = read_netpbm(mask_path);
    if (img.channels != 3) throw NetpbmError(image_path.string() + ": expected a P6 image");
    if (mask.channels != 1) throw NetpbmError(mask_path.string() + ": expected a P5 mask");
    if (img.width != mask.width || img.height != mask.height) {
      throw Error(image_path.string() + ": image and mask dimensions differ");
    }
    const std::size_t px = img.width * img.height;
    std::vector<double> image(3 * px);
    for (std::size_t p = 0; p < px; ++p)
      for (std::size_t c = 0; c < 3; ++c) {
        image[c * px + p] = static_cast<double>(img.pixels[3 * p + c]) / static_cast<double>(img.maxval);
      }
    ds.samples.push_back(
        make_sample(img.height, img.width, classes, std::move(image), mask.pixels, domain));
    if (ds.name.empty()) ds.name = domain;
  }
  return ds;
}

void write_layout(const std::vector<DomainDataset>& domains, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  std::ofstream layout(root / "layout.txt", std::ios::binary);
  if (!layout) throw Error("cannot write " + (root / "layout.txt").string());
  for (const auto& ds : domains) {
    const std::string rel = std::string(split_name(ds.split)) + "/" + ds.name;
    write_dataset(ds, root / rel);
    layout << split_name(ds.split) << '\t' << rel << '\n';
  }
}

std::vector<std::string> layout_dirs(const std::filesystem::path& root) {
  std::ifstream layout(root / "layout.txt");
  if (!layout) throw Error((root / "layout.txt").string() + ": missing layout file");
  std::vector<std::string> dirs;
  std::string line;
  while (std::getline(layout, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string split, rel;
    if (!(fields >> split >> rel)) throw Error((root / "layout.txt").string() + ": bad line '" + line + "'");
    parse_split(split);
    dirs.push_back(rel);
  }
  return dirs;
}

std::vector<DomainDataset> read_layout(const std::filesystem::path& root) {
  std::vector<DomainDataset> out;
  for (const auto& rel : layout_dirs(root)) out.push_back(read_dataset(root / rel));
  return out;
}

std::vector<const DomainDataset*> select_split(const std::vector<DomainDataset>& domains,
                                               Split split) {
  std::vector<const DomainDataset*> out;
  for (const auto& d : domains) {
    if (d.split == split) out.push_back(&d);
  }
  return out;
}

}  // namespace t3s
