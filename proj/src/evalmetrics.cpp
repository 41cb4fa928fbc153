#include "t3s/evalmetrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "t3s/segmodel.hpp"

namespace t3s {
namespace {

void require_same_size(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("metrics: prediction has " + std::to_string(pred.size()) +
                     " pixels, ground truth has " + std::to_string(gt.size()));
  }
}

struct ClassCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

ClassCounts count_class(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                        std::size_t k) {
  require_same_size(pred, gt);
  ClassCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == k, g = gt[i] == k;
    c.tp += p && g;
    c.fp += p && !g;
    c.fn += !p && g;
  }
  return c;
}

double ratio_or_one(double num, double den) { return den == 0.0 ? 1.0 : num / den; }

}  // namespace

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                          std::size_t classes) {
  require_same_size(pred, gt);
  ConfusionCounts c;
  c.tp.assign(classes, 0);
  c.fp.assign(classes, 0);
  c.fn.assign(classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= classes || gt[i] >= classes) {
      throw Error("metrics: label out of range at pixel " + std::to_string(i));
    }
    if (pred[i] == gt[i]) {
      ++c.tp[gt[i]];
    } else {
      ++c.fp[pred[i]];
      ++c.fn[gt[i]];
    }
  }
  return c;
}

double iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t k) {
  const ClassCounts c = count_class(pred, gt, k);
  return ratio_or_one(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp + c.fn));
}

double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t k) {
  const ClassCounts c = count_class(pred, gt, k);
  return ratio_or_one(2.0 * static_cast<double>(c.tp),
                      static_cast<double>(2 * c.tp + c.fp + c.fn));
}

SegScores macro_scores(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                       std::size_t classes) {
  const ConfusionCounts c = confusion(pred, gt, classes);
  SegScores s;
  for (std::size_t k = 0; k < classes; ++k) {
    const auto tp = static_cast<double>(c.tp[k]);
    const auto err = static_cast<double>(c.fp[k] + c.fn[k]);
    s.iou += ratio_or_one(tp, tp + err);
    s.dice += ratio_or_one(2.0 * tp, 2.0 * tp + err);
  }
  s.iou /= static_cast<double>(classes);
  s.dice /= static_cast<double>(classes);
  return s;
}

void ScoreAccumulator::add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                           std::size_t classes) {
  const SegScores s = macro_scores(pred, gt, classes);
  iou_sum_ += s.iou;
  dice_sum_ += s.dice;
  ++count_;
}

SegScores ScoreAccumulator::mean() const {
  if (count_ == 0) return {std::nan(""), std::nan("")};
  return {iou_sum_ / static_cast<double>(count_), dice_sum_ / static_cast<double>(count_)};
}

SegScores evaluate_model(const ModelParams& params, const std::vector<const DomainDataset*>& domains,
                         std::size_t limit) {
  ScoreAccumulator acc;
  for (const auto* d : domains) {
    std::size_t used = 0;
    for (const auto& s : d->samples) {
      if (limit != 0 && used++ >= limit) break;
      acc.add(infer_test_time(s, params).mask, s.mask, s.classes);
    }
  }
  return acc.mean();
}

std::vector<StyleRow> collect_styles(const std::vector<const DomainDataset*>& domains,
                                     const ModelParams& params) {
  std::vector<StyleRow> rows;
  for (const auto* d : domains) {
    const std::string split(split_name(d->split));
    for (const auto& s : d->samples) {
      const Inference inf = infer_test_time(s, params);
      rows.push_back({d->name, split, "pre", inf.pre.flat()});
      rows.push_back({d->name, split, "post", inf.post.flat()});
    }
  }
  return rows;
}

void write_styles_csv(const std::vector<StyleRow>& rows, std::size_t channels,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "domain,split,phase";
  for (std::size_t c = 0; c < channels; ++c) out << ",mu" << c;
  for (std::size_t c = 0; c < channels; ++c) out << ",sigma" << c;
  out << '\n';
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.domain << ',' << r.split << ',' << r.phase;
    for (double v : r.coords) out << ',' << v;
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<StyleRow> export_styles(const std::vector<const DomainDataset*>& domains,
                                    const ModelParams& params, const std::filesystem::path& path) {
  auto rows = collect_styles(domains, params);
  write_styles_csv(rows, params.config.channels, path);
  return rows;
}

namespace {

using Matrix = std::vector<std::vector<double>>;

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Unit vector orthogonal to `against` (used when the deflated matrix is 0).
std::vector<double> orthogonal_unit(const std::vector<double>& against) {
  const std::size_t d = against.size();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> e(d, 0.0);
    e[k] = 1.0;
    const double p = dot(e, against);
    for (std::size_t i = 0; i < d; ++i) e[i] -= p * against[i];
    const double n = std::sqrt(dot(e, e));
    if (n > 1e-6) {
      for (auto& v : e) v /= n;
      return e;
    }
  }
  return std::vector<double>(d, 0.0);
}

struct Eigen1 {
  std::vector<double> vec;
  double value = 0.0;
  std::size_t iterations = 0;
};

// `floor` is the magnitude below which M v counts as zero (rounding noise).
Eigen1 power_iteration(const Matrix& m, const std::vector<double>* orth_to, double floor) {
  const std::size_t d = m.size();
  auto deflate = [&](std::vector<double>& x) {
    if (!orth_to) return;
    const double p = dot(x, *orth_to);
    for (std::size_t i = 0; i < d; ++i) x[i] -= p * (*orth_to)[i];
  };
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / (static_cast<double>(i) + 1.5);
  deflate(v);
  const double v_norm = std::sqrt(dot(v, v));
  if (v_norm > 0.0)
    for (auto& x : v) x /= v_norm;
  Eigen1 out;
  for (std::size_t it = 0; it < 1000; ++it) {
    std::vector<double> w = mat_vec(m, v);
    deflate(w);
    const double n = std::sqrt(dot(w, w));
    out.iterations = it + 1;
    if (n <= floor) {
      out.vec = orth_to ? orthogonal_unit(*orth_to) : orthogonal_unit(std::vector<double>(d, 0.0));
      out.value = 0.0;
      return out;
    }
    for (auto& x : w) x /= n;
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::abs(w[i] - v[i]));
    v = std::move(w);
    if (change < 1e-9) break;
  }
  out.value = dot(v, mat_vec(m, v));
  out.vec = std::move(v);
  return out;
}

}  // namespace

Pca2d pca2d(const std::vector<std::vector<double>>& points) {
  if (points.size() < 2) throw Error("pca2d: need at least 2 points");
  const std::size_t m = points.size(), d = points.front().size();
  if (d == 0) throw Error("pca2d: points have no coordinates");
  std::vector<double> centre(d, 0.0);
  for (const auto& p : points) {
    if (p.size() != d) throw ShapeError("pca2d: ragged point dimensions");
    for (std::size_t j = 0; j < d; ++j) centre[j] += p[j];
  }
  for (auto& c : centre) c /= static_cast<double>(m);
  Matrix centred(m, std::vector<double>(d));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) centred[i][j] = points[i][j] - centre[j];

  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : centred)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += row[a] * row[b];
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) cov[a][b] /= static_cast<double>(m);
    trace += cov[a][a];
  }

  Pca2d out;
  out.coords.assign(m, {0.0, 0.0});
  if (trace <= 0.0) {
    out.degenerate = true;
    out.axes = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    return out;
  }
  const double floor = 1e-12 * trace;
  const Eigen1 first = power_iteration(cov, nullptr, floor);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) cov[a][b] -= first.value * first.vec[a] * first.vec[b];
  Eigen1 second = d > 1 ? power_iteration(cov, &first.vec, floor) : Eigen1{std::vector<double>(d, 0.0), 0.0, 0};

  out.axes = {first.vec, second.vec};
  out.iterations = first.iterations + second.iterations;
  out.retained_variance = std::min(1.0, (first.value + std::max(0.0, second.value)) / trace);
  for (std::size_t i = 0; i < m; ++i) {
    out.coords[i] = {dot(centred[i], first.vec), dot(centred[i], second.vec)};
  }
  return out;
}

}  // namespace t3s
