#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "t3s/evalmetrics.hpp"
#include "t3s/segmodel.hpp"

using namespace t3s;

namespace {

using Mask = std::vector<std::uint8_t>;

Mask random_mask(Rng& rng, std::size_t n, std::size_t classes = 2) {
  Mask m(n);
  for (auto& v : m) v = static_cast<std::uint8_t>(uniform_index(rng, classes));
  return m;
}

// Pixel-counting oracle on explicit index sets.
struct Counts {
  long inter = 0, pred = 0, gt = 0;
};
Counts count(const Mask& p, const Mask& g, std::uint8_t k) {
  Counts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.pred += p[i] == k;
    c.gt += g[i] == k;
    c.inter += p[i] == k && g[i] == k;
  }
  return c;
}

}  // namespace

TEST(Metrics, IdenticalMasksScoreOne) {
  const Mask m = {0, 1, 1, 0};
  EXPECT_EQ(iou(m, m, 1), 1.0);
  EXPECT_EQ(dice(m, m, 1), 1.0);
}

TEST(Metrics, DisjointMasksScoreZero) {
  const Mask p = {1, 1, 0, 0}, g = {0, 0, 1, 1};
  EXPECT_EQ(iou(p, g, 1), 0.0);
  EXPECT_EQ(dice(p, g, 1), 0.0);
}

TEST(Metrics, OverlapTwoOfFourAndFour) {
  const Mask p = {1, 1, 1, 1, 0, 0}, g = {0, 0, 1, 1, 1, 1};
  EXPECT_NEAR(iou(p, g, 1), 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(dice(p, g, 1), 0.5, 1e-15);
}

TEST(Metrics, AbsentClassScoresOne) {
  const Mask m = {0, 0, 0};
  EXPECT_EQ(iou(m, m, 1), 1.0);
  EXPECT_EQ(dice(m, m, 1), 1.0);
}

TEST(Metrics, ShapeMismatchRejected) {
  EXPECT_THROW(iou(Mask{0, 1}, Mask{0}, 1), ShapeError);
  EXPECT_THROW(dice(Mask{0, 1}, Mask{0}, 1), ShapeError);
  EXPECT_THROW(macro_scores(Mask{0, 1}, Mask{0}, 2), ShapeError);
}

TEST(Metrics, MatchesPixelCountingOracleExactly) {
  Rng rng(derive_seed(1, "metrics-oracle"));
  for (int t = 0; t < 50; ++t) {
    const Mask p = random_mask(rng, 256), g = random_mask(rng, 256);
    for (std::uint8_t k = 0; k < 2; ++k) {
      const Counts c = count(p, g, k);
      const long uni = c.pred + c.gt - c.inter;
      EXPECT_EQ(iou(p, g, k), static_cast<double>(c.inter) / static_cast<double>(uni));
      EXPECT_EQ(dice(p, g, k), 2.0 * static_cast<double>(c.inter) / static_cast<double>(c.pred + c.gt));
    }
  }
}

TEST(Metrics, ConfusionCountsMatchOracle) {
  Rng rng(3);
  const Mask p = random_mask(rng, 100, 3), g = random_mask(rng, 100, 3);
  const ConfusionCounts c = confusion(p, g, 3);
  for (std::uint8_t k = 0; k < 3; ++k) {
    const Counts o = count(p, g, k);
    EXPECT_EQ(c.tp[k], static_cast<std::uint64_t>(o.inter));
    EXPECT_EQ(c.fp[k], static_cast<std::uint64_t>(o.pred - o.inter));
    EXPECT_EQ(c.fn[k], static_cast<std::uint64_t>(o.gt - o.inter));
  }
}

TEST(Metrics, DiceIouIdentityAndOrdering) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Mask p = random_mask(rng, 64), g = random_mask(rng, 64);
    const double i = iou(p, g, 1), d = dice(p, g, 1);
    EXPECT_NEAR(d, 2.0 * i / (1.0 + i), 1e-12);
    EXPECT_LE(i, d);
  }
}

TEST(Metrics, MacroScoresAverageClasses) {
  const Mask p = {1, 1, 1, 1, 0, 0}, g = {0, 0, 1, 1, 1, 1};
  const SegScores s = macro_scores(p, g, 2);
  EXPECT_NEAR(s.iou, (iou(p, g, 0) + iou(p, g, 1)) / 2.0, 1e-15);
  EXPECT_NEAR(s.dice, (dice(p, g, 0) + dice(p, g, 1)) / 2.0, 1e-15);
}

TEST(Metrics, AccumulatorAveragesImages) {
  ScoreAccumulator acc;
  EXPECT_TRUE(std::isnan(acc.mean().dice));
  acc.add(Mask{1, 1}, Mask{1, 1}, 2);
  acc.add(Mask{1, 0}, Mask{0, 1}, 2);
  EXPECT_EQ(acc.count(), 2u);
  EXPECT_NEAR(acc.mean().dice, 0.5, 1e-15);
}

TEST(StyleExport, RowsHeaderAndHull) {
  ModelConfig mc;
  mc.channels = 4;
  mc.bases = 3;
  const ModelParams params = init_params(mc, 1);
  DomainSpec s;
  s.name = "dom";
  s.seed = 2;
  const DomainDataset d = gen_domain(s, 5, 8);
  const auto path = std::filesystem::temp_directory_path() / "t3s_styles.csv";
  const auto rows = export_styles({&d}, params, path);
  EXPECT_EQ(rows.size(), 10u);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 3 + 2 * 4);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 10u);

  const Tensor sig = params.bank.sigma();
  for (const auto& r : rows) {
    if (r.phase != "post") continue;
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = 1e300, hi = -1e300, slo = 1e300, shi = -1e300;
      for (std::size_t i = 0; i < 3; ++i) {
        lo = std::min(lo, params.bank.raw_mu.at(i * 4 + c));
        hi = std::max(hi, params.bank.raw_mu.at(i * 4 + c));
        slo = std::min(slo, sig.at(i * 4 + c));
        shi = std::max(shi, sig.at(i * 4 + c));
      }
      EXPECT_GE(r.coords[c], lo - 1e-12);
      EXPECT_LE(r.coords[c], hi + 1e-12);
      EXPECT_GE(r.coords[4 + c], slo - 1e-12);
      EXPECT_LE(r.coords[4 + c], shi + 1e-12);
    }
  }
}

TEST(Pca, RankOneDataHasZeroSecondComponent) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 20; ++i) {
    const double t = i * 0.37 - 2.0;
    pts.push_back({1 + 2 * t, -t, 0.5 * t, 3.0});
  }
  const Pca2d p = pca2d(pts);
  for (const auto& c : p.coords) EXPECT_LT(std::abs(c[1]), 1e-6);
  EXPECT_NEAR(p.retained_variance, 1.0, 1e-9);
}

TEST(Pca, OutputIsCentred) {
  Rng rng(5);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({uniform_open(rng) * 3, uniform_open(rng), uniform_open(rng) + 5});
  const Pca2d p = pca2d(pts);
  double a = 0, b = 0;
  for (const auto& c : p.coords) {
    a += c[0];
    b += c[1];
  }
  EXPECT_NEAR(a / 30, 0.0, 1e-10);
  EXPECT_NEAR(b / 30, 0.0, 1e-10);
}

// For 2-D input the projection is a rotation (plus reflection), so
// distances are preserved; the axes must match the closed-form 2x2
// eigenvectors.
TEST(Pca, TwoDimensionalDataMatchesClosedFormEigen) {
  Rng rng(6);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 40; ++i) {
    const double u = standard_normal(rng), v = standard_normal(rng);
    pts.push_back({2.0 * u + 0.5 * v, 0.3 * u + 0.8 * v});
  }
  const Pca2d p = pca2d(pts);
  double mx = 0, my = 0;
  for (const auto& q : pts) {
    mx += q[0] / 40;
    my += q[1] / 40;
  }
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& q : pts) {
    sxx += (q[0] - mx) * (q[0] - mx) / 40;
    syy += (q[1] - my) * (q[1] - my) / 40;
    sxy += (q[0] - mx) * (q[1] - my) / 40;
  }
  const double l1 = 0.5 * (sxx + syy) + std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  std::vector<double> e1 = {sxy, l1 - sxx};
  const double n1 = std::hypot(e1[0], e1[1]);
  EXPECT_NEAR(std::abs(p.axes[0][0] * e1[0] + p.axes[0][1] * e1[1]) / n1, 1.0, 1e-8);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d_in = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      const double d_out = std::hypot(p.coords[i][0] - p.coords[j][0], p.coords[i][1] - p.coords[j][1]);
      EXPECT_NEAR(d_in, d_out, 1e-8);
    }
}

TEST(Pca, ZeroVarianceFlagged) {
  const Pca2d p = pca2d({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  EXPECT_TRUE(p.degenerate);
  for (const auto& c : p.coords) {
    EXPECT_EQ(c[0], 0.0);
    EXPECT_EQ(c[1], 0.0);
  }
}

TEST(Pca, TooFewPointsRejected) { EXPECT_THROW(pca2d({{1.0, 2.0}}), Error); }
