#include "t3s/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

namespace t3s {
namespace {

enum class Broadcast { kSame, kScalarA, kScalarB, kChannelA, kChannelB };

struct BinaryPlan {
  Broadcast mode = Broadcast::kSame;
  Shape out_shape;
  std::size_t inner = 1;  // trailing block size for per-channel modes
};

BinaryPlan plan_binary(std::string_view op, const Tensor& a, const Tensor& b) {
  BinaryPlan p;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    p.out_shape = sa;
    return p;
  }
  if (b.numel() == 1) {
    p.mode = Broadcast::kScalarB;
    p.out_shape = sa;
    return p;
  }
  if (a.numel() == 1) {
    p.mode = Broadcast::kScalarA;
    p.out_shape = sb;
    return p;
  }
  if (sb.size() == 1 && sa.size() >= 2 && sa[0] == sb[0]) {
    p.mode = Broadcast::kChannelB;
    p.out_shape = sa;
    p.inner = a.numel() / sa[0];
    return p;
  }
  if (sa.size() == 1 && sb.size() >= 2 && sb[0] == sa[0]) {
    p.mode = Broadcast::kChannelA;
    p.out_shape = sb;
    p.inner = b.numel() / sb[0];
    return p;
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(sa) + " and " +
                   shape_str(sb));
}

inline std::size_t index_a(const BinaryPlan& p, std::size_t i) {
  switch (p.mode) {
    case Broadcast::kScalarA: return 0;
    case Broadcast::kChannelA: return i / p.inner;
    default: return i;
  }
}

inline std::size_t index_b(const BinaryPlan& p, std::size_t i) {
  switch (p.mode) {
    case Broadcast::kScalarB: return 0;
    case Broadcast::kChannelB: return i / p.inner;
    default: return i;
  }
}

// Forward value f(a, b) and partials (df/da, df/db).
template <typename F, typename Da, typename Db>
Tensor binary_op(std::string_view op, const Tensor& a, const Tensor& b, F f, Da da, Db db) {
  const BinaryPlan plan = plan_binary(op, a, b);
  const std::size_t n = numel_of(plan.out_shape);
  std::vector<double> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[index_a(plan, i)], bv[index_b(plan, i)]);

  BackwardFn bw{[a, b, plan, da, db](std::span<const double> g, std::span<double* const> sinks) {
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t ia = index_a(plan, i);
      const std::size_t ib = index_b(plan, i);
      if (sinks[0]) sinks[0][ia] += g[i] * da(av[ia], bv[ib]);
      if (sinks[1]) sinks[1][ib] += g[i] * db(av[ia], bv[ib]);
    }
  }};
  return make_result(op, plan.out_shape, std::move(out), {a, b}, std::move(bw));
}

template <typename F, typename D>
Tensor unary_op(std::string_view op, const Tensor& x, F f, D d) {
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  BackwardFn bw{[x, d](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    auto xv = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) sinks[0][i] += g[i] * d(xv[i]);
  }};
  return make_result(op, x.shape(), std::move(out), {x}, std::move(bw));
}

void require_rank(std::string_view op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(std::string_view op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_str(s));
  }
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Tensor reduce_sum(std::string_view op, const Tensor& x, const std::vector<std::size_t>& axes,
                  double scale) {
  const Shape& s = x.shape();
  std::vector<bool> reduced(s.size(), false);
  for (auto ax : axes) {
    if (ax >= s.size()) {
      throw ShapeError(std::string(op) + ": axis " + std::to_string(ax) + " out of range for " +
                       shape_str(s));
    }
    reduced[ax] = true;
  }
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!reduced[i]) out_shape.push_back(s[i]);
  }
  // Flat input index -> flat output index.
  auto map = std::make_shared<std::vector<std::size_t>>(x.numel());
  {
    std::vector<std::size_t> idx(s.size(), 0);
    for (std::size_t flat = 0; flat < x.numel(); ++flat) {
      std::size_t o = 0;
      for (std::size_t d = 0; d < s.size(); ++d) {
        if (!reduced[d]) o = o * s[d] + idx[d];
      }
      (*map)[flat] = o;
      for (std::size_t d = s.size(); d-- > 0;) {
        if (++idx[d] < s[d]) break;
        idx[d] = 0;
      }
    }
  }
  std::vector<double> out(numel_of(out_shape), 0.0);
  auto xv = x.data();
  for (std::size_t i = 0; i < xv.size(); ++i) out[(*map)[i]] += xv[i];
  for (auto& v : out) v *= scale;

  BackwardFn bw{[map, scale](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    for (std::size_t i = 0; i < map->size(); ++i) sinks[0][i] += g[(*map)[i]] * scale;
  }};
  return make_result(op, std::move(out_shape), std::move(out), {x}, std::move(bw));
}

std::vector<std::size_t> all_axes(const Tensor& x) {
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

std::size_t reduced_count(const Tensor& x, const std::vector<std::size_t>& axes) {
  std::size_t n = 1;
  for (auto ax : axes) n *= x.shape().at(ax);
  return n;
}

// One-dimensional bilinear taps for x2 upsampling with half-pixel centres.
struct Taps {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Taps> upsample_taps(std::size_t in) {
  std::vector<Taps> taps(2 * in);
  for (std::size_t o = 0; o < 2 * in; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (src < 0.0) src = 0.0;
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double frac = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  BackwardFn bw{[a, b, m, k, n](std::span<const double> g, std::span<double* const> sinks) {
    auto av = a.data();
    auto bv = b.data();
    if (sinks[0]) {  // dA = G B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          sinks[0][i * k + p] += acc;
        }
    }
    if (sinks[1]) {  // dB = A^T G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) sinks[1][p * n + j] += aip * g[i * n + j];
        }
    }
  }};
  return make_result("matmul", {m, n}, std::move(out), {a, b}, std::move(bw));
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  BackwardFn bw{[m, n](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) sinks[0][i * n + j] += g[j * m + i];
  }};
  return make_result("transpose", {n, m}, std::move(out), {a}, std::move(bw));
}

Tensor conv2d(const Tensor& x, const Tensor& weight) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", weight, 4);
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = weight.dim(0);
  if (weight.dim(1) != cin || weight.dim(2) != 3 || weight.dim(3) != 3) {
    throw ShapeError("conv2d: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(weight.shape()));
  }
  const std::size_t plane = h * w;
  std::vector<double> out(cout * plane, 0.0);
  auto xv = x.data();
  auto wv = weight.data();

  // Visits every (co, ci, tap) with the valid output rectangle for that tap.
  auto for_each_tap = [=](auto&& body) {
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t ky = 0; ky < 3; ++ky)
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::size_t widx = ((co * cin + ci) * 3 + ky) * 3 + kx;
            const std::size_t y0 = ky == 0 ? 1 : 0, y1 = ky == 2 ? h - 1 : h;
            const std::size_t x0 = kx == 0 ? 1 : 0, x1 = kx == 2 ? w - 1 : w;
            body(co, ci, widx, y0, y1, x0, x1, ky, kx);
          }
  };

  for_each_tap([&](std::size_t co, std::size_t ci, std::size_t widx, std::size_t y0,
                   std::size_t y1, std::size_t x0, std::size_t x1, std::size_t ky,
                   std::size_t kx) {
    const double wt = wv[widx];
    for (std::size_t y = y0; y < y1; ++y) {
      double* orow = &out[co * plane + y * w];
      const double* irow = xv.data() + ci * plane + (y + ky - 1) * w;
      for (std::size_t xx = x0; xx < x1; ++xx) orow[xx] += wt * irow[xx + kx - 1];
    }
  });

  BackwardFn bw{[x, weight, for_each_tap, plane, w](std::span<const double> g,
                                                    std::span<double* const> sinks) {
    auto xv = x.data();
    auto wv = weight.data();
    for_each_tap([&](std::size_t co, std::size_t ci, std::size_t widx, std::size_t y0,
                     std::size_t y1, std::size_t x0, std::size_t x1, std::size_t ky,
                     std::size_t kx) {
      const double wt = wv[widx];
      double gw = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        const double* grow = &g[co * plane + y * w];
        const std::size_t rowbase = ci * plane + (y + ky - 1) * w;
        const double* irow = xv.data() + rowbase;
        if (sinks[0]) {
          double* girow = sinks[0] + rowbase;
          for (std::size_t xx = x0; xx < x1; ++xx) girow[xx + kx - 1] += wt * grow[xx];
        }
        for (std::size_t xx = x0; xx < x1; ++xx) gw += grow[xx] * irow[xx + kx - 1];
      }
      if (sinks[1]) sinks[1][widx] += gw;
    });
  }};
  return make_result("conv2d", {cout, h, w}, std::move(out), {x, weight}, std::move(bw));
}

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Tensor log(const Tensor& x) {
  return unary_op(
      "log", x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return unary_op(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double v) { return 0.5 / std::sqrt(v); });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      "softplus", x, [](double v) { return std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0); },
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor clamp_min(const Tensor& x, double floor) {
  return unary_op(
      "clamp_min", x, [floor](double v) { return v > floor ? v : floor; },
      [floor](double v) { return v > floor ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) { return reduce_sum("sum", x, all_axes(x), 1.0); }

Tensor sum(const Tensor& x, const std::vector<std::size_t>& axes) {
  return reduce_sum("sum", x, axes, 1.0);
}

Tensor mean(const Tensor& x) { return mean(x, all_axes(x)); }

Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes) {
  return reduce_sum("mean", x, axes, 1.0 / static_cast<double>(reduced_count(x, axes)));
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
    if (!ok) {
      throw ShapeError("concat: incompatible shapes " + shape_str(s0) + " and " + shape_str(s));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit whole = split_at("concat", out_shape, axis);
  std::vector<double> out(numel_of(out_shape));
  std::vector<std::size_t> offsets;  // offset of each part along axis
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t ext = p.dim(axis);
    auto pv = p.data();
    for (std::size_t o = 0; o < whole.outer; ++o)
      for (std::size_t e = 0; e < ext; ++e)
        for (std::size_t i = 0; i < whole.inner; ++i)
          out[(o * whole.extent + off + e) * whole.inner + i] = pv[(o * ext + e) * whole.inner + i];
    off += ext;
  }
  std::vector<std::size_t> extents;
  for (const auto& p : parts) extents.push_back(p.dim(axis));
  BackwardFn bw{[whole, offsets, extents](std::span<const double> g,
                                          std::span<double* const> sinks) {
    for (std::size_t k = 0; k < sinks.size(); ++k) {
      if (!sinks[k]) continue;
      const std::size_t ext = extents[k];
      for (std::size_t o = 0; o < whole.outer; ++o)
        for (std::size_t e = 0; e < ext; ++e)
          for (std::size_t i = 0; i < whole.inner; ++i)
            sinks[k][(o * ext + e) * whole.inner + i] +=
                g[(o * whole.extent + offsets[k] + e) * whole.inner + i];
    }
  }};
  return make_result("concat", std::move(out_shape), std::move(out), parts, std::move(bw));
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_at("softmax", x.shape(), axis);
  auto xv = x.data();
  auto out = std::make_shared<std::vector<double>>(xv.size());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.extent * sp.inner + i;
      double mx = xv[base];
      for (std::size_t e = 1; e < sp.extent; ++e) mx = std::max(mx, xv[base + e * sp.inner]);
      double z = 0.0;
      for (std::size_t e = 0; e < sp.extent; ++e) {
        const double v = std::exp(xv[base + e * sp.inner] - mx);
        (*out)[base + e * sp.inner] = v;
        z += v;
      }
      for (std::size_t e = 0; e < sp.extent; ++e) (*out)[base + e * sp.inner] /= z;
    }
  BackwardFn bw{[sp, out](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    const auto& y = *out;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t base = o * sp.extent * sp.inner + i;
        double dot = 0.0;
        for (std::size_t e = 0; e < sp.extent; ++e)
          dot += g[base + e * sp.inner] * y[base + e * sp.inner];
        for (std::size_t e = 0; e < sp.extent; ++e) {
          const std::size_t k = base + e * sp.inner;
          sinks[0][k] += y[k] * (g[k] - dot);
        }
      }
  }};
  std::vector<double> values = *out;
  return make_result("softmax", x.shape(), std::move(values), {x}, std::move(bw));
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_at("log_softmax", x.shape(), axis);
  auto xv = x.data();
  std::vector<double> out(xv.size());
  auto probs = std::make_shared<std::vector<double>>(xv.size());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.extent * sp.inner + i;
      double mx = xv[base];
      for (std::size_t e = 1; e < sp.extent; ++e) mx = std::max(mx, xv[base + e * sp.inner]);
      double z = 0.0;
      for (std::size_t e = 0; e < sp.extent; ++e) z += std::exp(xv[base + e * sp.inner] - mx);
      const double lz = mx + std::log(z);
      for (std::size_t e = 0; e < sp.extent; ++e) {
        const std::size_t k = base + e * sp.inner;
        out[k] = xv[k] - lz;
        (*probs)[k] = std::exp(out[k]);
      }
    }
  BackwardFn bw{[sp, probs](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    const auto& p = *probs;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t base = o * sp.extent * sp.inner + i;
        double gsum = 0.0;
        for (std::size_t e = 0; e < sp.extent; ++e) gsum += g[base + e * sp.inner];
        for (std::size_t e = 0; e < sp.extent; ++e) {
          const std::size_t k = base + e * sp.inner;
          sinks[0][k] += g[k] - p[k] * gsum;
        }
      }
  }};
  return make_result("log_softmax", x.shape(), std::move(out), {x}, std::move(bw));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw ShapeError("reshape: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  BackwardFn bw{[](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    for (std::size_t i = 0; i < g.size(); ++i) sinks[0][i] += g[i];
  }};
  return make_result("reshape", std::move(shape), std::move(out), {x}, std::move(bw));
}

Tensor avg_pool2(const Tensor& x) {
  require_rank("avg_pool2", x, 3);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("avg_pool2: spatial extents must be even, got " + shape_str(x.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<double> out(c * oh * ow);
  auto xv = x.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t i = ch * h * w + 2 * y * w + 2 * xx;
        out[(ch * oh + y) * ow + xx] = 0.25 * (xv[i] + xv[i + 1] + xv[i + w] + xv[i + w + 1]);
      }
  BackwardFn bw{[c, h, w, oh, ow](std::span<const double> g, std::span<double* const> sinks) {
    if (!sinks[0]) return;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double v = 0.25 * g[(ch * oh + y) * ow + xx];
          const std::size_t i = ch * h * w + 2 * y * w + 2 * xx;
          sinks[0][i] += v;
          sinks[0][i + 1] += v;
          sinks[0][i + w] += v;
          sinks[0][i + w + 1] += v;
        }
  }};
  return make_result("avg_pool2", {c, oh, ow}, std::move(out), {x}, std::move(bw));
}

Tensor upsample2(const Tensor& x) {
  require_rank("upsample2", x, 3);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = 2 * h, ow = 2 * w;
  auto ty = upsample_taps(h);
  auto tx = upsample_taps(w);
  std::vector<double> out(c * oh * ow);
  auto xv = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = &xv[ch * h * w];
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const Taps& a = ty[y];
        const Taps& b = tx[xx];
        out[(ch * oh + y) * ow + xx] =
            a.w0 * (b.w0 * src[a.i0 * w + b.i0] + b.w1 * src[a.i0 * w + b.i1]) +
            a.w1 * (b.w0 * src[a.i1 * w + b.i0] + b.w1 * src[a.i1 * w + b.i1]);
      }
  }
  BackwardFn bw{[c, h, w, oh, ow, ty, tx](std::span<const double> g,
                                          std::span<double* const> sinks) {
    if (!sinks[0]) return;
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* dst = sinks[0] + ch * h * w;
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double v = g[(ch * oh + y) * ow + xx];
          const Taps& a = ty[y];
          const Taps& b = tx[xx];
          dst[a.i0 * w + b.i0] += v * a.w0 * b.w0;
          dst[a.i0 * w + b.i1] += v * a.w0 * b.w1;
          dst[a.i1 * w + b.i0] += v * a.w1 * b.w0;
          dst[a.i1 * w + b.i1] += v * a.w1 * b.w1;
        }
    }
  }};
  return make_result("upsample2", {c, oh, ow}, std::move(out), {x}, std::move(bw));
}

namespace {

using Dispatch = Tensor (*)(const std::vector<Tensor>&, const OpAttrs&);

void require_arity(std::string_view name, const std::vector<Tensor>& in, std::size_t n) {
  if (in.size() != n) {
    throw ShapeError(std::string(name) + ": expected " + std::to_string(n) + " inputs, got " +
                     std::to_string(in.size()));
  }
}

template <Tensor (*F)(const Tensor&, const Tensor&)>
Tensor dispatch_binary(const std::vector<Tensor>& in, const OpAttrs&) {
  require_arity("binary op", in, 2);
  return F(in[0], in[1]);
}

template <Tensor (*F)(const Tensor&)>
Tensor dispatch_unary(const std::vector<Tensor>& in, const OpAttrs&) {
  require_arity("unary op", in, 1);
  return F(in[0]);
}

const std::map<std::string_view, Dispatch>& dispatch_table() {
  static const std::map<std::string_view, Dispatch> table = {
      {"add", &dispatch_binary<add>},
      {"sub", &dispatch_binary<sub>},
      {"mul", &dispatch_binary<mul>},
      {"div", &dispatch_binary<div>},
      {"matmul", &dispatch_binary<matmul>},
      {"conv2d", &dispatch_binary<conv2d>},
      {"transpose", &dispatch_unary<transpose>},
      {"relu", &dispatch_unary<relu>},
      {"exp", &dispatch_unary<exp>},
      {"log", &dispatch_unary<log>},
      {"sqrt", &dispatch_unary<sqrt>},
      {"softplus", &dispatch_unary<softplus>},
      {"avg_pool2", &dispatch_unary<avg_pool2>},
      {"upsample2", &dispatch_unary<upsample2>},
      {"clamp_min",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("clamp_min", in, 1);
         return clamp_min(in[0], a.value);
       }},
      {"sum",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("sum", in, 1);
         return a.axes.empty() ? sum(in[0]) : sum(in[0], a.axes);
       }},
      {"mean",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("mean", in, 1);
         return a.axes.empty() ? mean(in[0]) : mean(in[0], a.axes);
       }},
      {"concat", [](const std::vector<Tensor>& in, const OpAttrs& a) { return concat(in, a.axis); }},
      {"softmax",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("softmax", in, 1);
         return softmax(in[0], a.axis);
       }},
      {"log_softmax",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("log_softmax", in, 1);
         return log_softmax(in[0], a.axis);
       }},
      {"reshape",
       [](const std::vector<Tensor>& in, const OpAttrs& a) {
         require_arity("reshape", in, 1);
         return reshape(in[0], a.shape);
       }},
  };
  return table;
}

}  // namespace

Tensor forward_op(std::string_view name, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
  const auto& table = dispatch_table();
  auto it = table.find(name);
  if (it == table.end()) throw Error("unknown op '" + std::string(name) + "'");
  return it->second(inputs, attrs);
}

std::vector<std::string_view> op_names() {
  std::vector<std::string_view> names;
  for (const auto& [name, fn] : dispatch_table()) names.push_back(name);
  return names;
}

double grad_check(const ScalarFn& f, const Tensor& x, double step) {
  if (!(step > 0.0)) throw Error("grad_check: step must be positive");
  Tensor probe = x.clone_leaf(true);
  Tensor y = f(probe);
  if (y.numel() != 1) throw ShapeError("grad_check: function must return a scalar");
  backward(y);
  const Tensor analytic = probe.grad_tensor();

  NoGradGuard no_grad;
  std::vector<double> values = x.to_vector();
  auto eval_at = [&](std::size_t i, double v) {
    std::vector<double> moved = values;
    moved[i] = v;
    double out = 0.0;
    try {
      out = f(Tensor(x.shape(), std::move(moved))).item();
    } catch (const NumericError&) {
      out = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(out)) {
      throw NumericError("grad_check: non-finite value near coordinate " + std::to_string(i));
    }
    return out;
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double numeric = (eval_at(i, values[i] + step) - eval_at(i, values[i] - step)) / (2 * step);
    const double a = analytic.at(i);
    worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

}  // namespace t3s
