#include "ghostplan/target_images.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace ghostplan {

TargetImage normalize(const Grid2D& raw) {
  const double lo = raw.values().minCoeff();
  const double hi = raw.values().maxCoeff();
  require(hi > lo, ErrorKind::Argument, "cannot normalise a constant image: contrast undefined");
  RowMajorArray<double> v = (raw.values() - lo) / (hi - lo);
  v -= v.mean();
  TargetImage t{Grid2D(std::move(v), raw.pitch_um()), 0.0};
  t.norm_sq = t.grid.values().square().mean();
  return t;
}

PatternKind parse_pattern_kind(const std::string& name) {
  if (name == "gaussian_dot") return PatternKind::GaussianDot;
  if (name == "square") return PatternKind::Square;
  if (name == "dots") return PatternKind::Dots;
  if (name == "linear_gradient") return PatternKind::LinearGradient;
  if (name == "resolution_chart") return PatternKind::ResolutionChart;
  fail(ErrorKind::Argument, "unknown pattern kind '" + name + "'");
}

std::string pattern_kind_name(PatternKind kind) {
  switch (kind) {
    case PatternKind::GaussianDot: return "gaussian_dot";
    case PatternKind::Square: return "square";
    case PatternKind::Dots: return "dots";
    case PatternKind::LinearGradient: return "linear_gradient";
    case PatternKind::ResolutionChart: return "resolution_chart";
  }
  return "unknown";
}

RowMajorArray<double> binary_square(Index m, Index n, Index side) {
  require(side >= 1 && side <= m && side <= n, ErrorKind::Argument, "square does not fit the image");
  RowMajorArray<double> v = RowMajorArray<double>::Zero(m, n);
  v.block((m - side) / 2, (n - side) / 2, side, side) = 1.0;
  return v;
}

RowMajorArray<double> binary_dots(Index m, Index n, Index per_axis, Index spacing) {
  require(per_axis >= 1 && spacing >= 1, ErrorKind::Argument, "dot lattice must be non-empty");
  const Index extent = (per_axis - 1) * spacing + 1;
  require(extent <= m && extent <= n, ErrorKind::Argument, "dot lattice does not fit the image");
  RowMajorArray<double> v = RowMajorArray<double>::Zero(m, n);
  const Index r0 = (m - extent) / 2;
  const Index c0 = (n - extent) / 2;
  for (Index a = 0; a < per_axis; ++a)
    for (Index b = 0; b < per_axis; ++b) v(r0 + a * spacing, c0 + b * spacing) = 1.0;
  return v;
}

RowMajorArray<double> binary_resolution_chart(Index m, Index n, double on_fraction) {
  require(on_fraction > 0.0 && on_fraction < 1.0, ErrorKind::Argument, "on fraction must be in (0, 1)");
  require(std::min(m, n) >= 20, ErrorKind::Argument, "resolution chart needs at least 20x20 pixels");

  // Bar widths w0, w0/2, ..., 1 with w0 the largest power of two <= min(m, n)/10.
  std::vector<Index> widths;
  Index w0 = 1;
  while (2 * w0 <= std::min(m, n) / 10) w0 *= 2;
  for (Index w = w0; w >= 1; w /= 2) widths.push_back(w);

  // Quadrants inside a 1-pixel frame: top band for vertical groups, bottom
  // left for horizontal groups, bottom right for the solid block.
  const Index pad = 1;
  const Index mid_r = m / 2;
  const Index mid_c = n / 2;
  const Index band_h = mid_r - pad - 1;
  const Index band_w = mid_c - pad - 1;
  const auto target = static_cast<Index>(std::llround(on_fraction * static_cast<double>(m * n)));

  // Groups are three bars of width w, pitch 2w, followed by a gap.
  auto advance = [](Index w) { return 5 * w + std::max<Index>(1, w / 2); };
  // The width sequence repeats until a band is full.
  auto lay_out = [&](Index start, Index end) {
    std::vector<std::pair<Index, Index>> groups;  // (position, width)
    for (Index pos = start;;) {
      const std::size_t before = groups.size();
      for (Index w : widths) {
        if (pos + 5 * w > end) continue;
        groups.push_back({pos, w});
        pos += advance(w);
      }
      if (groups.size() == before) return groups;
    }
  };
  const auto vert = lay_out(pad, n - pad);
  const auto horiz = lay_out(mid_r, m - pad);
  Index vsum = 0, hsum = 0;
  for (const auto& g : vert) vsum += 3 * g.second;
  for (const auto& g : horiz) hsum += 3 * g.second;

  // Shorten the bars until they fit inside the on-pixel budget.
  Index lv = band_h, lh = band_w;
  while (lv * vsum + lh * hsum > target && (lv > 3 || lh > 3)) {
    if (lv * vsum >= lh * hsum && lv > 3) {
      --lv;
    } else if (lh > 3) {
      --lh;
    } else {
      --lv;
    }
  }

  RowMajorArray<double> v = RowMajorArray<double>::Zero(m, n);
  for (const auto& [x, w] : vert)
    for (int b = 0; b < 3; ++b) v.block(pad, x + 2 * b * w, lv, w) = 1.0;
  for (const auto& [y, w] : horiz)
    for (int b = 0; b < 3; ++b) v.block(y + 2 * b * w, pad, w, lh) = 1.0;

  // Solid block for the remainder: near-square, plus one partial row.
  const Index need = target - static_cast<Index>(v.sum());
  const Index fh = m - pad - mid_r;
  const Index fw = n - pad - mid_c;
  if (need > 0 && fh > 0 && fw > 0) {
    const Index side = std::min<Index>(fw, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(need)))));
    const Index rows = std::min<Index>(fh, need / side);
    const Index rem = rows < fh ? std::min<Index>(need - rows * side, side) : 0;
    const Index total_h = rows + (rem > 0 ? 1 : 0);
    const Index r0 = mid_r + (fh - total_h) / 2;
    const Index c0 = mid_c + (fw - side) / 2;
    if (rows > 0) v.block(r0, c0, rows, side) = 1.0;
    if (rem > 0) v.block(r0 + rows, c0, 1, rem) = 1.0;
  }

  const double f = v.mean();
  require(std::abs(f - on_fraction) <= 0.01, ErrorKind::Argument,
          "resolution chart cannot reach the requested on fraction at this size");
  return v;
}

namespace {

RowMajorArray<double> gaussian_dot(Index m, Index n, double sigma) {
  RowMajorArray<double> g(m, n);
  const double yc = 0.5 * static_cast<double>(m - 1);
  const double xc = 0.5 * static_cast<double>(n - 1);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const double dy = static_cast<double>(i) - yc;
      const double dx = static_cast<double>(j) - xc;
      g(i, j) = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    }
  return g;
}

double gaussian_norm_sq(Index m, Index n, double sigma) {
  return normalize(Grid2D(gaussian_dot(m, n, sigma))).norm_sq;
}

}  // namespace

double gaussian_dot_sigma(Index m, Index n, double norm_sq) {
  // Walk up in quarter-pixel steps until the target is bracketed, then
  // bisect. Only the sign change matters, so the small wobble of the curve
  // at sub-pixel widths is harmless.
  double lo = 0.25;
  require(gaussian_norm_sq(m, n, lo) < norm_sq, ErrorKind::Argument, "Gaussian dot norm too small");
  double hi = lo;
  for (;;) {
    hi += 0.25;
    if (gaussian_norm_sq(m, n, hi) >= norm_sq) break;
    require(hi < static_cast<double>(std::max(m, n)), ErrorKind::Argument,
            "Gaussian dot cannot reach the requested norm");
    lo = hi;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gaussian_norm_sq(m, n, mid) < norm_sq ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TargetImage make_pattern(PatternKind kind, Index m, Index n, const PatternParams& params) {
  require(m >= 2 && n >= 2, ErrorKind::Argument, "target must be at least 2x2");
  const Index default_side = std::max<Index>(1, static_cast<Index>(std::llround(std::min(m, n) / 4.0)));
  switch (kind) {
    case PatternKind::Square:
      return normalize(Grid2D(binary_square(m, n, params.side.value_or(default_side))));
    case PatternKind::Dots:
      return normalize(Grid2D(binary_dots(m, n, params.dots_per_axis, params.dot_spacing)));
    case PatternKind::LinearGradient: {
      RowMajorArray<double> v(m, n);
      for (Index j = 0; j < n; ++j) v.col(j).setConstant(static_cast<double>(j));
      return normalize(Grid2D(std::move(v)));
    }
    case PatternKind::ResolutionChart:
      return normalize(Grid2D(binary_resolution_chart(m, n, params.on_fraction)));
    case PatternKind::GaussianDot: {
      double sigma = 0.0;
      if (params.sigma_px) {
        sigma = *params.sigma_px;
        require(sigma > 0.0, ErrorKind::Argument, "Gaussian dot sigma must be positive");
      } else {
        const double f = static_cast<double>(default_side * default_side) / static_cast<double>(m * n);
        sigma = gaussian_dot_sigma(m, n, f * (1.0 - f));
      }
      return normalize(Grid2D(gaussian_dot(m, n, sigma)));
    }
  }
  fail(ErrorKind::Argument, "unknown pattern kind");
}

namespace {

Index reflect(Index k, Index len) {
  const Index period = 2 * len;
  Index r = k % period;
  if (r < 0) r += period;
  return r < len ? r : period - 1 - r;
}

}  // namespace

TargetImage gaussian_smooth(const TargetImage& img, double sigma_px) {
  require(sigma_px > 0.0 && std::isfinite(sigma_px), ErrorKind::Argument, "smoothing sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma_px));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t / (sigma_px * sigma_px));
    sum += kernel[static_cast<std::size_t>(t + radius)];
  }
  for (auto& k : kernel) k /= sum;

  const auto& in = img.grid.values();
  const Index m = in.rows();
  const Index n = in.cols();
  RowMajorArray<double> tmp = RowMajorArray<double>::Zero(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += kernel[static_cast<std::size_t>(t + radius)] * in(i, reflect(j + t, n));
      tmp(i, j) = acc;
    }
  RowMajorArray<double> out = RowMajorArray<double>::Zero(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += kernel[static_cast<std::size_t>(t + radius)] * tmp(reflect(i + t, m), j);
      out(i, j) = acc;
    }
  TargetImage t{Grid2D(std::move(out), img.grid.pitch_um()), 0.0};
  t.norm_sq = t.grid.values().square().mean();
  return t;
}

}  // namespace ghostplan
