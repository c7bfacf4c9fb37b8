#include "ghostplan/routing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "ghostplan/rng.hpp"

namespace ghostplan {

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Index> nearest_neighbour(const std::vector<Point2>& pts, Index start) {
  const auto n = static_cast<Index>(pts.size());
  std::vector<char> used(pts.size(), 0);
  std::vector<Index> order{start};
  used[static_cast<std::size_t>(start)] = 1;
  while (static_cast<Index>(order.size()) < n) {
    const Point2& cur = pts[static_cast<std::size_t>(order.back())];
    Index best = -1;
    double best_d = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double d = dist(cur, pts[static_cast<std::size_t>(j)]);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    used[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
  }
  return order;
}

// Exact open-path optimum by dynamic programming over subsets (Held–Karp,
// free endpoints); cheap for the handful of points it is used on.
std::vector<Index> held_karp(const std::vector<Point2>& pts) {
  const auto n = static_cast<std::size_t>(pts.size());
  const std::size_t full = (std::size_t{1} << n) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  // cost[S * n + j]: shortest path visiting S and ending at j.
  std::vector<double> cost((full + 1) * n, inf);
  std::vector<std::int8_t> prev((full + 1) * n, -1);
  for (std::size_t j = 0; j < n; ++j) cost[(std::size_t{1} << j) * n + j] = 0.0;
  for (std::size_t S = 1; S <= full; ++S)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = cost[S * n + j];
      if (!(S >> j & 1) || c == inf) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (S >> k & 1) continue;
        const std::size_t T = S | (std::size_t{1} << k);
        const double v = c + dist(pts[j], pts[k]);
        if (v < cost[T * n + k]) {
          cost[T * n + k] = v;
          prev[T * n + k] = static_cast<std::int8_t>(j);
        }
      }
    }
  std::size_t end = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (cost[full * n + j] < cost[full * n + end]) end = j;
  std::vector<Index> order;
  for (std::size_t S = full, j = end;;) {
    order.push_back(static_cast<Index>(j));
    const auto p = prev[S * n + j];
    if (p < 0) break;
    S &= ~(std::size_t{1} << j);
    j = static_cast<std::size_t>(p);
  }
  std::reverse(order.begin(), order.end());
  return order;
}

constexpr Index kExactMaxPoints = 12;

class Improver {
 public:
  Improver(const std::vector<Point2>& pts, std::vector<Index>& order, double eps)
      : pts_(pts), p_(order), eps_(eps) {}

  void run() {
    for (bool changed = true; changed;) {
      changed = two_opt();
      changed = or_opt() || changed;
    }
  }

 private:
  double d(Index a, Index b) const {
    return dist(pts_[static_cast<std::size_t>(p_[static_cast<std::size_t>(a)])],
                pts_[static_cast<std::size_t>(p_[static_cast<std::size_t>(b)])]);
  }
  Index n() const { return static_cast<Index>(p_.size()); }

  // Reverse p[i..j]; open ends carry no edge.
  bool two_opt() {
    bool any = false;
    for (bool improved = true; improved;) {
      improved = false;
      for (Index i = 0; i + 1 < n(); ++i) {
        for (Index j = i + 1; j < n(); ++j) {
          double before = 0.0;
          double after = 0.0;
          if (i > 0) {
            before += d(i - 1, i);
            after += d(i - 1, j);
          }
          if (j + 1 < n()) {
            before += d(j, j + 1);
            after += d(i, j + 1);
          }
          if (after < before - eps_) {
            std::reverse(p_.begin() + i, p_.begin() + j + 1);
            improved = any = true;
          }
        }
      }
    }
    return any;
  }

  // Move a segment of 1-3 points, possibly reversed, to another gap.
  bool or_opt() {
    bool any = false;
    for (bool improved = true; improved;) {
      improved = false;
      for (Index len = 1; len <= 3 && !improved; ++len) {
        for (Index i = 0; i + len <= n() && !improved; ++i) {
          const Index j = i + len - 1;  // segment p[i..j]
          double removed = 0.0;
          if (i > 0) removed += d(i - 1, i);
          if (j + 1 < n()) removed += d(j, j + 1);
          const double bridge = (i > 0 && j + 1 < n()) ? d(i - 1, j + 1) : 0.0;
          const double gain = removed - bridge;
          if (gain <= eps_) continue;
          // Remaining path q; insert the segment into gap g (before q[g]).
          std::vector<Index> q;
          q.reserve(p_.size());
          for (Index k = 0; k < n(); ++k)
            if (k < i || k > j) q.push_back(p_[static_cast<std::size_t>(k)]);
          const auto qn = static_cast<Index>(q.size());
          const Point2& first = pts_[static_cast<std::size_t>(p_[static_cast<std::size_t>(i)])];
          const Point2& last = pts_[static_cast<std::size_t>(p_[static_cast<std::size_t>(j)])];
          auto at = [&](Index k) -> const Point2& { return pts_[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])]; };
          for (Index g = 0; g <= qn && !improved; ++g) {
            if (g == i) continue;  // original position
            for (int rev = 0; rev < 2 && !improved; ++rev) {
              const Point2& head = rev ? last : first;
              const Point2& tail = rev ? first : last;
              double add = 0.0;
              if (g > 0) add += dist(at(g - 1), head);
              if (g < qn) add += dist(tail, at(g));
              if (g > 0 && g < qn) add -= dist(at(g - 1), at(g));
              if (add < gain - eps_) {
                std::vector<Index> seg(p_.begin() + i, p_.begin() + j + 1);
                if (rev) std::reverse(seg.begin(), seg.end());
                q.insert(q.begin() + g, seg.begin(), seg.end());
                p_ = std::move(q);
                improved = any = true;
              }
            }
          }
        }
      }
    }
    return any;
  }

  const std::vector<Point2>& pts_;
  std::vector<Index>& p_;
  double eps_;
};

}  // namespace

double path_length(const std::vector<Point2>& pts, const std::vector<Index>& order) {
  double L = 0.0;
  for (std::size_t k = 1; k < order.size(); ++k)
    L += dist(pts[static_cast<std::size_t>(order[k - 1])], pts[static_cast<std::size_t>(order[k])]);
  return L;
}

Tour route_tsp(const std::vector<Point2>& pts, std::uint64_t seed) {
  require(!pts.empty(), ErrorKind::Argument, "routing needs at least one point");
  for (const auto& p : pts)
    require(std::isfinite(p.x) && std::isfinite(p.y), ErrorKind::Argument, "route points must be finite");
  const auto n = static_cast<Index>(pts.size());

  double extent = 0.0;
  for (const auto& p : pts) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-12 * std::max(1.0, extent);

  if (n <= kExactMaxPoints) {
    Tour exact;
    exact.nearest_neighbour_length = path_length(pts, nearest_neighbour(pts, 0));
    exact.order = held_karp(pts);
    exact.length = path_length(pts, exact.order);
    return exact;
  }

  std::vector<Index> starts{0};
  auto eng = make_stream(seed, StreamId::RouteRestarts);
  std::uniform_int_distribution<Index> pick(1, n - 1);
  for (int r = 0; r < 7; ++r) starts.push_back(pick(eng));

  Tour best;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    std::vector<Index> order = nearest_neighbour(pts, starts[s]);
    if (s == 0) best.nearest_neighbour_length = path_length(pts, order);
    Improver(pts, order, eps).run();
    const double L = path_length(pts, order);
    if (s == 0 || L < best.length - eps) {
      best.order = std::move(order);
      best.length = L;
    }
  }
  return best;
}

Durations estimate_duration(double path_length_px, double pitch_um, double stage_speed_mm_s, double weight_sum,
                            double lambda, double flux_photons_px_s) {
  require(pitch_um > 0.0 && stage_speed_mm_s > 0.0 && flux_photons_px_s > 0.0, ErrorKind::Argument,
          "pitch, stage speed and flux must be positive");
  require(path_length_px >= 0.0 && weight_sum >= 0.0 && lambda > 0.0, ErrorKind::Argument,
          "path length and weight sum must be non-negative and lambda positive");
  Durations d;
  d.scan_s = path_length_px * pitch_um * 1e-3 / stage_speed_mm_s;
  d.exposure_s = lambda * weight_sum / flux_photons_px_s;
  return d;
}

Route route_plan(const FovStack& stack, const Plan& plan, double pitch_um, double stage_speed_mm_s,
                 double flux_photons_px_s, double lambda, std::uint64_t seed) {
  require(!stack.consecutive(), ErrorKind::Argument, "routing of two-mask stacks is not supported");
  require(plan.weights.size() == stack.count(), ErrorKind::Argument, "plan does not match the stack");
  require(!plan.support.empty(), ErrorKind::Argument, "plan has no exposed masks to route");
  std::vector<Point2> pts;
  for (Index k : plan.support) {
    const auto& o = stack.offsets[static_cast<std::size_t>(k)].a;
    pts.push_back({static_cast<double>(o.dx), static_cast<double>(o.dy)});
  }
  const Tour t = route_tsp(pts, seed);
  Route r;
  r.path_length_px = t.length;
  r.nearest_neighbour_length_px = t.nearest_neighbour_length;
  r.stage_speed_mm_s = stage_speed_mm_s;
  r.flux_photons_px_s = flux_photons_px_s;
  for (Index i : t.order) {
    r.order.push_back(plan.support[static_cast<std::size_t>(i)]);
    r.points.push_back(pts[static_cast<std::size_t>(i)]);
  }
  const Durations d = estimate_duration(t.length, pitch_um, stage_speed_mm_s, plan.weights.sum(), lambda,
                                        flux_photons_px_s);
  r.scan_time_s = d.scan_s;
  r.exposure_time_s = d.exposure_s;
  return r;
}

}  // namespace ghostplan
