#pragma once

#include <cstdint>
#include <vector>

#include "ghostplan/planner.hpp"

namespace ghostplan {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Tour {
  std::vector<Index> order;  // permutation of 0..n-1
  double length = 0.0;       // open path
  double nearest_neighbour_length = 0.0;  // construction from point 0, before improvement
};

/// Open-path Euclidean length of `pts` visited in `order`.
double path_length(const std::vector<Point2>& pts, const std::vector<Index>& order);

/// Short open scan path. Nearest-neighbour construction followed by 2-opt
/// and segment relocation (Or-opt) until neither improves, restarted from
/// point 0 and 7 seeded random points; the shortest tour wins, ties to the
/// earliest start. Up to 12 points the exact optimum is returned instead.
/// Deterministic for a given seed.
Tour route_tsp(const std::vector<Point2>& pts, std::uint64_t seed = 0);

struct Durations {
  double scan_s = 0.0;
  double exposure_s = 0.0;
  double total_s() const noexcept { return scan_s + exposure_s; }
};

/// scan = L * pitch / v (L in pixels, pitch in micrometres, v in mm/s);
/// exposure = lambda * sum(w) / flux (flux in photons per pixel per second).
Durations estimate_duration(double path_length_px, double pitch_um, double stage_speed_mm_s,
                            double weight_sum, double lambda, double flux_photons_px_s);

struct Route {
  std::vector<Index> order;  // support indices in visiting order
  double path_length_px = 0.0;
  double nearest_neighbour_length_px = 0.0;
  double scan_time_s = 0.0;
  double exposure_time_s = 0.0;
  double stage_speed_mm_s = 1.0;
  double flux_photons_px_s = 1e4;
  std::vector<Point2> points;  // (dx, dy) offsets in visiting order
};

/// Routes the support offsets of a single-mask plan and fills in the times.
Route route_plan(const FovStack& stack, const Plan& plan, double pitch_um, double stage_speed_mm_s,
                 double flux_photons_px_s, double lambda, std::uint64_t seed = 0);

}  // namespace ghostplan
