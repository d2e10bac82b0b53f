#include "rtpos/stop_tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rtpos::indexes {

namespace {

// Lexicographic (distance_sq, stop_id, stop_sequence) ordering; smaller wins.
bool better(double d2, const gtfs::Stop* stop, std::uint32_t seq,
            const NearestStop& best) {
  if (best.stop == nullptr) return true;
  if (d2 != best.distance_sq) return d2 < best.distance_sq;
  if (stop->stop_id != best.stop->stop_id) return stop->stop_id < best.stop->stop_id;
  return seq < best.stop_sequence;
}

}  // namespace

StopNeighborTree StopNeighborTree::build(std::span<const StopOccurrence> occurrences,
                                         double reference_latitude) {
  if (occurrences.empty()) {
    throw std::invalid_argument("StopNeighborTree: empty stop set");
  }
  StopNeighborTree tree;
  tree.reference_latitude_ = reference_latitude;
  tree.points_.reserve(occurrences.size());
  for (const auto& occ : occurrences) {
    const auto p = geo::project_equirectangular(occ.stop->latitude,
                                                occ.stop->longitude,
                                                reference_latitude);
    tree.points_.push_back(Point{p.x, p.y, occ.stop, occ.stop_sequence});
  }
  tree.build_range(0, tree.points_.size(), 0);
  return tree;
}

void StopNeighborTree::build_range(std::size_t lo, std::size_t hi, int axis) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(points_.begin() + lo, points_.begin() + mid, points_.begin() + hi,
                   [axis](const Point& a, const Point& b) {
                     return axis == 0 ? a.x < b.x : a.y < b.y;
                   });
  build_range(lo, mid, 1 - axis);
  build_range(mid + 1, hi, 1 - axis);
}

void StopNeighborTree::search(std::size_t lo, std::size_t hi, int axis,
                              const geo::PlanarPoint& q, NearestStop& best,
                              QueryStats* stats) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const Point& p = points_[mid];
  if (stats != nullptr) ++stats->nodes_visited;

  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double d2 = dx * dx + dy * dy;
  if (better(d2, p.stop, p.stop_sequence, best)) {
    best = NearestStop{p.stop, p.stop_sequence, 0.0, d2};
  }

  const double axis_diff = axis == 0 ? dx : dy;
  const bool left_first = axis_diff < 0.0;
  const auto descend = [&](bool left) {
    if (left) {
      search(lo, mid, 1 - axis, q, best, stats);
    } else {
      search(mid + 1, hi, 1 - axis, q, best, stats);
    }
  };
  descend(left_first);
  // The far half can still hold an equal-distance point that wins the tie
  // rules, so prune only when strictly farther.
  if (axis_diff * axis_diff <= best.distance_sq) descend(!left_first);
}

NearestStop StopNeighborTree::nearest(double latitude, double longitude,
                                      QueryStats* stats) const {
  const auto q = geo::project_equirectangular(latitude, longitude, reference_latitude_);
  NearestStop best;
  search(0, points_.size(), 0, q, best, stats);
  best.distance = std::sqrt(best.distance_sq);
  return best;
}

}  // namespace rtpos::indexes
