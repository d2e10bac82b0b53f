#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtpos/geo.hpp"
#include "rtpos/gtfs.hpp"
#include "rtpos/interval_tree.hpp"  // QueryStats

namespace rtpos::indexes {

// One occurrence of a stop within a trip (the same physical stop may appear
// at several sequences on loop routes).
struct StopOccurrence {
  const gtfs::Stop* stop = nullptr;
  std::uint32_t stop_sequence = 0;
};

struct NearestStop {
  const gtfs::Stop* stop = nullptr;
  std::uint32_t stop_sequence = 0;
  double distance = 0.0;     // planar, projected degrees
  double distance_sq = 0.0;  // exact comparison key
};

// 2-D kd-tree over equirectangular-projected stop coordinates. Ties on
// distance are broken by smaller stop_id, then smaller stop_sequence, so
// results are deterministic across nodes and test oracles.
class StopNeighborTree {
 public:
  StopNeighborTree() = default;

  // Throws std::invalid_argument on an empty occurrence list. The referenced
  // stops must outlive the tree.
  static StopNeighborTree build(std::span<const StopOccurrence> occurrences,
                                double reference_latitude);

  NearestStop nearest(double latitude, double longitude,
                      QueryStats* stats = nullptr) const;

  std::size_t size() const { return points_.size(); }
  double reference_latitude() const { return reference_latitude_; }

 private:
  struct Point {
    double x = 0.0;
    double y = 0.0;
    const gtfs::Stop* stop = nullptr;
    std::uint32_t stop_sequence = 0;
  };

  void build_range(std::size_t lo, std::size_t hi, int axis);
  void search(std::size_t lo, std::size_t hi, int axis, const geo::PlanarPoint& q,
              NearestStop& best, QueryStats* stats) const;

  std::vector<Point> points_;
  double reference_latitude_ = 0.0;
};

}  // namespace rtpos::indexes
