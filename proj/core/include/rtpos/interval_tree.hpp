#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtpos/gtfs.hpp"

namespace rtpos::indexes {

struct QueryStats {
  std::size_t nodes_visited = 0;
};

// Static interval tree over trip service spans [span_start, span_end], both
// ends inclusive. Implemented as an implicit balanced BST over the trips
// sorted by span start, augmented with subtree max-end for pruning.
//
// Queries probe both t and t+86400 so trips stored with after-midnight GTFS
// times (beyond 24:00:00) are found from early-morning query times.
class TripIntervalTree {
 public:
  TripIntervalTree() = default;

  // The referenced trips must outlive the tree.
  static TripIntervalTree build(std::span<const gtfs::TripSchedule> trips);

  // All trips whose span contains t or t+86400, sorted by trip_id.
  // Expects t in [0, 86400).
  std::vector<const gtfs::TripSchedule*> stab(std::int32_t t,
                                              QueryStats* stats = nullptr) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::int32_t start = 0;
    std::int32_t end = 0;
    std::int32_t subtree_max_end = 0;  // max end over the implicit subtree
    const gtfs::TripSchedule* trip = nullptr;
  };

  std::int32_t init_subtree_max(std::size_t lo, std::size_t hi);
  void stab_one(std::size_t lo, std::size_t hi, std::int64_t t,
                std::vector<const gtfs::TripSchedule*>& out,
                QueryStats* stats) const;

  std::vector<Node> nodes_;  // sorted by (start, trip_id)
};

}  // namespace rtpos::indexes
