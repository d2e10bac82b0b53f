#include "rtpos/interval_tree.hpp"

#include <algorithm>

namespace rtpos::indexes {

TripIntervalTree TripIntervalTree::build(std::span<const gtfs::TripSchedule> trips) {
  TripIntervalTree tree;
  tree.nodes_.reserve(trips.size());
  for (const auto& t : trips) {
    tree.nodes_.push_back(Node{t.span_start(), t.span_end(), t.span_end(), &t});
  }
  std::sort(tree.nodes_.begin(), tree.nodes_.end(),
            [](const Node& a, const Node& b) {
              if (a.start != b.start) return a.start < b.start;
              return a.trip->trip_id < b.trip->trip_id;
            });
  if (!tree.nodes_.empty()) tree.init_subtree_max(0, tree.nodes_.size());
  return tree;
}

std::int32_t TripIntervalTree::init_subtree_max(std::size_t lo, std::size_t hi) {
  if (lo >= hi) return INT32_MIN;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int32_t m = nodes_[mid].end;
  m = std::max(m, init_subtree_max(lo, mid));
  m = std::max(m, init_subtree_max(mid + 1, hi));
  nodes_[mid].subtree_max_end = m;
  return m;
}

void TripIntervalTree::stab_one(std::size_t lo, std::size_t hi, std::int64_t t,
                                std::vector<const gtfs::TripSchedule*>& out,
                                QueryStats* stats) const {
  if (lo >= hi) return;
  if (stats != nullptr) ++stats->nodes_visited;
  // Starts are sorted, so nodes_[lo].start is the subtree minimum: nothing
  // here can contain t if even the smallest start lies beyond it.
  if (nodes_[lo].start > t) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  if (nodes_[mid].subtree_max_end < t) return;

  stab_one(lo, mid, t, out, stats);
  if (nodes_[mid].start <= t) {
    if (t <= nodes_[mid].end) out.push_back(nodes_[mid].trip);
    stab_one(mid + 1, hi, t, out, stats);
  }
}

std::vector<const gtfs::TripSchedule*> TripIntervalTree::stab(
    std::int32_t t, QueryStats* stats) const {
  std::vector<const gtfs::TripSchedule*> out;
  stab_one(0, nodes_.size(), t, out, stats);
  stab_one(0, nodes_.size(), static_cast<std::int64_t>(t) + 86400, out, stats);
  std::sort(out.begin(), out.end(),
            [](const gtfs::TripSchedule* a, const gtfs::TripSchedule* b) {
              return a->trip_id < b->trip_id;
            });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace rtpos::indexes
