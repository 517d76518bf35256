#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nnmp/common.hpp"

namespace nnmp {

/// A location in the planar domain. Longitude/latitude are treated as
/// planar coordinates.
struct Site {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Site&, const Site&) = default;
};

/// Euclidean distance.
double distance(const Site& a, const Site& b);

enum class OrderingKind { AsGiven, Random, CoordinateSum };

struct Ordering {
  OrderingKind kind = OrderingKind::Random;
  std::uint64_t seed = 0;

  static Ordering as_given() { return {OrderingKind::AsGiven, 0}; }
  static Ordering random(std::uint64_t seed) { return {OrderingKind::Random, seed}; }
  static Ordering coordinate_sum() { return {OrderingKind::CoordinateSum, 0}; }
};

/// A (site, neighbor) pair found at distance zero.
struct ZeroDistancePair {
  std::size_t site;
  std::size_t neighbor;
};

/// Ordered reference set with its sparse DAG. Sites are stored in DAG
/// order; `order[i]` is the input row of the i-th site. Every neighbor of
/// site i has index < i, and lists are sorted by distance with ties
/// broken by lower index.
class SiteSet {
 public:
  SiteSet() = default;
  SiteSet(std::vector<Site> sites, std::vector<std::size_t> order,
          std::vector<std::vector<std::size_t>> neighbors, std::size_t max_neighbors);

  std::size_t size() const { return sites_.size(); }
  std::size_t max_neighbors() const { return max_neighbors_; }
  const Site& site(std::size_t i) const { return sites_[i]; }
  std::span<const Site> sites() const { return sites_; }
  std::span<const std::size_t> order() const { return order_; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return neighbors_[i]; }
  /// Distances from site i to each of its neighbors, in neighbor order.
  std::vector<double> neighbor_distances(std::size_t i) const;

  /// Pairs at distance zero; correlation kernels evaluate to their
  /// boundary value 1 on these.
  std::span<const ZeroDistancePair> zero_distance_pairs() const { return zero_pairs_; }

  /// Reorders per-row input values (given in input-row order) into DAG order.
  template <typename T>
  std::vector<T> apply_ordering(std::span<const T> by_input_row) const {
    require(by_input_row.size() == sites_.size(), ErrorCategory::Data,
            "apply_ordering: value count does not match site count");
    std::vector<T> out;
    out.reserve(order_.size());
    for (auto row : order_) out.push_back(by_input_row[row]);
    return out;
  }

 private:
  std::vector<Site> sites_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t max_neighbors_ = 0;
  std::vector<ZeroDistancePair> zero_pairs_;
};

/// Orders the sites and builds the nearest-neighbor DAG with at most
/// `max_neighbors` earlier neighbors per site (brute force, O(n^2)).
SiteSet build_reference(std::span<const Site> sites, std::size_t max_neighbors,
                        Ordering ordering);

/// Neighbor structure of a non-reference location.
struct QuerySite {
  Site site;
  std::vector<std::size_t> neighbors;  // reference indices, ascending by distance
  std::vector<double> distances;
};

/// The L reference sites closest to `q` (all of them when fewer than L exist). `exclude` removes one reference
/// index from the candidates (used to treat a reference site as a query).
QuerySite neighbors_of_query(const SiteSet& ref, const Site& q,
                             std::optional<std::size_t> exclude = std::nullopt);

/// Same as above with an explicit neighbor count.
QuerySite neighbors_of_query(const SiteSet& ref, const Site& q, std::size_t count,
                             std::optional<std::size_t> exclude = std::nullopt);

}  // namespace nnmp
