#include "nnmp/geo.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace nnmp {

double distance(const Site& a, const Site& b) { return std::hypot(a.x - b.x, a.y - b.y); }

SiteSet::SiteSet(std::vector<Site> sites, std::vector<std::size_t> order,
                 std::vector<std::vector<std::size_t>> neighbors, std::size_t max_neighbors)
    : sites_(std::move(sites)),
      order_(std::move(order)),
      neighbors_(std::move(neighbors)),
      max_neighbors_(max_neighbors) {
  for (std::size_t i = 0; i < neighbors_.size(); ++i)
    for (auto j : neighbors_[i])
      if (distance(sites_[i], sites_[j]) == 0.0) zero_pairs_.push_back({i, j});
}

std::vector<double> SiteSet::neighbor_distances(std::size_t i) const {
  std::vector<double> d;
  d.reserve(neighbors_[i].size());
  for (auto j : neighbors_[i]) d.push_back(distance(sites_[i], sites_[j]));
  return d;
}

namespace {

// Indices of the `count` smallest (distance, index) pairs, ascending.
std::vector<std::size_t> nearest(std::vector<std::pair<double, std::size_t>>& cand,
                                 std::size_t count) {
  count = std::min(count, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(count),
                    cand.end());
  std::vector<std::size_t> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = cand[k].second;
  return out;
}

std::vector<std::size_t> make_order(std::span<const Site> sites, Ordering ordering) {
  std::vector<std::size_t> order(sites.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (ordering.kind) {
    case OrderingKind::AsGiven:
      break;
    case OrderingKind::Random: {
      // Fisher-Yates with our own uniform draws so the permutation does not
      // depend on the standard library's shuffle implementation.
      Rng rng(ordering.seed);
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
      break;
    }
    case OrderingKind::CoordinateSum:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sites[a].x + sites[a].y < sites[b].x + sites[b].y;
      });
      break;
  }
  return order;
}

}  // namespace

SiteSet build_reference(std::span<const Site> sites, std::size_t max_neighbors,
                        Ordering ordering) {
  require(sites.size() >= 2, ErrorCategory::Data,
          "build_reference: at least 2 sites are required");
  require(max_neighbors >= 1, ErrorCategory::Config,
          "build_reference: neighbor cap L must be >= 1");
  for (const auto& s : sites)
    require(std::isfinite(s.x) && std::isfinite(s.y), ErrorCategory::Data,
            "build_reference: non-finite coordinate");

  const auto order = make_order(sites, ordering);
  std::vector<Site> ordered;
  ordered.reserve(sites.size());
  for (auto row : order) ordered.push_back(sites[row]);

  std::vector<std::vector<std::size_t>> nbrs(ordered.size());
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    cand.clear();
    for (std::size_t j = 0; j < i; ++j) cand.emplace_back(distance(ordered[i], ordered[j]), j);
    nbrs[i] = nearest(cand, max_neighbors);
  }
  return SiteSet(std::move(ordered), order, std::move(nbrs), max_neighbors);
}

QuerySite neighbors_of_query(const SiteSet& ref, const Site& q, std::size_t count,
                             std::optional<std::size_t> exclude) {
  const std::size_t available = ref.size() - (exclude ? 1 : 0);
  require(ref.size() > 0, ErrorCategory::Data, "neighbors_of_query: empty reference set");
  require(count >= 1 && count <= available, ErrorCategory::Config,
          "neighbors_of_query: neighbor count exceeds the reference set");
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(ref.size());
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (exclude && *exclude == j) continue;
    cand.emplace_back(distance(q, ref.site(j)), j);
  }
  QuerySite out{q, nearest(cand, count), {}};
  out.distances.reserve(out.neighbors.size());
  for (auto j : out.neighbors) out.distances.push_back(distance(q, ref.site(j)));
  return out;
}

QuerySite neighbors_of_query(const SiteSet& ref, const Site& q,
                             std::optional<std::size_t> exclude) {
  const std::size_t available = ref.size() - (exclude && ref.size() > 0 ? 1 : 0);
  return neighbors_of_query(ref, q, std::min(ref.max_neighbors(), available), exclude);
}

}  // namespace nnmp
