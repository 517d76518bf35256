#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nnmp/mcmc.hpp"

namespace nnmp {

/// A prediction location. `reference` marks a reference site (DAG index),
/// predicted from its own DAG neighbors; otherwise the L nearest
/// reference sites are used.
struct QueryPoint {
  Site site;
  std::vector<double> covariates;
  std::size_t partition = 0;
  std::optional<std::size_t> reference;
};

/// One predictive draw per posterior draw.
std::vector<double> predict_site(const ChainDraws& draws, const FitData& data,
                                 const QueryPoint& q, Rng& rng);

struct PredictiveSummary {
  std::vector<Site> sites;
  std::vector<double> median;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
  std::vector<std::vector<double>> draws;  // [site][draw], kept on request
};

/// Linear-interpolation sample quantile of unsorted values.
double sample_quantile(std::vector<double> values, double p);

PredictiveSummary predict_points(const ChainDraws& draws, const FitData& data,
                                 std::span<const QueryPoint> points, std::uint64_t seed,
                                 double level = 0.95, bool keep_draws = false);

/// Regular grid of nx by ny nodes spanning the box; a 1-node axis sits at
/// the box midpoint.
struct GridSpec {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;
  std::size_t nx = 50;
  std::size_t ny = 50;
};

std::vector<Site> grid_sites(const GridSpec& g);

/// Grid prediction. `locate` fills covariates and partition for models that
/// need them.
PredictiveSummary predict_grid(const ChainDraws& draws, const FitData& data, const GridSpec& grid,
                               std::uint64_t seed, double level = 0.95,
                               const std::function<QueryPoint(const Site&)>& locate = {});

}  // namespace nnmp
