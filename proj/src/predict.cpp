#include "nnmp/predict.hpp"

#include <algorithm>
#include <cmath>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {

struct Neighborhood {
  std::vector<std::size_t> index;
  std::vector<double> distance;
};

Neighborhood neighborhood(const FitData& data, const QueryPoint& q) {
  Neighborhood nb;
  if (q.reference) {
    const std::size_t i = *q.reference;
    require(i < data.ref.size(), ErrorCategory::Data, "predict: reference index out of range");
    const auto idx = data.ref.neighbors(i);
    nb.index.assign(idx.begin(), idx.end());
    nb.distance = data.ref.neighbor_distances(i);
  } else {
    auto qs = neighbors_of_query(data.ref, q.site);
    nb.index = std::move(qs.neighbors);
    nb.distance = std::move(qs.distances);
  }
  return nb;
}

Locus query_locus(const QueryPoint& q) {
  return Locus{q.site, std::span<const double>(q.covariates), q.partition};
}

double linear_predictor(const ChainDraws& d, std::size_t k, std::span<const double> x) {
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) m += x[j] * d.values[k][j];
  return m;
}

}  // namespace

std::vector<double> predict_site(const ChainDraws& draws, const FitData& data,
                                 const QueryPoint& q, Rng& rng) {
  require(draws.size() > 0, ErrorCategory::Data, "predict: no posterior draws");
  const Neighborhood nb = neighborhood(data, q);
  const Locus v = query_locus(q);
  const bool is_ref = q.reference.has_value();
  const std::size_t ri = is_ref ? *q.reference : 0;
  std::vector<double> out;
  out.reserve(draws.size());

  if (draws.regression) {
    const std::size_t i_tau = draws.index_of("tau2");
    const std::size_t p = i_tau;  // coefficients precede tau2
    std::vector<double> x = q.covariates;
    if (is_ref) {
      const auto row = data.covariates.row(static_cast<Eigen::Index>(ri));
      x.assign(row.data(), row.data() + row.size());
    }
    require(x.size() == p, ErrorCategory::Data,
            "predict: query covariate count does not match the regression coefficients");
    for (std::size_t k = 0; k < draws.size(); ++k) {
      const auto& z = draws.latent[k];
      double zq;
      if (is_ref) {
        zq = z[ri];
      } else {
        const auto spec = spec_at(draws, k);
        const auto w = weights_at(draws, k);
        const auto cut = cutoffs(nb.distance, w.zeta);
        const auto wq = weights_from_G(cut, weight_mean(q.site, w.gamma), w.kappa2);
        const std::size_t l = sample_categorical(wq, rng);
        const NeighborValue nv{l, nb.distance[l], z[nb.index[l]], {}};
        zq = sample_component(spec, v, nv, rng);
      }
      const double tau = std::sqrt(draws.values[k][i_tau]);
      out.push_back(linear_predictor(draws, k, x) + zq + tau * std_normal(rng));
    }
    return out;
  }

  Locus vref = v;
  if (is_ref) vref = data.locus(ri);
  const bool use_t = is_ref && !draws.latent.empty() && draws.latent_name == "t" &&
                     ri < draws.latent.front().size() && std::isfinite(draws.latent.front()[ri]);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const auto spec = spec_at(draws, k);
    if (nb.index.empty()) {
      out.push_back(sample_marginal(spec, vref, rng));
      continue;
    }
    const auto w = weights_at(draws, k);
    const auto cut = cutoffs(nb.distance, w.zeta);
    std::size_t l;
    if (use_t) {
      l = latent_bin(draws.latent[k][ri], cut);
    } else {
      const auto wq = weights_from_G(cut, weight_mean(vref.site, w.gamma), w.kappa2);
      l = sample_categorical(wq, rng);
    }
    const std::size_t j = nb.index[l];
    const NeighborValue nv{l, nb.distance[l], data.y[j], data.locus(j)};
    out.push_back(sample_component(spec, vref, nv, rng));
  }
  return out;
}

double sample_quantile(std::vector<double> values, double p) {
  require(!values.empty(), ErrorCategory::Data, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PredictiveSummary predict_points(const ChainDraws& draws, const FitData& data,
                                 std::span<const QueryPoint> points, std::uint64_t seed,
                                 double level, bool keep_draws) {
  require(level > 0.0 && level < 1.0, ErrorCategory::Config,
          "predict: interval level must lie in (0, 1)");
  PredictiveSummary s;
  s.level = level;
  const double alpha = 0.5 * (1.0 - level);
  for (std::size_t k = 0; k < points.size(); ++k) {
    Rng rng(derive_seed(seed, k));
    auto d = predict_site(draws, data, points[k], rng);
    double mean = 0.0;
    for (double v : d) mean += v;
    s.sites.push_back(points[k].site);
    s.mean.push_back(mean / static_cast<double>(d.size()));
    s.median.push_back(sample_quantile(d, 0.5));
    s.lower.push_back(sample_quantile(d, alpha));
    s.upper.push_back(sample_quantile(d, 1.0 - alpha));
    if (keep_draws) s.draws.push_back(std::move(d));
  }
  return s;
}

std::vector<Site> grid_sites(const GridSpec& g) {
  require(g.nx >= 1 && g.ny >= 1, ErrorCategory::Config, "grid: need at least one node per axis");
  require(g.xmax >= g.xmin && g.ymax >= g.ymin, ErrorCategory::Config, "grid: empty bounding box");
  auto axis = [](double lo, double hi, std::size_t n, std::size_t k) {
    if (n == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<Site> out;
  out.reserve(g.nx * g.ny);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i)
      out.push_back({axis(g.xmin, g.xmax, g.nx, i), axis(g.ymin, g.ymax, g.ny, j)});
  return out;
}

PredictiveSummary predict_grid(const ChainDraws& draws, const FitData& data, const GridSpec& grid,
                               std::uint64_t seed, double level,
                               const std::function<QueryPoint(const Site&)>& locate) {
  std::vector<QueryPoint> pts;
  for (const auto& s : grid_sites(grid)) pts.push_back(locate ? locate(s) : QueryPoint{s, {}, 0, {}});
  return predict_points(draws, data, pts, seed, level, false);
}

}  // namespace nnmp
