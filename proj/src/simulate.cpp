#include "nnmp/simulate.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <memory>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {

constexpr double kTiny = 1e-300;

// k nearest among points already inserted into a uniform bucket grid.
class BucketGrid {
 public:
  BucketGrid(std::span<const Site> sites, std::size_t cells_per_axis) : sites_(sites) {
    xmin_ = ymin_ = kInf;
    double xmax = -kInf;
    double ymax = -kInf;
    for (const auto& s : sites) {
      xmin_ = std::min(xmin_, s.x);
      ymin_ = std::min(ymin_, s.y);
      xmax = std::max(xmax, s.x);
      ymax = std::max(ymax, s.y);
    }
    g_ = std::max<std::size_t>(1, cells_per_axis);
    h_ = std::max({(xmax - xmin_) / static_cast<double>(g_), (ymax - ymin_) / static_cast<double>(g_),
                   1e-12});
    cells_.resize(g_ * g_);
  }

  void insert(std::size_t i) {
    const auto [cx, cy] = cell(sites_[i]);
    cells_[cy * g_ + cx].push_back(i);
  }

  std::vector<std::size_t> nearest(const Site& q, std::size_t k) const {
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;
    const auto [cx, cy] = cell(q);
    const auto icx = static_cast<long>(cx);
    const auto icy = static_cast<long>(cy);
    const auto g = static_cast<long>(g_);
    for (long r = 0; r <= g; ++r) {
      if (heap.size() == k && static_cast<double>(r - 1) * h_ > heap.top().first) break;
      for (long y = icy - r; y <= icy + r; ++y) {
        if (y < 0 || y >= g) continue;
        const bool edge = y == icy - r || y == icy + r;
        for (long x = icx - r; x <= icx + r; x += edge ? 1 : 2 * r) {
          if (x >= 0 && x < g) {
            for (std::size_t j : cells_[static_cast<std::size_t>(y * g + x)]) {
              const double d = distance(q, sites_[j]);
              const Entry e{d, j};
              if (heap.size() < k) {
                heap.push(e);
              } else if (e < heap.top()) {
                heap.pop();
                heap.push(e);
              }
            }
          }
          if (r == 0) break;
        }
      }
    }
    std::vector<std::size_t> out(heap.size());
    for (std::size_t m = out.size(); m-- > 0;) {
      out[m] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  std::pair<std::size_t, std::size_t> cell(const Site& s) const {
    auto idx = [&](double v, double lo) {
      const double c = std::floor((v - lo) / h_);
      return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(g_ - 1)));
    };
    return {idx(s.x, xmin_), idx(s.y, ymin_)};
  }

  std::span<const Site> sites_;
  double xmin_;
  double ymin_;
  double h_;
  std::size_t g_;
  std::vector<std::vector<std::size_t>> cells_;
};

double gamma_upper_quantile(const Gamma& g, double q) {
  return boost::math::gamma_q_inv(g.shape, q) / g.rate;
}

double gamma_lower_quantile(const Gamma& g, double p) {
  return boost::math::gamma_p_inv(g.shape, p) / g.rate;
}

}  // namespace

FieldRealization simulate_nnmp(const ModelSpec& spec, const SiteSet& ref, const WeightParams& w,
                               std::uint64_t seed, const RowMatrix& covariates,
                               std::span<const std::size_t> partition) {
  validate(spec);
  validate(w);
  require(!std::holds_alternative<LomaxNNMP>(spec), ErrorCategory::Unsupported,
          "simulate_nnmp: the Lomax NNMP has no stationary marginal for the first site");
  const std::size_t n = ref.size();
  auto locus = [&](std::size_t i) {
    Locus v{ref.site(i), {}, partition.empty() ? 0 : partition[i]};
    if (covariates.cols() > 0)
      v.covariates = std::span<const double>(covariates.row(static_cast<Eigen::Index>(i)).data(),
                                             static_cast<std::size_t>(covariates.cols()));
    return v;
  };
  Rng rng(seed);
  FieldRealization out;
  out.generator = "nnmp:" + family_name(spec);
  out.seed = seed;
  out.sites.assign(ref.sites().begin(), ref.sites().end());
  out.values.resize(n);
  out.values[0] = sample_marginal(spec, locus(0), rng);
  for (std::size_t i = 1; i < n; ++i) {
    const auto wi = site_weights(ref, i, w);
    const std::size_t l = sample_categorical(wi, rng);
    const std::size_t j = ref.neighbors(i)[l];
    const NeighborValue nb{l, distance(ref.site(i), ref.site(j)), out.values[j], locus(j)};
    out.values[i] = sample_component(spec, locus(i), nb, rng);
  }
  const auto names = theta_names(spec);
  const auto vals = pack_theta(spec);
  for (std::size_t k = 0; k < names.size(); ++k) out.truth[names[k]] = vals[k];
  out.truth["gamma0"] = w.gamma[0];
  out.truth["gamma1"] = w.gamma[1];
  out.truth["gamma2"] = w.gamma[2];
  out.truth["kappa2"] = w.kappa2;
  out.truth["zeta"] = w.zeta;
  return out;
}

FieldRealization simulate_gnnmp_regression(const SiteSet& ref, const RowMatrix& covariates,
                                           std::span<const double> beta, double tau2,
                                           double sigma2, double phi, const WeightParams& w,
                                           std::uint64_t seed, std::vector<double>* latent) {
  require(static_cast<std::size_t>(covariates.rows()) == ref.size() &&
              static_cast<std::size_t>(covariates.cols()) == beta.size(),
          ErrorCategory::Data, "simulate regression: covariate matrix does not match beta");
  require(tau2 >= 0.0, ErrorCategory::Config, "simulate regression: tau2 must be >= 0");
  auto z = simulate_nnmp(GaussianNNMP{0.0, sigma2, phi}, ref, w, seed);
  Rng rng(derive_seed(seed, 1));
  FieldRealization out;
  out.generator = "gnnmp-regression";
  out.seed = seed;
  out.sites = z.sites;
  out.values.resize(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k)
      m += covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * beta[k];
    out.values[i] = m + z.values[i] + std::sqrt(tau2) * std_normal(rng);
  }
  for (std::size_t k = 0; k < beta.size(); ++k) out.truth["beta" + std::to_string(k)] = beta[k];
  out.truth["tau2"] = tau2;
  out.truth["sigma2"] = sigma2;
  out.truth["phi"] = phi;
  if (latent) *latent = std::move(z.values);
  return out;
}

GaussianProcess::GaussianProcess(std::vector<Site> sites, double phi, Options opt)
    : sites_(std::move(sites)), phi_(phi) {
  require(phi > 0.0, ErrorCategory::Config, "Gaussian process: range must be > 0");
  require(!sites_.empty(), ErrorCategory::Data, "Gaussian process: no sites");
  const std::size_t n = sites_.size();
  dense_ = n <= opt.dense_limit;
  if (dense_) {
    Eigen::MatrixXd c(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        c(i, j) = c(j, i) = std::exp(-distance(sites_[i], sites_[j]) / phi);
    for (int e = -11; e <= -6; ++e) {
      const double jit = e < -10 ? 0.0 : std::pow(10.0, e);
      Eigen::MatrixXd a = c;
      a.diagonal().array() += jit;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        jitter_ = jit;
        return;
      }
    }
    fail(ErrorCategory::Numeric,
         "Gaussian process: covariance is not positive definite after jitter 1e-6 (duplicate "
         "sites?)");
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  Rng orng(opt.ordering_seed);
  std::shuffle(order_.begin(), order_.end(), orng);
  const auto g = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) / 2.0)));
  BucketGrid grid(sites_, g);
  nb_.resize(n);
  coef_.resize(n);
  sd_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order_[k];
    const auto nb = grid.nearest(sites_[i], opt.vecchia_neighbors);
    const auto m = static_cast<Eigen::Index>(nb.size());
    if (m == 0) {
      sd_[i] = 1.0;
    } else {
      Eigen::MatrixXd cnn(m, m);
      Eigen::VectorXd cn(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        cn[a] = std::exp(-distance(sites_[i], sites_[nb[a]]) / phi);
        for (Eigen::Index b = 0; b <= a; ++b)
          cnn(a, b) = cnn(b, a) = std::exp(-distance(sites_[nb[a]], sites_[nb[b]]) / phi);
      }
      cnn.diagonal().array() += 1e-10;
      const Eigen::VectorXd b = cnn.ldlt().solve(cn);
      coef_[i].assign(b.data(), b.data() + m);
      sd_[i] = std::sqrt(std::max(1.0 - cn.dot(b), 0.0));
    }
    nb_[i] = nb;
    grid.insert(i);
  }
}

std::vector<double> GaussianProcess::draw(Rng& rng) const {
  const std::size_t n = sites_.size();
  std::vector<double> out(n);
  if (dense_) {
    Eigen::VectorXd e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = std_normal(rng);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>() * e;
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i];
    return out;
  }
  for (std::size_t i : order_) {
    double m = 0.0;
    for (std::size_t a = 0; a < nb_[i].size(); ++a) m += coef_[i][a] * out[nb_[i][a]];
    out[i] = m + sd_[i] * std_normal(rng);
  }
  return out;
}

double student_t_cdf(double x, double nu) {
  require(nu > 0.0, ErrorCategory::Config, "Student-t: degrees of freedom must be > 0");
  if (!std::isfinite(nu)) return norm_cdf(x);
  const boost::math::students_t_distribution<double> t(nu);
  return boost::math::cdf(t, x);
}

double chi_coefficient(double nu, double rho0) {
  require(nu > 0.0, ErrorCategory::Config, "chi coefficient: nu must be > 0");
  require(rho0 > -1.0 && rho0 <= 1.0, ErrorCategory::Config,
          "chi coefficient: rho0 must lie in (-1, 1]");
  return 2.0 * student_t_cdf(-std::sqrt((1.0 + nu) * (1.0 - rho0) / (1.0 + rho0)), nu + 1.0);
}

FieldRealization simulate_tcopula_gamma(std::span<const Site> sites, double nu, double phi_w,
                                        const Gamma& marginal, std::uint64_t seed) {
  validate(Marginal{marginal});
  require(nu > 0.0, ErrorCategory::Config, "t-copula field: nu must be > 0");
  const GaussianProcess gp({sites.begin(), sites.end()}, phi_w, {6000, 30, derive_seed(seed, 7)});
  Rng rng(seed);
  const auto w = gp.draw(rng);
  double scale = 1.0;
  if (std::isfinite(nu)) {
    std::chi_squared_distribution<double> chi(nu);
    scale = 1.0 / std::sqrt(std::max(chi(rng), kTiny) / nu);
  }
  FieldRealization out;
  out.generator = "tcopula-gamma";
  out.seed = seed;
  out.sites.assign(sites.begin(), sites.end());
  out.values.resize(sites.size());
  std::unique_ptr<boost::math::students_t_distribution<double>> t;
  if (std::isfinite(nu)) t = std::make_unique<boost::math::students_t_distribution<double>>(nu);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double x = w[i] * scale;
    if (x > 0.0) {
      const double q = t ? boost::math::cdf(boost::math::complement(*t, x)) : norm_sf(x);
      out.values[i] = gamma_upper_quantile(marginal, std::max(q, kTiny));
    } else {
      const double p = t ? boost::math::cdf(*t, x) : norm_cdf(x);
      out.values[i] = gamma_lower_quantile(marginal, std::max(p, kTiny));
    }
  }
  out.truth["nu"] = nu;
  out.truth["phi_w"] = phi_w;
  out.truth["a"] = marginal.shape;
  out.truth["b"] = marginal.rate;
  return out;
}

FieldRealization simulate_skew_gp(std::span<const Site> sites, double sigma1, double sigma2,
                                  double phi, std::uint64_t seed) {
  require(sigma2 > 0.0, ErrorCategory::Config, "skew GP: sigma2 must be > 0");
  const GaussianProcess gp({sites.begin(), sites.end()}, phi, {6000, 30, derive_seed(seed, 7)});
  Rng rng(seed);
  const auto w1 = gp.draw(rng);
  const auto w2 = gp.draw(rng);
  FieldRealization out;
  out.generator = "skew-gp";
  out.seed = seed;
  out.sites.assign(sites.begin(), sites.end());
  out.values.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i)
    out.values[i] = sigma1 * std::abs(w1[i]) + sigma2 * w2[i];
  out.truth["sigma1"] = sigma1;
  out.truth["sigma2"] = sigma2;
  out.truth["phi"] = phi;
  return out;
}

FieldRealization simulate_beta_copula(std::span<const Site> sites, const Beta& marginal,
                                      double phi, std::uint64_t seed) {
  validate(Marginal{marginal});
  const GaussianProcess gp({sites.begin(), sites.end()}, phi, {6000, 30, derive_seed(seed, 7)});
  Rng rng(seed);
  const auto w = gp.draw(rng);
  FieldRealization out;
  out.generator = "beta-copula";
  out.seed = seed;
  out.sites.assign(sites.begin(), sites.end());
  out.values.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    double y;
    if (w[i] > 0.0)
      y = boost::math::ibetac_inv(marginal.a, marginal.b, std::max(norm_sf(w[i]), kTiny));
    else
      y = boost::math::ibeta_inv(marginal.a, marginal.b, std::max(norm_cdf(w[i]), kTiny));
    out.values[i] = std::clamp(y, 1e-300, std::nextafter(1.0, 0.0));
  }
  out.truth["a"] = marginal.a;
  out.truth["b"] = marginal.b;
  out.truth["phi"] = phi;
  return out;
}

BenchmarkLayout benchmark_layout(std::size_t nx, std::size_t ny, std::size_t n_ref,
                                 std::size_t n_holdout, std::uint64_t seed) {
  require(nx >= 1 && ny >= 1, ErrorCategory::Config, "benchmark grid: empty grid");
  require(n_ref + n_holdout <= nx * ny, ErrorCategory::Config,
          "benchmark grid: more reference and held-out sites than grid cells");
  BenchmarkLayout out;
  out.sites.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
      out.sites.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(nx),
                           (static_cast<double>(j) + 0.5) / static_cast<double>(ny)});
  std::vector<std::size_t> idx(out.sites.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first n_ref + n_holdout entries are a random subset.
  for (std::size_t k = 0; k < n_ref + n_holdout; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  out.reference.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_ref));
  out.holdout.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_ref),
                     idx.begin() + static_cast<std::ptrdiff_t>(n_ref + n_holdout));
  return out;
}

}  // namespace nnmp
