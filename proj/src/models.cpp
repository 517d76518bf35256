#include "nnmp/models.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nnmp {

namespace {

constexpr double kMaxRho = 1.0 - 1e-10;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double normal_logpdf(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * r * r / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Location term and skewness of the extended skew model at a locus.
std::pair<double, double> ext_terms(const ExtSkewGNNMP& m, const Locus& v) {
  require(v.covariates.size() == m.beta.size(), ErrorCategory::Data,
          "extended skew model: covariate count does not match beta");
  if (v.partition >= m.lambda.size()) {
    std::ostringstream os;
    os << "extended skew model: location (" << v.site.x << ", " << v.site.y
       << ") has partition label " << v.partition << " but only " << m.lambda.size()
       << " partitions are defined";
    fail(ErrorCategory::Data, os.str());
  }
  return {dot(v.covariates, m.beta), m.lambda[v.partition]};
}

}  // namespace

void validate(const ModelSpec& spec) {
  auto positive = [](double v, const char* what) {
    require(v > 0.0 && std::isfinite(v), ErrorCategory::Config,
            std::string(what) + " must be finite and > 0");
  };
  std::visit(Overloaded{
                 [&](const GaussianNNMP& m) {
                   require(std::isfinite(m.mu), ErrorCategory::Config, "mu must be finite");
                   positive(m.sigma2, "sigma2");
                   positive(m.phi, "phi");
                 },
                 [&](const SkewGNNMP& m) {
                   require(std::isfinite(m.lambda) && std::isfinite(m.location),
                           ErrorCategory::Config, "lambda and location must be finite");
                   positive(m.sigma2, "sigma2");
                   positive(m.phi, "phi");
                 },
                 [&](const ExtSkewGNNMP& m) {
                   require(!m.beta.empty() && !m.lambda.empty(), ErrorCategory::Config,
                           "extended skew model needs beta and at least one lambda");
                   for (double b : m.beta)
                     require(std::isfinite(b), ErrorCategory::Config, "beta must be finite");
                   for (double l : m.lambda)
                     require(std::isfinite(l), ErrorCategory::Config, "lambda must be finite");
                   positive(m.sigma2, "sigma2");
                   positive(m.phi, "phi");
                 },
                 [&](const CopulaNNMP& m) {
                   positive(m.phi, "phi");
                   require(std::holds_alternative<Gamma>(m.marginal) ||
                               std::holds_alternative<Beta>(m.marginal),
                           ErrorCategory::Config, "copula NNMP marginal must be Gamma or Beta");
                   validate(m.marginal);
                 },
                 [&](const LomaxNNMP& m) {
                   require(!m.alpha.empty() && m.alpha.size() == m.shift.size(),
                           ErrorCategory::Config, "Lomax NNMP: shift and alpha lengths differ");
                   for (double a : m.alpha) positive(a, "Lomax alpha");
                   for (double s : m.shift) positive(s, "Lomax shift");
                 },
             },
             spec);
}

std::string family_name(const ModelSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianNNMP&) { return std::string("gaussian"); },
          [](const SkewGNNMP&) { return std::string("skew"); },
          [](const ExtSkewGNNMP&) { return std::string("ext-skew"); },
          [](const CopulaNNMP& m) {
            return std::string(m.copula == CopulaFamily::Gaussian ? "gaussian-copula"
                                                                  : "gumbel-copula") +
                   (std::holds_alternative<Gamma>(m.marginal) ? "-gamma" : "-beta");
          },
          [](const LomaxNNMP&) { return std::string("lomax"); },
      },
      spec);
}

std::optional<Marginal> stationary_marginal(const ModelSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianNNMP& m) -> std::optional<Marginal> {
            return Normal{m.mu, m.sigma2};
          },
          [](const SkewGNNMP& m) -> std::optional<Marginal> {
            return SkewNormal{m.location, m.lambda * m.lambda + m.sigma2,
                              m.lambda / std::sqrt(m.sigma2)};
          },
          [](const ExtSkewGNNMP&) -> std::optional<Marginal> { return std::nullopt; },
          [](const CopulaNNMP& m) -> std::optional<Marginal> { return m.marginal; },
          [](const LomaxNNMP&) -> std::optional<Marginal> { return std::nullopt; },
      },
      spec);
}

double correlation(double d, double phi) { return std::exp(-d / phi); }

double gaussian_component_logdensity(double y, double y_nb, double mu, double sigma2,
                                     double rho) {
  rho = std::min(rho, kMaxRho);
  return normal_logpdf(y, (1.0 - rho) * mu + rho * y_nb, sigma2 * (1.0 - rho * rho));
}

double skew_component_logdensity(double y, double y_nb, double mv, double mnb, double lam_v,
                                 double lam_nb, double sigma2, double rho) {
  rho = std::min(rho, kMaxRho);
  const double ev = y - mv;
  const double enb = y_nb - mnb;
  const double omega2_nb = sigma2 + lam_nb * lam_nb;
  const double omega2_v = sigma2 + lam_v * lam_v;
  const double c = rho * sigma2 + lam_v * lam_nb;
  const double gamma = c / omega2_nb;
  const double var = omega2_v - c * c / omega2_nb;
  const double r = (1.0 - rho * rho) * sigma2;
  const double m =
      std::sqrt(r) * std::sqrt(r + lam_v * lam_v + lam_nb * lam_nb - 2.0 * rho * lam_v * lam_nb);
  const double a1 = (lam_v - rho * lam_nb) / m;
  const double a2 = (lam_nb - rho * lam_v) / m;
  const double log_b = norm_logcdf(a1 * ev + a2 * enb) -
                       norm_logcdf(lam_nb * enb / (std::sqrt(sigma2) * std::sqrt(omega2_nb)));
  return log_b + normal_logpdf(y, mv + gamma * enb, var);
}

double skew_component_sample(double y_nb, double mv, double mnb, double lam_v, double lam_nb,
                             double sigma2, double rho, Rng& rng) {
  const double enb = y_nb - mnb;
  const double denom = sigma2 + lam_nb * lam_nb;
  const double z0 =
      sample_truncated_normal(enb * lam_nb / denom, std::sqrt(sigma2 / denom), 0.0, kInf, rng);
  const double mean = mv + lam_v * z0 + rho * (enb - lam_nb * z0);
  const double var = sigma2 * (1.0 - rho * rho);
  return var > 0.0 ? mean + std::sqrt(var) * std_normal(rng) : mean;
}

Copula component_copula(CopulaFamily family, double d, double phi) {
  return spatial_copula(family, d, phi);
}

double component_logdensity(const ModelSpec& spec, const Locus& v, const NeighborValue& nb,
                            double y) {
  return std::visit(
      Overloaded{
          [&](const GaussianNNMP& m) {
            return gaussian_component_logdensity(y, nb.value, m.mu, m.sigma2,
                                                 correlation(nb.distance, m.phi));
          },
          [&](const SkewGNNMP& m) {
            return skew_component_logdensity(y, nb.value, m.location, m.location, m.lambda,
                                             m.lambda, m.sigma2, correlation(nb.distance, m.phi));
          },
          [&](const ExtSkewGNNMP& m) {
            const auto [mv, lv] = ext_terms(m, v);
            const auto [mn, ln] = ext_terms(m, nb.locus);
            return skew_component_logdensity(y, nb.value, mv, mn, lv, ln, m.sigma2,
                                             correlation(nb.distance, m.phi));
          },
          [&](const CopulaNNMP& m) {
            const double lf = log_pdf(m.marginal, y);
            if (lf == -kInf) return -kInf;
            const auto c = component_copula(m.copula, nb.distance, m.phi);
            return copula_log_density(c, cdf(m.marginal, y), cdf(m.marginal, nb.value)) + lf;
          },
          [&](const LomaxNNMP& m) {
            require(nb.l < m.alpha.size(), ErrorCategory::Data,
                    "Lomax NNMP: neighbor index exceeds the shape vector");
            const double scale = nb.value + m.shift[nb.l];
            if (!(scale > 0.0)) return -kInf;
            return log_pdf(Lomax{scale, m.alpha[nb.l]}, y);
          },
      },
      spec);
}

double conditional_logdensity(const ModelSpec& spec, const Locus& v,
                              std::span<const double> weights,
                              std::span<const NeighborValue> neighbors, double y) {
  require(weights.size() == neighbors.size(), ErrorCategory::Data,
          "conditional_logdensity: weight and neighbor counts differ");
  std::vector<double> terms;
  terms.reserve(weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] <= 0.0) continue;
    terms.push_back(std::log(weights[l]) + component_logdensity(spec, v, neighbors[l], y));
  }
  return terms.empty() ? -kInf : log_sum_exp(terms);
}

double sample_component(const ModelSpec& spec, const Locus& v, const NeighborValue& nb,
                        Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const GaussianNNMP& m) {
            const double rho = correlation(nb.distance, m.phi);
            const double mean = (1.0 - rho) * m.mu + rho * nb.value;
            const double var = m.sigma2 * (1.0 - rho * rho);
            return var > 0.0 ? mean + std::sqrt(var) * std_normal(rng) : mean;
          },
          [&](const SkewGNNMP& m) {
            return skew_component_sample(nb.value, m.location, m.location, m.lambda, m.lambda,
                                         m.sigma2, correlation(nb.distance, m.phi), rng);
          },
          [&](const ExtSkewGNNMP& m) {
            const auto [mv, lv] = ext_terms(m, v);
            const auto [mn, ln] = ext_terms(m, nb.locus);
            return skew_component_sample(nb.value, mv, mn, lv, ln, m.sigma2,
                                         correlation(nb.distance, m.phi), rng);
          },
          [&](const CopulaNNMP& m) {
            const auto c = component_copula(m.copula, nb.distance, m.phi);
            const double t = inverse_conditional(c, uniform_open(rng), cdf(m.marginal, nb.value));
            return quantile(m.marginal, t);
          },
          [&](const LomaxNNMP& m) {
            require(nb.l < m.alpha.size(), ErrorCategory::Data,
                    "Lomax NNMP: neighbor index exceeds the shape vector");
            return sample(Lomax{nb.value + m.shift[nb.l], m.alpha[nb.l]}, rng);
          },
      },
      spec);
}

double sample_marginal(const ModelSpec& spec, const Locus& v, Rng& rng) {
  if (const auto* m = std::get_if<ExtSkewGNNMP>(&spec)) {
    const auto [mv, lv] = ext_terms(*m, v);
    return sample(SkewNormal{mv, lv * lv + m->sigma2, lv / std::sqrt(m->sigma2)}, rng);
  }
  const auto f = stationary_marginal(spec);
  require(f.has_value(), ErrorCategory::Unsupported,
          "sample_marginal: family has no stationary marginal");
  return sample(*f, rng);
}

double marginal_logdensity(const ModelSpec& spec, const Locus& v, double y) {
  if (const auto* m = std::get_if<ExtSkewGNNMP>(&spec)) {
    const auto [mv, lv] = ext_terms(*m, v);
    return log_pdf(SkewNormal{mv, lv * lv + m->sigma2, lv / std::sqrt(m->sigma2)}, y);
  }
  const auto f = stationary_marginal(spec);
  require(f.has_value(), ErrorCategory::Unsupported,
          "marginal_logdensity: family has no stationary marginal");
  return log_pdf(*f, y);
}

double stationarity_defect(const ModelSpec& spec, double distance,
                           std::span<const double> grid) {
  const auto f = stationary_marginal(spec);
  require(f.has_value() && !std::holds_alternative<LomaxNNMP>(spec), ErrorCategory::Unsupported,
          "stationarity_defect: family is not stationary");
  boost::math::quadrature::tanh_sinh<double> integrator;
  const Locus here{};
  double worst = 0.0;
  for (double u : grid) {
    // Integrate over the neighbor value on the probability scale: v = F^{-1}(p).
    auto integrand = [&](double p) {
      if (!(p > 0.0 && p < 1.0)) return 0.0;
      const NeighborValue nb{0, distance, quantile(*f, p), here};
      return std::exp(component_logdensity(spec, here, nb, u));
    };
    const double mixed = integrator.integrate(integrand, 0.0, 1.0, 1e-12);
    worst = std::max(worst, std::fabs(mixed - pdf(*f, u)));
  }
  return worst;
}

double GaussianMixture::log_density(const Eigen::VectorXd& z) const {
  std::vector<double> terms;
  terms.reserve(weights.size());
  const double k = static_cast<double>(z.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (weights[c] <= 0.0) continue;
    const Eigen::LLT<Eigen::MatrixXd> llt(covariances[c]);
    require(llt.info() == Eigen::Success, ErrorCategory::Numeric,
            "GaussianMixture: covariance is not positive definite");
    const Eigen::VectorXd r = llt.matrixL().solve(z - means[c]);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      logdet += 2.0 * std::log(llt.matrixL()(i, i));
    terms.push_back(std::log(weights[c]) - 0.5 * r.squaredNorm() - 0.5 * logdet -
                    k * kLogSqrt2Pi);
  }
  return log_sum_exp(terms);
}

GaussianMixture gaussian_joint_mixture(const GaussianNNMP& spec, const SiteSet& ref,
                                       const std::vector<std::vector<double>>& weights) {
  const std::size_t n = ref.size();
  require(weights.size() == n, ErrorCategory::Data,
          "gaussian_joint_mixture: one weight vector per site required");
  double count = 1.0;
  for (std::size_t i = 1; i < n; ++i) count *= static_cast<double>(ref.neighbors(i).size());
  if (n > 6) {
    std::ostringstream os;
    os << "gaussian_joint_mixture: n = " << n << " exceeds 6 (would need " << count
       << " mixture components)";
    fail(ErrorCategory::Unsupported, os.str());
  }
  for (std::size_t i = 1; i < n; ++i)
    require(weights[i].size() == ref.neighbors(i).size(), ErrorCategory::Data,
            "gaussian_joint_mixture: weight vector length must match neighbor count");

  GaussianMixture mix;
  std::vector<std::size_t> config(n, 0);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), spec.mu);
  while (true) {
    double w = 1.0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
    cov(0, 0) = spec.sigma2;
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t l = config[i];
      w *= weights[i][l];
      const auto j = static_cast<Eigen::Index>(ref.neighbors(i)[l]);
      const double rho = correlation(distance(ref.site(i), ref.site(j)), spec.phi);
      const auto ii = static_cast<Eigen::Index>(i);
      for (Eigen::Index k = 0; k < ii; ++k) {
        cov(ii, k) = rho * cov(j, k);
        cov(k, ii) = cov(ii, k);
      }
      cov(ii, ii) = spec.sigma2;
    }
    mix.weights.push_back(w);
    mix.means.push_back(mean);
    mix.covariances.push_back(std::move(cov));

    std::size_t i = 1;
    for (; i < n; ++i) {
      if (++config[i] < ref.neighbors(i).size()) break;
      config[i] = 0;
    }
    if (i >= n) break;
  }
  return mix;
}

double dag_joint_logdensity(const GaussianNNMP& spec, const SiteSet& ref,
                            const std::vector<std::vector<double>>& weights,
                            std::span<const double> z) {
  const ModelSpec s = spec;
  double total = normal_logpdf(z[0], spec.mu, spec.sigma2);
  std::vector<NeighborValue> nbs;
  for (std::size_t i = 1; i < ref.size(); ++i) {
    nbs.clear();
    const auto nb = ref.neighbors(i);
    for (std::size_t l = 0; l < nb.size(); ++l)
      nbs.push_back({l, distance(ref.site(i), ref.site(nb[l])), z[nb[l]], {}});
    total += conditional_logdensity(s, Locus{ref.site(i), {}, 0}, weights[i], nbs, z[i]);
  }
  return total;
}

Eigen::MatrixXd covariance_recursion(const GaussianNNMP& spec, const SiteSet& ref,
                                     const std::vector<std::vector<double>>& weights) {
  const auto n = static_cast<Eigen::Index>(ref.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  c(0, 0) = spec.sigma2;
  for (Eigen::Index i = 1; i < n; ++i) {
    const auto nb = ref.neighbors(static_cast<std::size_t>(i));
    const auto& w = weights[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < nb.size(); ++l) {
        const double rho = correlation(
            distance(ref.site(static_cast<std::size_t>(i)), ref.site(nb[l])), spec.phi);
        s += w[l] * rho * c(static_cast<Eigen::Index>(nb[l]), j);
      }
      c(i, j) = s;
      c(j, i) = s;
    }
    c(i, i) = spec.sigma2;
  }
  return c;
}

Eigen::VectorXd covariance_query_reference(const GaussianNNMP& spec,
                                           const Eigen::MatrixXd& ref_cov, const QuerySite& q,
                                           std::span<const double> weights) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ref_cov.rows());
  for (std::size_t l = 0; l < q.neighbors.size(); ++l) {
    const double rho = correlation(q.distances[l], spec.phi);
    out += weights[l] * rho * ref_cov.row(static_cast<Eigen::Index>(q.neighbors[l])).transpose();
  }
  return out;
}

double covariance_query_query(const GaussianNNMP& spec, const Eigen::MatrixXd& ref_cov,
                              const QuerySite& q1, std::span<const double> w1,
                              const QuerySite& q2, std::span<const double> w2) {
  if (q1.site == q2.site) return spec.sigma2;
  double s = 0.0;
  for (std::size_t a = 0; a < q1.neighbors.size(); ++a)
    for (std::size_t b = 0; b < q2.neighbors.size(); ++b)
      s += w1[a] * w2[b] * correlation(q1.distances[a], spec.phi) *
           correlation(q2.distances[b], spec.phi) *
           ref_cov(static_cast<Eigen::Index>(q1.neighbors[a]),
                   static_cast<Eigen::Index>(q2.neighbors[b]));
  return s;
}

TailBounds tail_lower_bounds(const ModelSpec& spec, std::span<const double> distances,
                             std::span<const double> weights) {
  require(distances.size() == weights.size(), ErrorCategory::Data,
          "tail_lower_bounds: distance and weight counts differ");
  TailBounds out;
  std::visit(
      Overloaded{
          [&](const GaussianNNMP&) {
            out.supported = true;
            out.p0 = 0.0;
            out.p1 = 0.0;
            out.note = "Gaussian components are tail independent";
          },
          [&](const SkewGNNMP&) { out.note = "tail coefficients unavailable for skew components"; },
          [&](const ExtSkewGNNMP&) {
            out.note = "tail coefficients unavailable for skew components";
          },
          [&](const CopulaNNMP& m) {
            double lo = 0.0;
            double hi = 0.0;
            for (std::size_t l = 0; l < weights.size(); ++l) {
              const auto tc = tail_coefficients(component_copula(m.copula, distances[l], m.phi));
              lo += weights[l] * tc.lower;
              hi += weights[l] * tc.upper;
            }
            out.supported = true;
            out.lower = lo / 2.0;
            out.upper = hi / 2.0;
            out.p0 = lo;
            out.p1 = hi;
          },
          [&](const LomaxNNMP& m) {
            require(weights.size() <= m.alpha.size(), ErrorCategory::Data,
                    "Lomax NNMP: more weights than shape parameters");
            double hi = 0.0;
            for (std::size_t l = 0; l < weights.size(); ++l)
              hi += weights[l] * std::pow(2.0, -m.alpha[l]);
            out.supported = true;
            out.upper = hi;
            out.note = "boundary masses not available for Lomax components";
          },
      },
      spec);
  return out;
}

}  // namespace nnmp
