#include "nnmp/marginals.hpp"

#include <boost/math/distributions/skew_normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nnmp {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log of the standard normal survival function.
double log_sf(double x) {
  if (x < 35.0) return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(x) + std::log(series);
}

// Inverse survival function, Q in (0, 1).
double inv_sf(double q) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q); }

// Solves log_sf(x) = target for x >= start by Newton iteration. log_sf is
// concave, so iterates approach the root monotonically after the first step.
double inv_log_sf(double target, double start) {
  double x = start;
  for (int it = 0; it < 200; ++it) {
    const double f = log_sf(x) - target;
    const double hazard = std::exp(norm_logpdf(x) - log_sf(x));
    const double step = f / hazard;
    x += step;
    if (std::fabs(step) <= 1e-14 * std::max(1.0, std::fabs(x))) break;
  }
  return x;
}

// Quantile of the standard normal truncated to (a, b).
double tn_standard_quantile(double a, double b, double p) {
  if (b <= 0.0) return -tn_standard_quantile(-b, -a, 1.0 - p);
  double x;
  if (a >= 0.0) {
    const double la = log_sf(a);
    const double lb = b == kInf ? -kInf : log_sf(b);
    const double target = la + std::log1p(-p * -std::expm1(lb - la));
    x = target > -650.0 ? inv_sf(std::exp(target)) : inv_log_sf(target, a);
  } else {
    const double pa = norm_cdf(a);
    const double pb = norm_cdf(b);
    x = norm_quantile(pa + p * (pb - pa));
  }
  return std::clamp(x, a, b);
}

double tn_standard_log_mass(double a, double b) { return log_norm_interval(a, b); }

boost::math::skew_normal_distribution<double> boost_sn(const SkewNormal& s) {
  return {s.location, std::sqrt(s.scale2), s.shape};
}

double sn_cdf(const SkewNormal& s, double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return boost::math::cdf(boost_sn(s), x);
}

double sn_quantile(const SkewNormal& s, double q) {
  const double w = std::sqrt(s.scale2);
  double lo = s.location - w;
  double hi = s.location + w;
  while (sn_cdf(s, lo) > q) lo -= 2.0 * (hi - lo);
  while (sn_cdf(s, hi) < q) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 400 && hi - lo > 1e-10 * std::max(1.0, std::fabs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sn_cdf(s, mid) < q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Far tails by bisection on log x against the forward incomplete beta;
// ibeta_inv loses its way for q below about 1e-20.
double beta_quantile(double a, double b, double q) {
  if (q >= 1e-6 && q <= 1.0 - 1e-6) return boost::math::ibeta_inv(a, b, q);
  if (q > 0.5) return 1.0 - beta_quantile(b, a, 1.0 - q);
  const double target = std::log(q);
  double lo = std::log(std::numeric_limits<double>::denorm_min());
  double hi = 0.0;
  if (std::log(boost::math::ibeta(a, b, std::exp(lo))) >= target) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::log(boost::math::ibeta(a, b, std::exp(mid))) < target)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

double norm_pdf(double z) { return std::exp(norm_logpdf(z)); }
double norm_logpdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double norm_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double norm_logcdf(double z) { return log_sf(-z); }

double norm_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCategory::Numeric, "norm_quantile: p outside (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_norm_interval(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a > 0.0) return log_norm_interval(-b, -a);
  if (b <= 0.0) {
    const double lb = norm_logcdf(b);
    const double la = norm_logcdf(a);
    return lb + std::log1p(-std::exp(la - lb));
  }
  return std::log1p(-(norm_cdf(a) + norm_sf(b)));
}

void validate(const Marginal& m) {
  std::visit(
      Overloaded{
          [](const Normal& d) {
            require(std::isfinite(d.mean) && d.var > 0.0 && std::isfinite(d.var),
                    ErrorCategory::Config, "Normal: need finite mean and var > 0");
          },
          [](const TruncatedNormal& d) {
            require(std::isfinite(d.mean) && d.var > 0.0 && std::isfinite(d.var),
                    ErrorCategory::Config, "TruncatedNormal: need finite mean and var > 0");
            require(d.lower < d.upper, ErrorCategory::Config,
                    "TruncatedNormal: need lower < upper");
          },
          [](const SkewNormal& d) {
            require(std::isfinite(d.location) && std::isfinite(d.shape) && d.scale2 > 0.0 &&
                        std::isfinite(d.scale2),
                    ErrorCategory::Config, "SkewNormal: need finite parameters, scale2 > 0");
          },
          [](const Gamma& d) {
            require(d.shape > 0.0 && d.rate > 0.0 && std::isfinite(d.shape) &&
                        std::isfinite(d.rate),
                    ErrorCategory::Config, "Gamma: need shape > 0 and rate > 0");
          },
          [](const Beta& d) {
            require(d.a > 0.0 && d.b > 0.0 && std::isfinite(d.a) && std::isfinite(d.b),
                    ErrorCategory::Config, "Beta: need a > 0 and b > 0");
          },
          [](const Lomax& d) {
            require(d.scale > 0.0 && d.shape > 0.0 && std::isfinite(d.scale) &&
                        std::isfinite(d.shape),
                    ErrorCategory::Config, "Lomax: need scale > 0 and shape > 0");
          },
      },
      m);
}

std::string describe(const Marginal& m) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Normal& d) { os << "Normal(" << d.mean << ", " << d.var << ")"; },
                 [&](const TruncatedNormal& d) {
                   os << "TruncatedNormal(" << d.mean << ", " << d.var << "; " << d.lower
                      << ", " << d.upper << ")";
                 },
                 [&](const SkewNormal& d) {
                   os << "SkewNormal(" << d.location << ", " << d.scale2 << ", " << d.shape
                      << ")";
                 },
                 [&](const Gamma& d) { os << "Gamma(" << d.shape << ", " << d.rate << ")"; },
                 [&](const Beta& d) { os << "Beta(" << d.a << ", " << d.b << ")"; },
                 [&](const Lomax& d) { os << "Lomax(" << d.scale << ", " << d.shape << ")"; },
             },
             m);
  return os.str();
}

double log_pdf(const Marginal& m, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) {
            const double sd = std::sqrt(d.var);
            return norm_logpdf((x - d.mean) / sd) - std::log(sd);
          },
          [x](const TruncatedNormal& d) {
            if (x < d.lower || x > d.upper) return -kInf;
            const double sd = std::sqrt(d.var);
            return norm_logpdf((x - d.mean) / sd) - std::log(sd) -
                   tn_standard_log_mass((d.lower - d.mean) / sd, (d.upper - d.mean) / sd);
          },
          [x](const SkewNormal& d) {
            const double w = std::sqrt(d.scale2);
            const double z = (x - d.location) / w;
            return std::numbers::ln2 + norm_logpdf(z) - std::log(w) + norm_logcdf(d.shape * z);
          },
          [x](const Gamma& d) { return gamma_logpdf(x, d.shape, d.rate); },
          [x](const Beta& d) {
            if (x <= 0.0 || x >= 1.0) return -kInf;
            return (d.a - 1.0) * std::log(x) + (d.b - 1.0) * std::log1p(-x) -
                   (std::lgamma(d.a) + std::lgamma(d.b) - std::lgamma(d.a + d.b));
          },
          [x](const Lomax& d) {
            if (x < 0.0) return -kInf;
            return std::log(d.shape / d.scale) - (d.shape + 1.0) * std::log1p(x / d.scale);
          },
      },
      m);
}

double pdf(const Marginal& m, double x) { return std::exp(log_pdf(m, x)); }

double cdf(const Marginal& m, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) { return norm_cdf((x - d.mean) / std::sqrt(d.var)); },
          [x](const TruncatedNormal& d) {
            if (x <= d.lower) return 0.0;
            if (x >= d.upper) return 1.0;
            const double sd = std::sqrt(d.var);
            const double a = (d.lower - d.mean) / sd;
            const double b = (d.upper - d.mean) / sd;
            const double z = (x - d.mean) / sd;
            return std::exp(log_norm_interval(a, z) - log_norm_interval(a, b));
          },
          [x](const SkewNormal& d) { return sn_cdf(d, x); },
          [x](const Gamma& d) {
            if (x <= 0.0) return 0.0;
            if (x == kInf) return 1.0;
            return boost::math::gamma_p(d.shape, d.rate * x);
          },
          [x](const Beta& d) {
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(d.a, d.b, x);
          },
          [x](const Lomax& d) {
            if (x <= 0.0) return 0.0;
            return -std::expm1(-d.shape * std::log1p(x / d.scale));
          },
      },
      m);
}

double sf(const Marginal& m, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) { return norm_sf((x - d.mean) / std::sqrt(d.var)); },
          [x](const TruncatedNormal& d) {
            if (x <= d.lower) return 1.0;
            if (x >= d.upper) return 0.0;
            const double sd = std::sqrt(d.var);
            const double a = (d.lower - d.mean) / sd;
            const double b = (d.upper - d.mean) / sd;
            const double z = (x - d.mean) / sd;
            return std::exp(log_norm_interval(z, b) - log_norm_interval(a, b));
          },
          [x](const SkewNormal& d) { return 1.0 - sn_cdf(d, x); },
          [x](const Gamma& d) {
            if (x <= 0.0) return 1.0;
            if (x == kInf) return 0.0;
            return boost::math::gamma_q(d.shape, d.rate * x);
          },
          [x](const Beta& d) {
            if (x <= 0.0) return 1.0;
            if (x >= 1.0) return 0.0;
            return boost::math::ibetac(d.a, d.b, x);
          },
          [x](const Lomax& d) {
            if (x <= 0.0) return 1.0;
            return std::exp(-d.shape * std::log1p(x / d.scale));
          },
      },
      m);
}

double quantile(const Marginal& m, double q) {
  require(q > 0.0 && q < 1.0, ErrorCategory::Numeric, "quantile: q must lie in (0,1)");
  return std::visit(
      Overloaded{
          [q](const Normal& d) { return d.mean + std::sqrt(d.var) * norm_quantile(q); },
          [q](const TruncatedNormal& d) {
            const double sd = std::sqrt(d.var);
            return d.mean + sd * tn_standard_quantile((d.lower - d.mean) / sd,
                                                      (d.upper - d.mean) / sd, q);
          },
          [q](const SkewNormal& d) { return sn_quantile(d, q); },
          [q](const Gamma& d) { return boost::math::gamma_p_inv(d.shape, q) / d.rate; },
          [q](const Beta& d) { return beta_quantile(d.a, d.b, q); },
          [q](const Lomax& d) { return d.scale * std::expm1(-std::log1p(-q) / d.shape); },
      },
      m);
}

double sample(const Marginal& m, Rng& rng) {
  return std::visit(
      Overloaded{
          [&rng](const Normal& d) { return d.mean + std::sqrt(d.var) * std_normal(rng); },
          [&rng](const TruncatedNormal& d) {
            return sample_truncated_normal(d.mean, std::sqrt(d.var), d.lower, d.upper, rng);
          },
          [&rng](const SkewNormal& d) {
            const double delta = d.shape / std::sqrt(1.0 + d.shape * d.shape);
            const double z0 = std::fabs(std_normal(rng));
            const double z1 = std_normal(rng);
            return d.location +
                   std::sqrt(d.scale2) * (delta * z0 + std::sqrt(1.0 - delta * delta) * z1);
          },
          [&rng](const Gamma& d) { return sample_gamma(d.shape, d.rate, rng); },
          [&rng](const Beta& d) { return sample_beta(d.a, d.b, rng); },
          [&m, &rng](const Lomax&) { return quantile(m, uniform_open(rng)); },
      },
      m);
}

double support_lower(const Marginal& m) {
  return std::visit(Overloaded{
                        [](const Normal&) { return -kInf; },
                        [](const TruncatedNormal& d) { return d.lower; },
                        [](const SkewNormal&) { return -kInf; },
                        [](const Gamma&) { return 0.0; },
                        [](const Beta&) { return 0.0; },
                        [](const Lomax&) { return 0.0; },
                    },
                    m);
}

double support_upper(const Marginal& m) {
  return std::visit(Overloaded{
                        [](const Normal&) { return kInf; },
                        [](const TruncatedNormal& d) { return d.upper; },
                        [](const SkewNormal&) { return kInf; },
                        [](const Gamma&) { return kInf; },
                        [](const Beta&) { return 1.0; },
                        [](const Lomax&) { return kInf; },
                    },
                    m);
}

double mean(const Marginal& m) {
  return std::visit(
      Overloaded{
          [](const Normal& d) { return d.mean; },
          [](const TruncatedNormal& d) {
            const double sd = std::sqrt(d.var);
            const double a = (d.lower - d.mean) / sd;
            const double b = (d.upper - d.mean) / sd;
            const double pa = a == -kInf ? 0.0 : norm_pdf(a);
            const double pb = b == kInf ? 0.0 : norm_pdf(b);
            return d.mean + sd * (pa - pb) / std::exp(log_norm_interval(a, b));
          },
          [](const SkewNormal& d) {
            const double delta = d.shape / std::sqrt(1.0 + d.shape * d.shape);
            return d.location + std::sqrt(d.scale2) * delta * std::sqrt(2.0 / std::numbers::pi);
          },
          [](const Gamma& d) { return d.shape / d.rate; },
          [](const Beta& d) { return d.a / (d.a + d.b); },
          [](const Lomax& d) { return d.shape > 1.0 ? d.scale / (d.shape - 1.0) : kInf; },
      },
      m);
}

double sample_truncated_normal(double mean, double sd, double lower, double upper, Rng& rng) {
  require(lower < upper && sd > 0.0, ErrorCategory::Numeric,
          "sample_truncated_normal: need lower < upper and sd > 0");
  const double u = uniform_open(rng);
  return mean + sd * tn_standard_quantile((lower - mean) / sd, (upper - mean) / sd, u);
}

double sample_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng) / rate;
}

double sample_beta(double a, double b, Rng& rng) {
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

double sample_inv_gamma(double shape, double scale, Rng& rng) {
  return 1.0 / sample_gamma(shape, scale, rng);
}

double inv_gamma_logpdf(double x, double shape, double scale) {
  if (x <= 0.0) return -kInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (x < 0.0) return -kInf;
  if (x == 0.0) return shape < 1.0 ? kInf : (shape == 1.0 ? std::log(rate) : -kInf);
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

}  // namespace nnmp
