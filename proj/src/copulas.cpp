#include "nnmp/copulas.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {

constexpr double kMaxRho = 1.0 - 1e-10;

double clamp_unit(double t) { return std::clamp(t, kCopulaEps, 1.0 - kCopulaEps); }

// log(1 + (u1/u2)^eta) given logs of u1, u2.
double log1p_ratio_pow(double lu1, double lu2, double eta) {
  return log_add_exp(0.0, eta * (lu1 - lu2));
}

double gumbel_root(double eta, double u2, double z) {
  const double c = u2 + (eta - 1.0) * std::log(u2) - std::log(z);
  auto h = [&](double y) { return y + (eta - 1.0) * std::log(y) - c; };
  double lo = u2;
  double hi = u2 - std::log(z) + 40.0 * (eta - 1.0);
  double hlo = h(lo);
  double hhi = h(hi);
  if (hlo > 0.0 || hhi < 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << "Gumbel inverse: root not bracketed (eta=" << eta << ", u2=" << u2 << ", z=" << z
       << ", h(lo)=" << hlo << ", h(hi)=" << hhi << ")";
    fail(ErrorCategory::Numeric, os.str());
  }
  if (hlo == 0.0) return lo;
  if (hhi == 0.0) return hi;
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = h(y);
    if (f == 0.0) return y;
    if (f < 0.0)
      lo = y;
    else
      hi = y;
    const double newton = y - f / (1.0 + (eta - 1.0) / y);
    const double next = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
    if (std::fabs(next - y) <= 1e-12 * std::max(1.0, y)) return next;
    y = next;
  }
  return y;
}

}  // namespace

Copula Copula::gaussian(double rho) {
  require(std::isfinite(rho) && rho > -1.0 && rho < 1.0, ErrorCategory::Config,
          "Gaussian copula: rho must lie in (-1, 1)");
  return {CopulaFamily::Gaussian, rho};
}

Copula Copula::gumbel(double eta) {
  require(!std::isnan(eta) && eta >= 1.0, ErrorCategory::Config,
          "Gumbel copula: eta must be >= 1");
  return {CopulaFamily::Gumbel, std::min(eta, kGumbelMax)};
}

std::string Copula::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << (family_ == CopulaFamily::Gaussian ? "Gaussian(rho=" : "Gumbel(eta=") << param_ << ")";
  return os.str();
}

double copula_log_density(const Copula& c, double t1, double t2) {
  t1 = clamp_unit(t1);
  t2 = clamp_unit(t2);
  if (c.family() == CopulaFamily::Gaussian) {
    const double rho = c.param();
    const double x1 = norm_quantile(t1);
    const double x2 = norm_quantile(t2);
    const double r2 = 1.0 - rho * rho;
    return -0.5 * std::log(r2) - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * r2);
  }
  const double eta = c.param();
  const double u1 = -std::log(t1);
  const double u2 = -std::log(t2);
  const double lu1 = std::log(u1);
  const double lu2 = std::log(u2);
  const double log_a = log_add_exp(eta * lu1, eta * lu2);
  const double a_root = std::exp(log_a / eta);
  return -a_root + std::log(a_root + eta - 1.0) + (1.0 / eta - 2.0) * log_a +
         (eta - 1.0) * (lu1 + lu2) + u1 + u2;
}

double copula_density(const Copula& c, double t1, double t2) {
  return std::exp(copula_log_density(c, t1, t2));
}

double copula_cdf(const Copula& c, double t1, double t2) {
  if (t1 <= 0.0 || t2 <= 0.0) return 0.0;
  if (t1 >= 1.0) return std::min(t2, 1.0);
  if (t2 >= 1.0) return t1;
  if (c.family() == CopulaFamily::Gaussian) {
    // C(t1, t2) = integral over s in (0, t2) of C_{1|2}(t1 | s).
    auto f = [&](double s) { return conditional_cdf(c, t1, s); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t2, 15, 1e-14);
  }
  const double eta = c.param();
  const double u1 = -std::log(t1);
  const double u2 = -std::log(t2);
  const double log_a = log_add_exp(eta * std::log(u1), eta * std::log(u2));
  return std::exp(-std::exp(log_a / eta));
}

double conditional_cdf(const Copula& c, double t1, double t2) {
  if (t1 <= 0.0) return 0.0;
  if (t1 >= 1.0) return 1.0;
  t1 = clamp_unit(t1);
  t2 = clamp_unit(t2);
  if (c.family() == CopulaFamily::Gaussian) {
    const double rho = c.param();
    return norm_cdf((norm_quantile(t1) - rho * norm_quantile(t2)) / std::sqrt(1.0 - rho * rho));
  }
  const double eta = c.param();
  const double u1 = -std::log(t1);
  const double u2 = -std::log(t2);
  const double lu1 = std::log(u1);
  const double lu2 = std::log(u2);
  const double log_a = log_add_exp(eta * lu1, eta * lu2);
  const double log_c = -std::exp(log_a / eta);
  const double v = log_c + (1.0 / eta - 1.0) * log1p_ratio_pow(lu1, lu2, eta) + u2;
  return std::min(1.0, std::exp(v));
}

double inverse_conditional(const Copula& c, double z, double t2) {
  z = clamp_unit(z);
  t2 = clamp_unit(t2);
  if (c.family() == CopulaFamily::Gaussian) {
    const double rho = c.param();
    return clamp_unit(
        norm_cdf(std::sqrt(1.0 - rho * rho) * norm_quantile(z) + rho * norm_quantile(t2)));
  }
  const double eta = c.param();
  const double u2 = -std::log(t2);
  if (eta == 1.0) return z;
  const double y = gumbel_root(eta, u2, z);
  // u1 = (y^eta - u2^eta)^(1/eta) = u2 * ((y/u2)^eta - 1)^(1/eta)
  const double e = std::expm1(eta * std::log(y / u2));
  const double u1 = e > 0.0 ? u2 * std::exp(std::log(e) / eta) : 0.0;
  return clamp_unit(std::exp(-u1));
}

TailCoefficients tail_coefficients(const Copula& c) {
  if (c.family() == CopulaFamily::Gaussian) return {0.0, 0.0};
  return {0.0, 2.0 - std::pow(2.0, 1.0 / c.param())};
}

Copula kendall_tau_link(CopulaFamily family, double tau) {
  if (family == CopulaFamily::Gaussian) {
    require(tau > -1.0 && tau < 1.0, ErrorCategory::Config,
            "kendall_tau_link: Gaussian tau must lie in (-1, 1)");
    return Copula::gaussian(std::sin(std::numbers::pi * tau / 2.0));
  }
  require(tau >= 0.0, ErrorCategory::Config,
          "kendall_tau_link: Gumbel copula cannot represent negative concordance");
  require(tau < 1.0, ErrorCategory::Config, "kendall_tau_link: tau must be < 1");
  return Copula::gumbel(std::min(1.0 / (1.0 - tau), kGumbelMax));
}

double kendall_tau(const Copula& c) {
  if (c.family() == CopulaFamily::Gaussian) return 2.0 / std::numbers::pi * std::asin(c.param());
  return 1.0 - 1.0 / c.param();
}

Copula spatial_copula(CopulaFamily family, double d, double phi) {
  const double k = std::exp(-d / phi);
  if (family == CopulaFamily::Gaussian) return Copula::gaussian(std::min(k, kMaxRho));
  const double denom = -std::expm1(-d / phi);
  return Copula::gumbel(denom > 1.0 / kGumbelMax ? 1.0 / denom : kGumbelMax);
}

std::pair<double, double> sample_copula(const Copula& c, Rng& rng) {
  const double t2 = uniform_open(rng);
  const double z = uniform_open(rng);
  return {inverse_conditional(c, z, t2), t2};
}

}  // namespace nnmp
