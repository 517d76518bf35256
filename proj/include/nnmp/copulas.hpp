#pragma once

#include <string>
#include <utility>

#include "nnmp/common.hpp"

namespace nnmp {

enum class CopulaFamily { Gaussian, Gumbel };

/// Arguments are clamped into [kCopulaEps, 1 - kCopulaEps] before any
/// log or normal-quantile transform.
constexpr double kCopulaEps = 1e-12;
constexpr double kGumbelMax = 50.0;

/// Bivariate copula with one dependence parameter: the correlation rho for
/// the Gaussian family, eta for Gumbel. Construction enforces rho in (-1, 1)
/// and eta >= 1; eta above 50 is capped to 50.
class Copula {
 public:
  static Copula gaussian(double rho);
  static Copula gumbel(double eta);

  CopulaFamily family() const { return family_; }
  double param() const { return param_; }
  std::string describe() const;

 private:
  Copula(CopulaFamily f, double p) : family_(f), param_(p) {}
  CopulaFamily family_;
  double param_;
};

struct TailCoefficients {
  double lower = 0.0;
  double upper = 0.0;
};

double copula_cdf(const Copula& c, double t1, double t2);
double copula_density(const Copula& c, double t1, double t2);
double copula_log_density(const Copula& c, double t1, double t2);

/// C_{1|2}(t1 | t2) = dC(t1, t2) / dt2.
double conditional_cdf(const Copula& c, double t1, double t2);

/// Solves conditional_cdf(c, t1, t2) = z for t1.
double inverse_conditional(const Copula& c, double z, double t2);

TailCoefficients tail_coefficients(const Copula& c);

/// Copula with Kendall's tau equal to `tau`. Gumbel: eta = min(1/(1-tau), 50),
/// tau must be in [0, 1). Gaussian: rho = sin(pi tau / 2), tau in (-1, 1).
Copula kendall_tau_link(CopulaFamily family, double tau);
double kendall_tau(const Copula& c);

/// Spatial parameter at distance d with range phi: Gaussian rho = exp(-d/phi)
/// and Gumbel eta = min(1 / (1 - exp(-d/phi)), 50). At d = 0 the Gaussian
/// correlation is held just below 1.
Copula spatial_copula(CopulaFamily family, double d, double phi);

/// Draws (t1, t2) by t2 ~ U(0,1), t1 = inverse_conditional(U(0,1) | t2).
std::pair<double, double> sample_copula(const Copula& c, Rng& rng);

}  // namespace nnmp
