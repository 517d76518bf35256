#pragma once

#include <string>
#include <variant>

#include "nnmp/common.hpp"

namespace nnmp {

/// Standard normal density, cdf, survival and quantile.
double norm_pdf(double z);
double norm_logpdf(double z);
double norm_cdf(double z);
double norm_sf(double z);
double norm_logcdf(double z);
double norm_quantile(double p);

/// log(Phi(b) - Phi(a)) for a <= b, accurate in both tails.
double log_norm_interval(double a, double b);

struct Normal {
  double mean = 0.0;
  double var = 1.0;
};

/// Normal(mean, var) truncated to (lower, upper); either bound may be infinite.
struct TruncatedNormal {
  double mean = 0.0;
  double var = 1.0;
  double lower = -kInf;
  double upper = kInf;
};

/// Skew-normal SN(location, scale2, shape) with density
/// 2/omega * phi((x-xi)/omega) * Phi(shape*(x-xi)/omega).
struct SkewNormal {
  double location = 0.0;
  double scale2 = 1.0;
  double shape = 0.0;
};

/// Gamma with shape and RATE: mean = shape / rate, so Gamma{2, 2} has mean 1.
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};

struct Beta {
  double a = 1.0;
  double b = 1.0;
};

/// Lomax density alpha/phi * (1 + x/phi)^-(alpha+1) on x > 0.
struct Lomax {
  double scale = 1.0;  // phi
  double shape = 1.0;  // alpha
};

using Marginal = std::variant<Normal, TruncatedNormal, SkewNormal, Gamma, Beta, Lomax>;

/// Throws Error(Config) if parameters violate the family's invariants.
void validate(const Marginal& m);

std::string describe(const Marginal& m);

double pdf(const Marginal& m, double x);
double log_pdf(const Marginal& m, double x);
double cdf(const Marginal& m, double x);
/// Survival function 1 - cdf, evaluated without cancellation where possible.
double sf(const Marginal& m, double x);
/// Inverse cdf; q must lie in (0, 1).
double quantile(const Marginal& m, double q);
double sample(const Marginal& m, Rng& rng);

/// Support bounds (may be infinite).
double support_lower(const Marginal& m);
double support_upper(const Marginal& m);

double mean(const Marginal& m);

/// Truncated-normal draw by inverse cdf. Bounds far in one tail are
/// handled on the survival scale, and beyond the range of double
/// precision by an exponential tail expansion.
double sample_truncated_normal(double mean, double sd, double lower, double upper, Rng& rng);

double sample_gamma(double shape, double rate, Rng& rng);
double sample_beta(double a, double b, Rng& rng);
double sample_inv_gamma(double shape, double scale, Rng& rng);

/// log of the inverse-gamma density IG(x | shape, scale).
double inv_gamma_logpdf(double x, double shape, double scale);
/// log of the gamma density with shape/rate.
double gamma_logpdf(double x, double shape, double rate);

}  // namespace nnmp
