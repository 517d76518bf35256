#include "nnmp/common.hpp"

#include <algorithm>

#include <boost/math/special_functions/erf.hpp>

namespace nnmp {

double std_normal(Rng& rng) {
  // Inverse-cdf transform: stateless, so draws never depend on how a
  // distribution object was cached between calls.
  const double u = uniform_open(rng);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double log_sum_exp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf || m == kInf) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t sample_log_categorical(std::span<const double> logp, Rng& rng) {
  const double m = *std::max_element(logp.begin(), logp.end());
  require(m > -kInf, ErrorCategory::Numeric,
          "sample_log_categorical: every log-probability is -inf");
  std::vector<double> p(logp.size());
  for (std::size_t i = 0; i < logp.size(); ++i) p[i] = std::exp(logp[i] - m);
  return sample_categorical(p, rng);
}

std::size_t sample_categorical(std::span<const double> p, Rng& rng) {
  double total = 0.0;
  for (double v : p) total += v;
  require(total > 0.0 && std::isfinite(total), ErrorCategory::Numeric,
          "sample_categorical: probabilities do not have positive finite mass");
  const double u = uniform_open(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding left u just above the running sum; return the last positive bin.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

}  // namespace nnmp
