#include "nnmp/weights.hpp"

#include <algorithm>
#include <cmath>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {
constexpr double kCutClamp = 1e-10;
}

void validate(const WeightParams& p) {
  for (double g : p.gamma)
    require(std::isfinite(g), ErrorCategory::Config, "weights: gamma must be finite");
  require(p.kappa2 > 0.0 && std::isfinite(p.kappa2), ErrorCategory::Config,
          "weights: kappa2 must be > 0");
  require(p.zeta > 0.0 && std::isfinite(p.zeta), ErrorCategory::Config,
          "weights: zeta must be > 0");
}

std::vector<double> kernel_increments(std::span<const double> distances, double zeta,
                                      bool* fallback) {
  require(!distances.empty(), ErrorCategory::Data, "cutoffs: at least one neighbor required");
  const double dmin = *std::min_element(distances.begin(), distances.end());
  std::vector<double> k(distances.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < k.size(); ++l) {
    k[l] = std::exp(-(distances[l] - dmin) / zeta);
    sum += k[l];
  }
  const bool bad = !(std::isfinite(sum) && sum > 0.0);
  if (fallback) *fallback = bad;
  for (auto& v : k) v = bad ? 1.0 / static_cast<double>(k.size()) : v / sum;
  return k;
}

CutoffSet cutoffs(std::span<const double> distances, double zeta) {
  CutoffSet c;
  const auto inc = kernel_increments(distances, zeta, &c.fallback);
  const std::size_t L = inc.size();
  c.r.resize(L + 1);
  c.rstar.resize(L + 1);
  c.r[0] = 0.0;
  double acc = 0.0;
  for (std::size_t l = 1; l < L; ++l) {
    acc += inc[l - 1];
    c.r[l] = acc;
  }
  c.r[L] = 1.0;
  c.rstar[0] = -kInf;
  c.rstar[L] = kInf;
  for (std::size_t l = 1; l < L; ++l) {
    const double r = std::clamp(c.r[l], kCutClamp, 1.0 - kCutClamp);
    c.rstar[l] = std::log(r) - std::log1p(-r);
  }
  return c;
}

double weight_mean(const Site& s, const std::array<double, 3>& gamma) {
  return gamma[0] + gamma[1] * s.x + gamma[2] * s.y;
}

double log_bin_mass(const CutoffSet& cut, std::size_t l, double mu, double kappa2) {
  const double k = std::sqrt(kappa2);
  return log_norm_interval((cut.rstar[l] - mu) / k, (cut.rstar[l + 1] - mu) / k);
}

double log_bin_mass_at(std::span<const double> distances, double zeta, std::size_t l, double mu,
                       double kappa2) {
  const std::size_t L = distances.size();
  const double dmin = *std::min_element(distances.begin(), distances.end());
  double sum = 0.0;
  for (double d : distances) sum += std::exp(-(d - dmin) / zeta);
  const bool bad = !(std::isfinite(sum) && sum > 0.0);
  double lo = -kInf, hi = kInf, acc = 0.0;
  for (std::size_t k = 1; k <= l + 1 && k < L; ++k) {
    acc += bad ? 1.0 / static_cast<double>(L) : std::exp(-(distances[k - 1] - dmin) / zeta) / sum;
    if (k < l) continue;
    const double r = std::clamp(acc, kCutClamp, 1.0 - kCutClamp);
    (k == l ? lo : hi) = std::log(r) - std::log1p(-r);
  }
  const double s = std::sqrt(kappa2);
  return log_norm_interval((lo - mu) / s, (hi - mu) / s);
}

std::vector<double> weights_from_G(const CutoffSet& cut, double mu, double kappa2, GMode mode) {
  const std::size_t L = cut.bins();
  std::vector<double> w(L);
  if (mode == GMode::Uniform) {
    for (std::size_t l = 0; l < L; ++l) w[l] = cut.r[l + 1] - cut.r[l];
  } else {
    for (std::size_t l = 0; l < L; ++l) w[l] = std::exp(log_bin_mass(cut, l, mu, kappa2));
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  if (sum > 0.0)
    for (auto& v : w) v /= sum;
  return w;
}

std::size_t latent_bin(double t, const CutoffSet& cut) {
  const std::size_t L = cut.bins();
  // First interior cutoff >= t gives the bin whose upper end is closed.
  const auto first = cut.rstar.begin() + 1;
  const auto last = cut.rstar.begin() + static_cast<std::ptrdiff_t>(L);
  const auto it = std::lower_bound(first, last, t);
  return static_cast<std::size_t>(it - first);
}

std::vector<double> site_weights(const SiteSet& ref, std::size_t i, const WeightParams& p) {
  const auto cut = cutoffs(ref.neighbor_distances(i), p.zeta);
  return weights_from_G(cut, weight_mean(ref.site(i), p.gamma), p.kappa2);
}

}  // namespace nnmp
