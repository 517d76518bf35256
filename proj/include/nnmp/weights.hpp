#pragma once

#include <array>
#include <span>
#include <vector>

#include "nnmp/common.hpp"
#include "nnmp/geo.hpp"

namespace nnmp {

/// Logit-Gaussian weight model: mu(s) = g0 + g1 s_x + g2 s_y, variance
/// kappa2, and cutoff-kernel range zeta.
struct WeightParams {
  std::array<double, 3> gamma{-1.5, 0.0, 0.0};
  double kappa2 = 1.0;
  double zeta = 0.1;
};

void validate(const WeightParams& p);

/// Cutoff points 0 = r_0 < ... < r_L = 1 and their logits. `rstar` has the
/// same length as `r` with rstar[0] = -inf and rstar[L] = +inf.
struct CutoffSet {
  std::vector<double> r;
  std::vector<double> rstar;
  bool fallback = false;  // kernel sum was not finite; equal increments used

  std::size_t bins() const { return r.size() - 1; }
};

/// Normalized kernel increments exp(-d_l / zeta) / sum_k exp(-d_k / zeta).
std::vector<double> kernel_increments(std::span<const double> distances, double zeta,
                                      bool* fallback = nullptr);

/// Cutoffs from neighbor distances (ascending) and kernel range zeta.
CutoffSet cutoffs(std::span<const double> distances, double zeta);

double weight_mean(const Site& s, const std::array<double, 3>& gamma);

enum class GMode { LogitGaussian, Uniform };

/// w_l = Phi((r*_l - mu)/kappa) - Phi((r*_{l-1} - mu)/kappa), renormalized.
/// GMode::Uniform returns the kernel increments themselves.
std::vector<double> weights_from_G(const CutoffSet& cut, double mu, double kappa2,
                                   GMode mode = GMode::LogitGaussian);

/// log(w_l) for a single bin (0-based l), without renormalization.
double log_bin_mass(const CutoffSet& cut, std::size_t l, double mu, double kappa2);

/// Same value as log_bin_mass(cutoffs(distances, zeta), l, mu, kappa2)
/// without building the cutoff set.
double log_bin_mass_at(std::span<const double> distances, double zeta, std::size_t l, double mu,
                       double kappa2);

/// 0-based bin of t among the logit cutoffs; bins are (r*_{l-1}, r*_l],
/// values below the first interior cutoff map to 0 and above the last to L-1.
std::size_t latent_bin(double t, const CutoffSet& cut);

/// Weights for a reference-set site.
std::vector<double> site_weights(const SiteSet& ref, std::size_t i, const WeightParams& p);

}  // namespace nnmp
