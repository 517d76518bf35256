#pragma once

#include <vector>

#include "nnmp/mcmc.hpp"

namespace nnmp {

/// y(v) = x(v)'beta + z(v) + eps(v), eps ~ N(0, tau2), with z a mean-zero
/// Gaussian NNMP with variance sigma2 and range phi.
struct RegressionState {
  std::vector<double> beta;
  double tau2 = 0.1;
  double sigma2 = 1.0;
  double phi = 0.1;
  std::vector<double> z;  // DAG order
};

RegressionState prior_median_regression(const FitData& data, const Priors& priors);

/// Sampler for the regression model. Configuration variables and latent
/// weights exist for sites i >= 2 (0-based); site 1 has a single
/// neighbor and site 0 none.
class RegressionSampler {
 public:
  RegressionSampler(const FitData& data, const RegressionState& init, const WeightParams& winit,
                    const Priors& priors, const Schedule& schedule);

  const RegressionState& state() const { return s_; }
  WeightBlock& weights() { return wb_; }
  const WeightBlock& weights() const { return wb_; }

  void update_t(Rng& rng);
  void update_gamma_kappa(Rng& rng);
  void update_zeta(Rng& rng);
  void update_beta(Rng& rng);
  void update_tau2(Rng& rng);
  void update_sigma2(Rng& rng);
  void update_phi(Rng& rng);
  void update_z(Rng& rng);
  void scan(Rng& rng);

  /// Neighbor of site i under the current configuration (none for i = 0).
  std::size_t parent(std::size_t i) const;
  double parent_rho(std::size_t i, double phi) const;

  /// log prior(phi) + sum_{i >= 1} log N(z_i | rho z_parent, sigma2 (1 - rho^2)).
  double phi_log_target(double phi) const;
  /// sum_i log N(y_i | x_i'beta + z_i, tau2).
  double log_likelihood() const;

  void set_state(const RegressionState& s) { s_ = s; }
  void set_adapting(bool on) { adapting_ = on; }
  void set_iteration(std::size_t it) { iteration_ = it; }
  const std::map<std::string, BlockStats>& stats() const { return stats_; }
  BlockStats& block(const std::string& name) { return stats_[name]; }

 private:
  bool metropolis(const std::string& name, double log_ratio, Rng& rng);

  const FitData* data_;
  RegressionState s_;
  Priors priors_;
  WeightBlock wb_;
  std::map<std::string, BlockStats> stats_;
  bool adapting_ = false;
  std::size_t iteration_ = 0;
};

std::vector<std::string> regression_names(std::size_t p);

/// Retains beta, tau2, sigma2, phi, gamma, kappa2, zeta and z per draw.
ChainDraws run_regression(const FitData& data, const RegressionState& init,
                          const WeightParams& winit, const Priors& priors,
                          const Schedule& schedule);

}  // namespace nnmp
