#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nnmp/geo.hpp"
#include "nnmp/mcmc.hpp"
#include "nnmp/models.hpp"
#include "nnmp/weights.hpp"

namespace nnmp {

struct FieldRealization {
  std::vector<Site> sites;
  std::vector<double> values;
  std::string generator;
  std::uint64_t seed = 0;
  std::map<std::string, double> truth;
};

/// Sequential draw over the DAG: site 0 from the marginal, then a component
/// label from the weights and a draw from that component. Values and sites
/// are in DAG order. `covariates` and `partition` are only read by the
/// extended skew model.
FieldRealization simulate_nnmp(const ModelSpec& spec, const SiteSet& ref, const WeightParams& w,
                               std::uint64_t seed, const RowMatrix& covariates = {},
                               std::span<const std::size_t> partition = {});

/// y = X beta + z + eps with z a mean-zero Gaussian NNMP; truth holds the
/// latent z in entries "z<i>" only when requested.
FieldRealization simulate_gnnmp_regression(const SiteSet& ref, const RowMatrix& covariates,
                                           std::span<const double> beta, double tau2,
                                           double sigma2, double phi, const WeightParams& w,
                                           std::uint64_t seed,
                                           std::vector<double>* latent = nullptr);

/// Zero-mean unit-variance Gaussian process with correlation exp(-d/phi).
/// Dense Cholesky up to `dense_limit` sites, otherwise a Vecchia
/// approximation on a random ordering with `vecchia_neighbors` neighbors.
class GaussianProcess {
 public:
  struct Options {
    std::size_t dense_limit = 6000;
    std::size_t vecchia_neighbors = 30;
    std::uint64_t ordering_seed = 0;
  };

  GaussianProcess(std::vector<Site> sites, double phi, Options opt);
  GaussianProcess(std::vector<Site> sites, double phi) : GaussianProcess(std::move(sites), phi, Options{}) {}

  bool dense() const { return dense_; }
  double jitter() const { return jitter_; }
  std::vector<double> draw(Rng& rng) const;

 private:
  std::vector<Site> sites_;
  double phi_;
  bool dense_ = true;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> nb_;
  std::vector<std::vector<double>> coef_;
  std::vector<double> sd_;
};

/// y = F^{-1}(T_nu(omega)) with omega a standard Student-t process built as
/// a Gaussian process divided by one sqrt(chi2_nu / nu) per field. A
/// non-finite nu gives the Gaussian-copula limit.
FieldRealization simulate_tcopula_gamma(std::span<const Site> sites, double nu, double phi_w,
                                        const Gamma& marginal, std::uint64_t seed);

/// y = sigma1 |omega1| + sigma2 omega2 with independent unit processes.
FieldRealization simulate_skew_gp(std::span<const Site> sites, double sigma1, double sigma2,
                                  double phi, std::uint64_t seed);

/// y = F^{-1}(Phi(omega)).
FieldRealization simulate_beta_copula(std::span<const Site> sites, const Beta& marginal,
                                      double phi, std::uint64_t seed);

/// 2 T_{nu+1}(-sqrt((1 + nu)(1 - rho0)/(1 + rho0))).
double chi_coefficient(double nu, double rho0);

/// Student-t cdf with nu degrees of freedom.
double student_t_cdf(double x, double nu);

/// Benchmark layout: an nx by ny grid on the unit square with `n_ref`
/// reference cells and `n_holdout` held-out cells chosen at random.
struct BenchmarkLayout {
  std::vector<Site> sites;
  std::vector<std::size_t> reference;  // indices into sites
  std::vector<std::size_t> holdout;
};

BenchmarkLayout benchmark_layout(std::size_t nx, std::size_t ny, std::size_t n_ref,
                                 std::size_t n_holdout, std::uint64_t seed);

}  // namespace nnmp
