#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nnmp/common.hpp"
#include "nnmp/copulas.hpp"
#include "nnmp/geo.hpp"
#include "nnmp/marginals.hpp"

namespace nnmp {

/// Gaussian NNMP: component l is N((1-rho) mu + rho y_nb, sigma2 (1-rho^2)),
/// rho = exp(-d/phi).
struct GaussianNNMP {
  double mu = 0.0;
  double sigma2 = 1.0;
  double phi = 0.1;
};

/// Stationary skew-Gaussian NNMP with marginal SN(location, lambda^2 + sigma2, lambda/sigma).
struct SkewGNNMP {
  double lambda = 0.0;
  double sigma2 = 1.0;
  double phi = 0.1;
  double location = 0.0;
};

/// Extended skew-Gaussian NNMP: mean x'beta and skewness lambda[k] on partition k.
struct ExtSkewGNNMP {
  std::vector<double> beta;
  std::vector<double> lambda;
  double sigma2 = 1.0;
  double phi = 0.1;
};

/// Copula NNMP with a Gamma or Beta stationary marginal. The copula of
/// component l is Gaussian with rho = exp(-d/phi) or Gumbel with
/// eta = min(1/(1 - exp(-d/phi)), 50).
struct CopulaNNMP {
  CopulaFamily copula = CopulaFamily::Gumbel;
  double phi = 0.1;
  Marginal marginal = Gamma{2.0, 2.0};
};

/// Lomax NNMP: component l is Lomax(scale = y_nb + shift[l], shape = alpha[l]).
struct LomaxNNMP {
  std::vector<double> shift;
  std::vector<double> alpha;
};

using ModelSpec = std::variant<GaussianNNMP, SkewGNNMP, ExtSkewGNNMP, CopulaNNMP, LomaxNNMP>;

void validate(const ModelSpec& spec);
std::string family_name(const ModelSpec& spec);

/// Stationary marginal f_Z, or nullopt when the family has none.
std::optional<Marginal> stationary_marginal(const ModelSpec& spec);

/// exp(-d/phi).
double correlation(double d, double phi);

/// Location-specific inputs: coordinates, covariate row and partition label.
/// Only the extended skew model reads covariates and partition.
struct Locus {
  Site site;
  std::span<const double> covariates;
  std::size_t partition = 0;
};

/// Neighbor l of a location, at the given distance, with its observed value.
struct NeighborValue {
  std::size_t l = 0;
  double distance = 0.0;
  double value = 0.0;
  Locus locus;
};

double gaussian_component_logdensity(double y, double y_nb, double mu, double sigma2, double rho);

/// Skew-normal transition density with marginalized latent z0. mv and mnb
/// are the location terms at the site and its neighbor.
double skew_component_logdensity(double y, double y_nb, double mv, double mnb, double lam_v,
                                 double lam_nb, double sigma2, double rho);

/// Draw from the same transition through the truncated-normal latent z0.
double skew_component_sample(double y_nb, double mv, double mnb, double lam_v, double lam_nb,
                             double sigma2, double rho, Rng& rng);

/// Copula at distance d with range phi.
Copula component_copula(CopulaFamily family, double d, double phi);

double component_logdensity(const ModelSpec& spec, const Locus& v, const NeighborValue& nb,
                            double y);

/// log sum_l w_l f_l(y | y_nb(l)).
double conditional_logdensity(const ModelSpec& spec, const Locus& v,
                              std::span<const double> weights,
                              std::span<const NeighborValue> neighbors, double y);

double sample_component(const ModelSpec& spec, const Locus& v, const NeighborValue& nb, Rng& rng);

/// Draw from the marginal at v (the first site of the DAG).
double sample_marginal(const ModelSpec& spec, const Locus& v, Rng& rng);
double marginal_logdensity(const ModelSpec& spec, const Locus& v, double y);

/// sup over u in grid of |integral f_l(u | v) f_Z(v) dv - f_Z(u)|, for the
/// component at distance d.
double stationarity_defect(const ModelSpec& spec, double distance, std::span<const double> grid);

/// Explicit mixture of multivariate normals.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  double log_density(const Eigen::VectorXd& z) const;
};

/// Joint density of a Gaussian NNMP over a small reference set as a mixture
/// over all neighbor configurations. weights[i] holds the weights of site i
/// (empty for site 0). Rejects n > 6.
GaussianMixture gaussian_joint_mixture(const GaussianNNMP& spec, const SiteSet& ref,
                                       const std::vector<std::vector<double>>& weights);

/// log p(z_1) + sum_i log p(z_i | z_Ne(i)) over the whole reference set.
double dag_joint_logdensity(const GaussianNNMP& spec, const SiteSet& ref,
                            const std::vector<std::vector<double>>& weights,
                            std::span<const double> z);

/// E(Z_i Z_j) over reference sites for a mean-zero stationary Gaussian NNMP.
Eigen::MatrixXd covariance_recursion(const GaussianNNMP& spec, const SiteSet& ref,
                                     const std::vector<std::vector<double>>& weights);

/// E(Z(q) Z_j) for all reference j.
Eigen::VectorXd covariance_query_reference(const GaussianNNMP& spec, const Eigen::MatrixXd& ref_cov,
                                           const QuerySite& q, std::span<const double> weights);

/// E(Z(q1) Z(q2)) for two non-reference locations, which are conditionally
/// independent given the reference set.
double covariance_query_query(const GaussianNNMP& spec, const Eigen::MatrixXd& ref_cov,
                              const QuerySite& q1, std::span<const double> w1,
                              const QuerySite& q2, std::span<const double> w2);

struct TailBounds {
  bool supported = false;
  double lower = 0.0;  // bound for the lower tail coefficient
  double upper = 0.0;  // bound for the upper tail coefficient
  std::optional<double> p0;  // bound for the boundary mass at q = 0
  std::optional<double> p1;  // bound for the boundary mass at q = 1
  std::string note;
};

/// Lower bounds on the tail dependence coefficients at a location with the
/// given neighbor distances and weights.
TailBounds tail_lower_bounds(const ModelSpec& spec, std::span<const double> distances,
                             std::span<const double> weights);

}  // namespace nnmp
