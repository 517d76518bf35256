#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nnmp/common.hpp"
#include "nnmp/geo.hpp"
#include "nnmp/models.hpp"
#include "nnmp/weights.hpp"

namespace nnmp {

struct InvGammaPrior {
  double shape = 2.0;
  double scale = 1.0;
};

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct NormalPrior {
  double mean = 0.0;
  double var = 1.0;
};

/// Prior block shared by all samplers. A non-finite `var` or an empty
/// `beta_var` gives a flat prior.
struct Priors {
  Eigen::Vector3d gamma_mean{-1.5, 0.0, 0.0};
  Eigen::Matrix3d gamma_cov = 2.0 * Eigen::Matrix3d::Identity();
  InvGammaPrior kappa2{3.0, 1.0};
  InvGammaPrior zeta{3.0, 0.2};
  InvGammaPrior phi{3.0, 1.0 / 3.0};
  InvGammaPrior sigma2{2.0, 1.0};
  InvGammaPrior tau2{2.0, 0.1};
  NormalPrior mu{0.0, 100.0};
  NormalPrior lambda{0.0, 5.0};
  GammaPrior a{1.0, 1.0};
  GammaPrior b{1.0, 1.0};
  std::vector<double> beta_mean;
  std::vector<double> beta_var;
};

double inv_gamma_median(const InvGammaPrior& p);
double gamma_median(const GammaPrior& p);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Observations aligned with the reference set (DAG order). `covariates`
/// has one row per site; `partition` is empty unless the model uses it.
struct FitData {
  SiteSet ref;
  std::vector<double> y;
  RowMatrix covariates;
  std::vector<std::size_t> partition;

  std::size_t size() const { return y.size(); }
  Locus locus(std::size_t i) const;
};

void validate(const FitData& data, const ModelSpec& spec);

/// Initial state: parameters at prior medians (gamma at its prior mean).
ModelSpec prior_median_spec(const ModelSpec& family_template, const Priors& priors);
WeightParams prior_median_weights(const Priors& priors);

struct Schedule {
  std::size_t iterations = 30000;
  std::size_t burnin = 10000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  bool adapt = false;
  bool keep_latent = false;
  double default_step = 0.1;
  std::map<std::string, double> steps;  // per MH block
  std::function<void(std::size_t)> progress;

  double step(const std::string& block) const;
  std::size_t retained() const;
};

void validate(const Schedule& s);

/// Acceptance statistics of one Metropolis block.
struct BlockStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double step = 0.1;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// Thinned posterior draws.
struct ChainDraws {
  std::string family;
  bool regression = false;
  ModelSpec template_spec;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [draw][parameter]
  std::string latent_name;                  // "z", "t" or empty
  std::vector<std::vector<double>> latent;  // [draw][site] in DAG order
  std::vector<double> loglik;               // conditional log-likelihood per draw
  std::size_t iterations = 0;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  std::map<std::string, BlockStats> acceptance;

  std::size_t size() const { return values.size(); }
  std::size_t index_of(const std::string& name) const;
  double value(std::size_t draw, const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

/// Parameter names and packing for response-level model families.
std::vector<std::string> theta_names(const ModelSpec& spec);
std::vector<double> pack_theta(const ModelSpec& spec);
ModelSpec unpack_theta(const ModelSpec& template_spec, std::span<const double> values);

ModelSpec spec_at(const ChainDraws& d, std::size_t draw);
WeightParams weights_at(const ChainDraws& d, std::size_t draw);

/// Latent weight variables t_i with configurations l_i = latent_bin(t_i) for
/// the sites i >= start, plus the conjugate and Metropolis updates of
/// (gamma, kappa2, zeta). Site i uses min(i, L) neighbors.
class WeightBlock {
 public:
  WeightBlock(const SiteSet& ref, std::size_t start, const WeightParams& init,
              const Priors& priors);

  std::size_t start() const { return start_; }
  std::size_t size() const { return n_; }
  std::size_t bins(std::size_t i) const { return cut_[i].bins(); }
  const WeightParams& params() const { return p_; }
  double t(std::size_t i) const { return t_[i]; }
  std::size_t ell(std::size_t i) const { return ell_[i]; }
  const std::vector<std::size_t>& labels() const { return ell_; }
  const CutoffSet& cutoffs_at(std::size_t i) const { return cut_[i]; }
  double mu(std::size_t i) const { return mu_[i]; }
  std::vector<double> weights(std::size_t i) const;

  /// Design matrix D with rows (1, s_x, s_y) for i >= start.
  Eigen::MatrixXd design() const;

  /// Samples l_i with probability proportional to w_l f_l, then t_i from
  /// the normal truncated to bin l_i. logf(i, l) gives log f_{i,l}.
  void update_t(const std::function<double(std::size_t, std::size_t)>& logf, Rng& rng);
  void update_gamma(Rng& rng);
  void update_kappa2(Rng& rng);
  /// Log-scale random-walk step on zeta with t marginalized, then a
  /// redraw of each t_i within its bin. Returns true on acceptance.
  bool update_zeta(double step, Rng& rng);

  /// log prior(zeta) + sum_i log(G(r_{l_i}) - G(r_{l_i - 1})) at zeta.
  double zeta_log_target(double zeta) const;

  void set_params(const WeightParams& p);
  void set_t(std::size_t i, double t);
  void set_ell(std::size_t i, std::size_t l);

  Priors& priors() { return priors_; }

 private:
  void refresh_mu();
  void refresh_cutoffs();

  const SiteSet* ref_;
  std::size_t start_;
  std::size_t n_;
  WeightParams p_;
  Priors priors_;
  std::vector<CutoffSet> cut_;
  std::vector<double> mu_;
  std::vector<double> t_;
  std::vector<std::size_t> ell_;
};

/// Component log-densities for the response-level families with per-site
/// transforms cached for one parameter value.
class ComponentCache {
 public:
  /// With `labels`, only components (i, labels[i]) are available. Per-site
  /// transforms are taken from `reuse` when its marginal matches.
  ComponentCache(const FitData& data, const ModelSpec& spec,
                 const std::vector<std::size_t>* labels = nullptr,
                 const ComponentCache* reuse = nullptr);
  double log_comp(std::size_t i, std::size_t l) const;

 private:
  struct Transforms {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
  };
  const FitData* data_;
  ModelSpec spec_;
  std::size_t L_;
  std::vector<double> rho_;  // [i * L + l]
  std::shared_ptr<const Transforms> tr_;
};

/// Sum over i >= L of log sum_l w_il f_il.
double conditional_loglik(const FitData& data, const ModelSpec& spec, const WeightParams& w);

/// Data-augmentation sampler for response-level NNMP families (Gaussian,
/// skew, extended skew, copula), conditioning on the first L sites.
class NnmpSampler {
 public:
  NnmpSampler(const FitData& data, const ModelSpec& init, const WeightParams& winit,
              const Priors& priors, const Schedule& schedule);

  const ModelSpec& spec() const { return spec_; }
  WeightBlock& weights() { return wb_; }
  const WeightBlock& weights() const { return wb_; }

  void update_t(Rng& rng);
  void update_gamma_kappa(Rng& rng);
  void update_zeta(Rng& rng);
  void update_theta(Rng& rng);
  void scan(Rng& rng);

  /// log prior(theta) + sum_{i >= L} log f_{i, l_i}.
  double theta_log_target(const ModelSpec& spec) const;
  double log_likelihood() const;
  void set_spec(const ModelSpec& spec) {
    spec_ = spec;
    cur_valid_ = false;
  }
  void set_adapting(bool on) { adapting_ = on; }
  void set_iteration(std::size_t it) { iteration_ = it; }
  const std::map<std::string, BlockStats>& stats() const { return stats_; }
  BlockStats& block(const std::string& name);
  const std::vector<std::size_t>& labels() const { return wb_.labels(); }

 private:
  bool metropolis(const std::string& name, double log_ratio, Rng& rng);
  void mh_positive(const std::string& name, double& value, Rng& rng);
  void mh_real(const std::string& name, double& value, Rng& rng);
  double theta_log_prior(const ModelSpec& spec) const;
  void gaussian_conjugate(Rng& rng);
  double current_target();

  mutable std::shared_ptr<const ComponentCache> last_cache_;
  double cur_target_ = 0.0;
  bool cur_valid_ = false;
  std::vector<std::size_t> cur_labels_;

  const FitData* data_;
  ModelSpec spec_;
  Priors priors_;
  WeightBlock wb_;
  std::map<std::string, BlockStats> stats_;
  bool adapting_ = false;
  std::size_t iteration_ = 0;
};

ChainDraws run_chain(const FitData& data, const ModelSpec& init, const WeightParams& winit,
                     const Priors& priors, const Schedule& schedule);

/// Effective sample size by Geyer's initial positive sequence.
double effective_sample_size(std::span<const double> x);

}  // namespace nnmp
