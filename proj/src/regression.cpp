#include "nnmp/regression.hpp"

#include <algorithm>
#include <cmath>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {

constexpr double kMaxRho = 1.0 - 1e-10;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTargetAccept = 0.35;

double normal_logpdf(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * r * r / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

double fitted(const FitData& d, std::span<const double> beta, std::size_t i) {
  double m = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k)
    m += d.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * beta[k];
  return m;
}

}  // namespace

RegressionState prior_median_regression(const FitData& data, const Priors& pr) {
  RegressionState s;
  const auto p = static_cast<std::size_t>(data.covariates.cols());
  s.beta.assign(p, 0.0);
  if (p > 0) {
    // Least-squares start for coefficients with a flat prior.
    const Eigen::Map<const Eigen::VectorXd> y(data.y.data(), static_cast<Eigen::Index>(data.size()));
    const Eigen::MatrixXd X = data.covariates;
    const Eigen::VectorXd ols = X.colPivHouseholderQr().solve(y);
    for (std::size_t k = 0; k < p; ++k) {
      const bool flat = pr.beta_var.empty() || !std::isfinite(pr.beta_var[k]);
      s.beta[k] = flat ? ols[static_cast<Eigen::Index>(k)] : pr.beta_mean[k];
    }
  }
  s.tau2 = inv_gamma_median(pr.tau2);
  s.sigma2 = inv_gamma_median(pr.sigma2);
  s.phi = inv_gamma_median(pr.phi);
  s.z.assign(data.size(), 0.0);
  return s;
}

RegressionSampler::RegressionSampler(const FitData& data, const RegressionState& init,
                                     const WeightParams& winit, const Priors& priors,
                                     const Schedule& schedule)
    : data_(&data), s_(init), priors_(priors), wb_(data.ref, 2, winit, priors) {
  require(data.size() == data.ref.size() && data.size() >= 3, ErrorCategory::Data,
          "regression: need at least 3 reference sites with one value each");
  require(static_cast<std::size_t>(data.covariates.rows()) == data.size() &&
              static_cast<std::size_t>(data.covariates.cols()) == init.beta.size(),
          ErrorCategory::Data, "regression: covariate matrix does not match beta");
  require(init.z.size() == data.size(), ErrorCategory::Data,
          "regression: latent effect vector has the wrong length");
  require(priors.beta_var.empty() || priors.beta_var.size() == init.beta.size(),
          ErrorCategory::Config, "regression: beta prior has the wrong length");
  for (double v : data.y)
    require(std::isfinite(v), ErrorCategory::Data, "regression: non-finite response value");
  stats_["phi"].step = schedule.step("phi");
  stats_["zeta"].step = schedule.step("zeta");
}

std::size_t RegressionSampler::parent(std::size_t i) const {
  if (i == 0) return 0;
  const auto nb = data_->ref.neighbors(i);
  return i == 1 ? nb[0] : nb[wb_.ell(i)];
}

double RegressionSampler::parent_rho(std::size_t i, double phi) const {
  if (i == 0) return 0.0;
  const double d = distance(data_->ref.site(i), data_->ref.site(parent(i)));
  return std::min(correlation(d, phi), kMaxRho);
}

bool RegressionSampler::metropolis(const std::string& name, double log_ratio, Rng& rng) {
  auto& st = stats_[name];
  ++st.proposed;
  const bool accept = std::log(uniform_open(rng)) < log_ratio;
  if (accept) ++st.accepted;
  if (adapting_) {
    const double gain = std::pow(static_cast<double>(iteration_) + 1.0, -0.6);
    st.step *= std::exp(gain * ((accept ? 1.0 : 0.0) - kTargetAccept));
  }
  return accept;
}

void RegressionSampler::update_t(Rng& rng) {
  const auto& z = s_.z;
  const double sigma2 = s_.sigma2;
  const double phi = s_.phi;
  wb_.update_t(
      [&](std::size_t i, std::size_t l) {
        const std::size_t j = data_->ref.neighbors(i)[l];
        const double d = distance(data_->ref.site(i), data_->ref.site(j));
        const double r = std::min(correlation(d, phi), kMaxRho);
        return normal_logpdf(z[i], r * z[j], sigma2 * (1.0 - r * r));
      },
      rng);
}

void RegressionSampler::update_gamma_kappa(Rng& rng) {
  wb_.update_gamma(rng);
  wb_.update_kappa2(rng);
}

void RegressionSampler::update_zeta(Rng& rng) {
  auto& st = stats_["zeta"];
  ++st.proposed;
  const bool accept = wb_.update_zeta(st.step, rng);
  if (accept) ++st.accepted;
  if (adapting_) {
    const double gain = std::pow(static_cast<double>(iteration_) + 1.0, -0.6);
    st.step *= std::exp(gain * ((accept ? 1.0 : 0.0) - kTargetAccept));
  }
}

void RegressionSampler::update_beta(Rng& rng) {
  const std::size_t p = s_.beta.size();
  if (p == 0) return;
  const std::size_t n = data_->size();
  const auto& X = data_->covariates;
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) r[static_cast<Eigen::Index>(i)] = data_->y[i] - s_.z[i];
  Eigen::MatrixXd prec = X.transpose() * X / s_.tau2;
  Eigen::VectorXd rhs = X.transpose() * r / s_.tau2;
  if (!priors_.beta_var.empty()) {
    for (std::size_t k = 0; k < p; ++k) {
      const double v = priors_.beta_var[k];
      if (!std::isfinite(v)) continue;
      prec(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += 1.0 / v;
      rhs[static_cast<Eigen::Index>(k)] += priors_.beta_mean[k] / v;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(prec);
  require(llt.info() == Eigen::Success, ErrorCategory::Numeric,
          "beta update: X'X is singular; check for collinear covariates");
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd e(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) e[static_cast<Eigen::Index>(k)] = std_normal(rng);
  const Eigen::VectorXd b = mean + llt.matrixU().solve(e);
  for (std::size_t k = 0; k < p; ++k) s_.beta[k] = b[static_cast<Eigen::Index>(k)];
}

void RegressionSampler::update_tau2(Rng& rng) {
  const std::size_t n = data_->size();
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = data_->y[i] - fitted(*data_, s_.beta, i) - s_.z[i];
    ss += e * e;
  }
  s_.tau2 = sample_inv_gamma(priors_.tau2.shape + 0.5 * static_cast<double>(n),
                             priors_.tau2.scale + 0.5 * ss, rng);
}

void RegressionSampler::update_sigma2(Rng& rng) {
  const std::size_t n = data_->size();
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = parent_rho(i, s_.phi);
    const double zp = i == 0 ? 0.0 : s_.z[parent(i)];
    const double e = s_.z[i] - r * zp;
    ss += e * e / (1.0 - r * r);
  }
  s_.sigma2 = sample_inv_gamma(priors_.sigma2.shape + 0.5 * static_cast<double>(n),
                               priors_.sigma2.scale + 0.5 * ss, rng);
}

double RegressionSampler::phi_log_target(double phi) const {
  double lp = inv_gamma_logpdf(phi, priors_.phi.shape, priors_.phi.scale);
  if (lp == -kInf) return lp;
  for (std::size_t i = 1; i < data_->size(); ++i) {
    const double r = parent_rho(i, phi);
    lp += normal_logpdf(s_.z[i], r * s_.z[parent(i)], s_.sigma2 * (1.0 - r * r));
  }
  return std::isnan(lp) ? -kInf : lp;
}

void RegressionSampler::update_phi(Rng& rng) {
  const double cur = s_.phi;
  const double prop = cur * std::exp(stats_["phi"].step * std_normal(rng));
  const double log_ratio =
      phi_log_target(prop) - phi_log_target(cur) + std::log(prop) - std::log(cur);
  if (metropolis("phi", log_ratio, rng)) s_.phi = prop;
}

void RegressionSampler::update_z(Rng& rng) {
  const std::size_t n = data_->size();
  std::vector<std::size_t> par(n, 0);
  std::vector<double> rho(n, 0.0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 1; i < n; ++i) {
    par[i] = parent(i);
    rho[i] = parent_rho(i, s_.phi);
    children[par[i]].push_back(i);
  }
  const double inv_tau2 = 1.0 / s_.tau2;
  auto& z = s_.z;
  for (std::size_t i = 0; i < n; ++i) {
    const double own = 1.0 / (s_.sigma2 * (1.0 - rho[i] * rho[i]));
    double prec = inv_tau2 + own;
    double num = inv_tau2 * (data_->y[i] - fitted(*data_, s_.beta, i));
    if (i > 0) num += own * rho[i] * z[par[i]];
    for (std::size_t j : children[i]) {
      const double q = 1.0 / (s_.sigma2 * (1.0 - rho[j] * rho[j]));
      prec += rho[j] * rho[j] * q;
      num += rho[j] * z[j] * q;
    }
    z[i] = num / prec + std_normal(rng) / std::sqrt(prec);
  }
}

void RegressionSampler::scan(Rng& rng) {
  update_t(rng);
  update_gamma_kappa(rng);
  update_zeta(rng);
  update_z(rng);
  update_beta(rng);
  update_tau2(rng);
  update_sigma2(rng);
  update_phi(rng);
}

double RegressionSampler::log_likelihood() const {
  double ll = 0.0;
  for (std::size_t i = 0; i < data_->size(); ++i)
    ll += normal_logpdf(data_->y[i], fitted(*data_, s_.beta, i) + s_.z[i], s_.tau2);
  return ll;
}

std::vector<std::string> regression_names(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < p; ++k) out.push_back("beta" + std::to_string(k));
  for (const char* n : {"tau2", "sigma2", "phi", "gamma0", "gamma1", "gamma2", "kappa2", "zeta"})
    out.push_back(n);
  return out;
}

ChainDraws run_regression(const FitData& data, const RegressionState& init,
                          const WeightParams& winit, const Priors& priors,
                          const Schedule& schedule) {
  validate(schedule);
  RegressionSampler sampler(data, init, winit, priors, schedule);
  if (!std::isfinite(sampler.phi_log_target(init.phi)) ||
      !std::isfinite(sampler.weights().zeta_log_target(winit.zeta)) || !(init.tau2 > 0.0) ||
      !(init.sigma2 > 0.0))
    fail(ErrorCategory::Numeric, "run_regression: non-finite log-posterior at initialization");

  ChainDraws out;
  out.family = "gnnmp-regression";
  out.regression = true;
  out.template_spec = GaussianNNMP{0.0, init.sigma2, init.phi};
  out.names = regression_names(init.beta.size());
  out.latent_name = "z";
  out.iterations = schedule.iterations;
  out.burnin = schedule.burnin;
  out.thin = schedule.thin;
  out.seed = schedule.seed;

  Rng rng(schedule.seed);
  for (std::size_t it = 1; it <= schedule.iterations; ++it) {
    sampler.set_iteration(it);
    sampler.set_adapting(schedule.adapt && it <= schedule.burnin);
    sampler.scan(rng);
    if (it > schedule.burnin && (it - schedule.burnin) % schedule.thin == 0) {
      const auto& s = sampler.state();
      const auto& w = sampler.weights().params();
      std::vector<double> row(s.beta);
      row.insert(row.end(), {s.tau2, s.sigma2, s.phi, w.gamma[0], w.gamma[1], w.gamma[2],
                             w.kappa2, w.zeta});
      out.values.push_back(std::move(row));
      out.loglik.push_back(sampler.log_likelihood());
      out.latent.push_back(s.z);
    }
    if (schedule.progress) schedule.progress(it);
  }
  out.acceptance = sampler.stats();
  return out;
}

}  // namespace nnmp
