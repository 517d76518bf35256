#include "nnmp/mcmc.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <sstream>

#include "nnmp/marginals.hpp"

namespace nnmp {

namespace {

constexpr double kMaxRho = 1.0 - 1e-10;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTargetAccept = 0.35;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double normal_prior_logpdf(double x, const NormalPrior& p) {
  if (!std::isfinite(p.var)) return 0.0;
  const double r = x - p.mean;
  return -0.5 * r * r / p.var - 0.5 * std::log(p.var) - kLogSqrt2Pi;
}

double normal_logpdf(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * r * r / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

bool flat_gamma_prior(const Priors& p) { return !p.gamma_cov.allFinite(); }

std::string dump(const ModelSpec& spec, const WeightParams& w) {
  std::ostringstream os;
  os.precision(17);
  const auto names = theta_names(spec);
  const auto vals = pack_theta(spec);
  for (std::size_t k = 0; k < names.size(); ++k) os << names[k] << "=" << vals[k] << " ";
  os << "gamma=(" << w.gamma[0] << "," << w.gamma[1] << "," << w.gamma[2]
     << ") kappa2=" << w.kappa2 << " zeta=" << w.zeta;
  return os.str();
}

}  // namespace

double inv_gamma_median(const InvGammaPrior& p) {
  return p.scale / boost::math::gamma_p_inv(p.shape, 0.5);
}

double gamma_median(const GammaPrior& p) { return boost::math::gamma_p_inv(p.shape, 0.5) / p.rate; }

Locus FitData::locus(std::size_t i) const {
  Locus out{ref.site(i), {}, partition.empty() ? 0 : partition[i]};
  if (covariates.cols() > 0)
    out.covariates = std::span<const double>(covariates.row(static_cast<Eigen::Index>(i)).data(),
                                             static_cast<std::size_t>(covariates.cols()));
  return out;
}

void validate(const FitData& data, const ModelSpec& spec) {
  const std::size_t n = data.size();
  require(n == data.ref.size(), ErrorCategory::Data, "fit data: value count != site count");
  require(n > data.ref.max_neighbors(), ErrorCategory::Data,
          "fit data: need more sites than the neighbor cap L");
  for (double v : data.y)
    require(std::isfinite(v), ErrorCategory::Data, "fit data: non-finite response value");
  validate(spec);
  if (const auto* m = std::get_if<ExtSkewGNNMP>(&spec)) {
    require(static_cast<std::size_t>(data.covariates.cols()) == m->beta.size() &&
                static_cast<std::size_t>(data.covariates.rows()) == n,
            ErrorCategory::Data, "fit data: covariate matrix does not match beta");
    require(data.partition.size() == n, ErrorCategory::Data,
            "fit data: extended skew model needs a partition label per site");
    for (auto k : data.partition)
      require(k < m->lambda.size(), ErrorCategory::Data,
              "fit data: partition label exceeds the number of lambda parameters");
  }
  if (const auto* m = std::get_if<CopulaNNMP>(&spec)) {
    const double lo = support_lower(m->marginal);
    const double hi = support_upper(m->marginal);
    for (double v : data.y)
      require(v > lo && v < hi, ErrorCategory::Data,
              "fit data: response outside the marginal support");
  }
  require(!std::holds_alternative<LomaxNNMP>(spec), ErrorCategory::Unsupported,
          "Lomax NNMP has no posterior sampler");
}

ModelSpec prior_median_spec(const ModelSpec& tmpl, const Priors& pr) {
  return std::visit(
      Overloaded{
          [&](const GaussianNNMP&) -> ModelSpec {
            return GaussianNNMP{pr.mu.mean, inv_gamma_median(pr.sigma2),
                                inv_gamma_median(pr.phi)};
          },
          [&](const SkewGNNMP& m) -> ModelSpec {
            return SkewGNNMP{pr.lambda.mean, inv_gamma_median(pr.sigma2),
                             inv_gamma_median(pr.phi), m.location};
          },
          [&](const ExtSkewGNNMP& m) -> ModelSpec {
            ExtSkewGNNMP out = m;
            if (!pr.beta_var.empty())
              for (std::size_t k = 0; k < out.beta.size(); ++k)
                if (std::isfinite(pr.beta_var[k])) out.beta[k] = pr.beta_mean[k];
            for (auto& l : out.lambda) l = pr.lambda.mean;
            out.sigma2 = inv_gamma_median(pr.sigma2);
            out.phi = inv_gamma_median(pr.phi);
            return out;
          },
          [&](const CopulaNNMP& m) -> ModelSpec {
            CopulaNNMP out = m;
            const double a = gamma_median(pr.a);
            const double b = gamma_median(pr.b);
            if (std::holds_alternative<Gamma>(m.marginal))
              out.marginal = Gamma{a, b};
            else
              out.marginal = Beta{a, b};
            out.phi = inv_gamma_median(pr.phi);
            return out;
          },
          [&](const LomaxNNMP& m) -> ModelSpec { return m; },
      },
      tmpl);
}

WeightParams prior_median_weights(const Priors& pr) {
  WeightParams w;
  w.gamma = {pr.gamma_mean[0], pr.gamma_mean[1], pr.gamma_mean[2]};
  w.kappa2 = inv_gamma_median(pr.kappa2);
  w.zeta = inv_gamma_median(pr.zeta);
  return w;
}

double Schedule::step(const std::string& block) const {
  const auto it = steps.find(block);
  return it == steps.end() ? default_step : it->second;
}

std::size_t Schedule::retained() const {
  return iterations >= burnin ? (iterations - burnin) / thin : 0;
}

void validate(const Schedule& s) {
  require(s.thin >= 1, ErrorCategory::Config, "schedule: thin must be >= 1");
  require(s.burnin <= s.iterations, ErrorCategory::Config,
          "schedule: burn-in exceeds the iteration count");
  require(s.default_step >= 0.0, ErrorCategory::Config, "schedule: negative step size");
  for (const auto& [k, v] : s.steps)
    require(v >= 0.0 && std::isfinite(v), ErrorCategory::Config,
            "schedule: invalid step size for block " + k);
}

std::size_t ChainDraws::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return k;
  fail(ErrorCategory::Data, "draws: no parameter named " + name);
}

double ChainDraws::value(std::size_t draw, const std::string& name) const {
  return values[draw][index_of(name)];
}

std::vector<double> ChainDraws::column(const std::string& name) const {
  const auto k = index_of(name);
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[k]);
  return out;
}

std::vector<std::string> theta_names(const ModelSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianNNMP&) { return std::vector<std::string>{"mu", "sigma2", "phi"}; },
          [](const SkewGNNMP&) { return std::vector<std::string>{"lambda", "sigma2", "phi"}; },
          [](const ExtSkewGNNMP& m) {
            std::vector<std::string> out;
            for (std::size_t k = 0; k < m.beta.size(); ++k)
              out.push_back("beta" + std::to_string(k));
            for (std::size_t k = 0; k < m.lambda.size(); ++k)
              out.push_back("lambda" + std::to_string(k));
            out.push_back("sigma2");
            out.push_back("phi");
            return out;
          },
          [](const CopulaNNMP&) { return std::vector<std::string>{"a", "b", "phi"}; },
          [](const LomaxNNMP&) -> std::vector<std::string> {
            fail(ErrorCategory::Unsupported, "Lomax NNMP has no sampled parameters");
          },
      },
      spec);
}

std::vector<double> pack_theta(const ModelSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianNNMP& m) { return std::vector<double>{m.mu, m.sigma2, m.phi}; },
          [](const SkewGNNMP& m) { return std::vector<double>{m.lambda, m.sigma2, m.phi}; },
          [](const ExtSkewGNNMP& m) {
            std::vector<double> out(m.beta);
            out.insert(out.end(), m.lambda.begin(), m.lambda.end());
            out.push_back(m.sigma2);
            out.push_back(m.phi);
            return out;
          },
          [](const CopulaNNMP& m) {
            if (const auto* g = std::get_if<Gamma>(&m.marginal))
              return std::vector<double>{g->shape, g->rate, m.phi};
            const auto& b = std::get<Beta>(m.marginal);
            return std::vector<double>{b.a, b.b, m.phi};
          },
          [](const LomaxNNMP&) -> std::vector<double> {
            fail(ErrorCategory::Unsupported, "Lomax NNMP has no sampled parameters");
          },
      },
      spec);
}

ModelSpec unpack_theta(const ModelSpec& tmpl, std::span<const double> v) {
  return std::visit(
      Overloaded{
          [&](const GaussianNNMP&) -> ModelSpec { return GaussianNNMP{v[0], v[1], v[2]}; },
          [&](const SkewGNNMP& m) -> ModelSpec {
            return SkewGNNMP{v[0], v[1], v[2], m.location};
          },
          [&](const ExtSkewGNNMP& m) -> ModelSpec {
            ExtSkewGNNMP out = m;
            const std::size_t p = m.beta.size();
            const std::size_t k = m.lambda.size();
            out.beta.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p));
            out.lambda.assign(v.begin() + static_cast<std::ptrdiff_t>(p),
                              v.begin() + static_cast<std::ptrdiff_t>(p + k));
            out.sigma2 = v[p + k];
            out.phi = v[p + k + 1];
            return out;
          },
          [&](const CopulaNNMP& m) -> ModelSpec {
            CopulaNNMP out = m;
            if (std::holds_alternative<Gamma>(m.marginal))
              out.marginal = Gamma{v[0], v[1]};
            else
              out.marginal = Beta{v[0], v[1]};
            out.phi = v[2];
            return out;
          },
          [&](const LomaxNNMP& m) -> ModelSpec { return m; },
      },
      tmpl);
}

ModelSpec spec_at(const ChainDraws& d, std::size_t draw) {
  if (d.regression) {
    return GaussianNNMP{0.0, d.value(draw, "sigma2"), d.value(draw, "phi")};
  }
  return unpack_theta(d.template_spec, d.values[draw]);
}

WeightParams weights_at(const ChainDraws& d, std::size_t draw) {
  WeightParams w;
  w.gamma = {d.value(draw, "gamma0"), d.value(draw, "gamma1"), d.value(draw, "gamma2")};
  w.kappa2 = d.value(draw, "kappa2");
  w.zeta = d.value(draw, "zeta");
  return w;
}

// ---------------------------------------------------------------- WeightBlock

WeightBlock::WeightBlock(const SiteSet& ref, std::size_t start, const WeightParams& init,
                         const Priors& priors)
    : ref_(&ref), start_(start), n_(ref.size()), p_(init), priors_(priors) {
  require(start >= 1 && start < n_, ErrorCategory::Data,
          "weight block: first latent site must lie inside the reference set");
  validate(p_);
  cut_.resize(n_);
  mu_.assign(n_, 0.0);
  t_.assign(n_, kNaN);
  ell_.assign(n_, 0);
  refresh_cutoffs();
  refresh_mu();
  for (std::size_t i = start_; i < n_; ++i) {
    t_[i] = mu_[i];
    ell_[i] = latent_bin(t_[i], cut_[i]);
  }
}

void WeightBlock::refresh_mu() {
  for (std::size_t i = start_; i < n_; ++i) mu_[i] = weight_mean(ref_->site(i), p_.gamma);
}

void WeightBlock::refresh_cutoffs() {
  for (std::size_t i = start_; i < n_; ++i) cut_[i] = cutoffs(ref_->neighbor_distances(i), p_.zeta);
}

std::vector<double> WeightBlock::weights(std::size_t i) const {
  return weights_from_G(cut_[i], mu_[i], p_.kappa2);
}

Eigen::MatrixXd WeightBlock::design() const {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n_ - start_), 3);
  for (std::size_t i = start_; i < n_; ++i) {
    const auto r = static_cast<Eigen::Index>(i - start_);
    d(r, 0) = 1.0;
    d(r, 1) = ref_->site(i).x;
    d(r, 2) = ref_->site(i).y;
  }
  return d;
}

void WeightBlock::update_t(const std::function<double(std::size_t, std::size_t)>& logf,
                           Rng& rng) {
  const double kappa = std::sqrt(p_.kappa2);
  std::vector<double> logq;
  std::vector<double> cdfs;
  for (std::size_t i = start_; i < n_; ++i) {
    const auto& cut = cut_[i];
    const std::size_t L = cut.bins();
    cdfs.resize(L + 1);
    for (std::size_t k = 0; k <= L; ++k) cdfs[k] = norm_cdf((cut.rstar[k] - mu_[i]) / kappa);
    logq.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const double w = cdfs[l + 1] - cdfs[l];
      const double lw = w > 1e-8 ? std::log(w) : log_bin_mass(cut, l, mu_[i], p_.kappa2);
      logq[l] = lw == -kInf ? -kInf : lw + logf(i, l);
    }
    const std::size_t l = sample_log_categorical(logq, rng);
    ell_[i] = l;
    t_[i] = sample_truncated_normal(mu_[i], kappa, cut.rstar[l], cut.rstar[l + 1], rng);
  }
}

void WeightBlock::update_gamma(Rng& rng) {
  const Eigen::MatrixXd d = design();
  Eigen::VectorXd t(d.rows());
  for (std::size_t i = start_; i < n_; ++i) t[static_cast<Eigen::Index>(i - start_)] = t_[i];
  Eigen::Matrix3d prec = d.transpose() * d / p_.kappa2;
  Eigen::Vector3d rhs = d.transpose() * t / p_.kappa2;
  if (!flat_gamma_prior(priors_)) {
    const Eigen::Matrix3d vinv = priors_.gamma_cov.inverse();
    prec += vinv;
    rhs += vinv * priors_.gamma_mean;
  }
  const Eigen::LLT<Eigen::Matrix3d> llt(prec);
  require(llt.info() == Eigen::Success, ErrorCategory::Numeric,
          "gamma update: posterior precision is not positive definite (check that site "
          "coordinates are not collinear)");
  const Eigen::Vector3d mean = llt.solve(rhs);
  Eigen::Vector3d z;
  for (int k = 0; k < 3; ++k) z[k] = std_normal(rng);
  const Eigen::Vector3d g = mean + llt.matrixU().solve(z);
  p_.gamma = {g[0], g[1], g[2]};
  refresh_mu();
}

void WeightBlock::update_kappa2(Rng& rng) {
  double ss = 0.0;
  for (std::size_t i = start_; i < n_; ++i) ss += (t_[i] - mu_[i]) * (t_[i] - mu_[i]);
  const double shape = priors_.kappa2.shape + 0.5 * static_cast<double>(n_ - start_);
  p_.kappa2 = sample_inv_gamma(shape, priors_.kappa2.scale + 0.5 * ss, rng);
}

double WeightBlock::zeta_log_target(double zeta) const {
  double lp = inv_gamma_logpdf(zeta, priors_.zeta.shape, priors_.zeta.scale);
  if (lp == -kInf) return lp;
  for (std::size_t i = start_; i < n_; ++i) {
    lp += log_bin_mass_at(ref_->neighbor_distances(i), zeta, ell_[i], mu_[i], p_.kappa2);
    if (lp == -kInf) return lp;
  }
  return lp;
}

bool WeightBlock::update_zeta(double step, Rng& rng) {
  const double cur = p_.zeta;
  const double prop = cur * std::exp(step * std_normal(rng));
  const double log_ratio =
      zeta_log_target(prop) - zeta_log_target(cur) + std::log(prop) - std::log(cur);
  const bool accept = std::log(uniform_open(rng)) < log_ratio;
  if (accept) {
    p_.zeta = prop;
    refresh_cutoffs();
    const double kappa = std::sqrt(p_.kappa2);
    for (std::size_t i = start_; i < n_; ++i) {
      const auto& cut = cut_[i];
      t_[i] = sample_truncated_normal(mu_[i], kappa, cut.rstar[ell_[i]], cut.rstar[ell_[i] + 1],
                                      rng);
    }
  }
  return accept;
}

void WeightBlock::set_params(const WeightParams& p) {
  validate(p);
  const bool new_cut = p.zeta != p_.zeta;
  p_ = p;
  if (new_cut) refresh_cutoffs();
  refresh_mu();
}

void WeightBlock::set_t(std::size_t i, double t) {
  t_[i] = t;
  ell_[i] = latent_bin(t, cut_[i]);
}

void WeightBlock::set_ell(std::size_t i, std::size_t l) {
  require(l < cut_[i].bins(), ErrorCategory::Data, "set_ell: bin index out of range");
  ell_[i] = l;
}

// ------------------------------------------------------------- ComponentCache

namespace {

bool same_marginal(const Marginal& a, const Marginal& b) {
  if (a.index() != b.index()) return false;
  if (const auto* g = std::get_if<Gamma>(&a)) {
    const auto& h = std::get<Gamma>(b);
    return g->shape == h.shape && g->rate == h.rate;
  }
  if (const auto* g = std::get_if<Beta>(&a)) {
    const auto& h = std::get<Beta>(b);
    return g->a == h.a && g->b == h.b;
  }
  return false;
}

}  // namespace

ComponentCache::ComponentCache(const FitData& data, const ModelSpec& spec,
                               const std::vector<std::size_t>* labels,
                               const ComponentCache* reuse)
    : data_(&data), spec_(spec), L_(data.ref.max_neighbors()) {
  const std::size_t n = data.size();
  rho_.assign(n * L_, 0.0);
  double phi = 0.0;
  auto tr = std::make_shared<Transforms>();
  std::visit(Overloaded{
                 [&](const GaussianNNMP& m) { phi = m.phi; },
                 [&](const SkewGNNMP& m) {
                   phi = m.phi;
                   tr->a.assign(n, m.location);
                   tr->b.assign(n, m.lambda);
                 },
                 [&](const ExtSkewGNNMP& m) {
                   phi = m.phi;
                   tr->a.resize(n);
                   tr->b.resize(n);
                   const Eigen::Map<const Eigen::VectorXd> beta(m.beta.data(),
                                                                static_cast<Eigen::Index>(m.beta.size()));
                   for (std::size_t i = 0; i < n; ++i) {
                     tr->a[i] = data.covariates.row(static_cast<Eigen::Index>(i)).dot(beta);
                     tr->b[i] = m.lambda[data.partition[i]];
                   }
                 },
                 [&](const CopulaNNMP& m) {
                   phi = m.phi;
                   if (reuse && std::holds_alternative<CopulaNNMP>(reuse->spec_)) {
                     const auto& r = std::get<CopulaNNMP>(reuse->spec_);
                     if (r.copula == m.copula && same_marginal(r.marginal, m.marginal)) {
                       tr_ = reuse->tr_;
                       return;
                     }
                   }
                   tr->a.resize(n);
                   tr->b.resize(n);
                   tr->c.resize(n);
                   for (std::size_t i = 0; i < n; ++i) {
                     const double y = data.y[i];
                     const double lo = std::clamp(cdf(m.marginal, y), kCopulaEps, 1.0 - kCopulaEps);
                     tr->c[i] = log_pdf(m.marginal, y);
                     if (m.copula == CopulaFamily::Gaussian) {
                       tr->a[i] = norm_quantile(lo);
                     } else {
                       double u = -std::log(lo);
                       if (lo > 0.5) {
                         const double s = std::clamp(sf(m.marginal, y), kCopulaEps, 1.0 - kCopulaEps);
                         u = -std::log1p(-s);
                       }
                       tr->a[i] = u;
                       tr->b[i] = std::log(u);
                     }
                   }
                 },
                 [&](const LomaxNNMP&) {
                   fail(ErrorCategory::Unsupported, "Lomax NNMP has no posterior sampler");
                 },
             },
             spec_);
  if (!tr_) tr_ = std::move(tr);
  const bool gumbel = std::holds_alternative<CopulaNNMP>(spec_) &&
                      std::get<CopulaNNMP>(spec_).copula == CopulaFamily::Gumbel;
  auto fill = [&](std::size_t i, std::size_t l, double d) {
    if (gumbel) {
      rho_[i * L_ + l] = spatial_copula(CopulaFamily::Gumbel, d, phi).param();
    } else {
      rho_[i * L_ + l] = std::min(correlation(d, phi), kMaxRho);
    }
  };
  for (std::size_t i = 1; i < n; ++i) {
    const auto d = data.ref.neighbor_distances(i);
    if (labels) {
      if ((*labels)[i] < d.size()) fill(i, (*labels)[i], d[(*labels)[i]]);
    } else {
      for (std::size_t l = 0; l < d.size(); ++l) fill(i, l, d[l]);
    }
  }
}

double ComponentCache::log_comp(std::size_t i, std::size_t l) const {
  const std::size_t j = data_->ref.neighbors(i)[l];
  const double r = rho_[i * L_ + l];
  const auto& y = data_->y;
  const auto& a_ = tr_->a;
  const auto& b_ = tr_->b;
  const auto& c_ = tr_->c;
  switch (spec_.index()) {
    case 0: {
      const auto& m = std::get<GaussianNNMP>(spec_);
      return normal_logpdf(y[i], (1.0 - r) * m.mu + r * y[j], m.sigma2 * (1.0 - r * r));
    }
    case 1: {
      const auto& m = std::get<SkewGNNMP>(spec_);
      return skew_component_logdensity(y[i], y[j], a_[i], a_[j], b_[i], b_[j], m.sigma2, r);
    }
    case 2: {
      const auto& m = std::get<ExtSkewGNNMP>(spec_);
      return skew_component_logdensity(y[i], y[j], a_[i], a_[j], b_[i], b_[j], m.sigma2, r);
    }
    case 3: {
      const auto& m = std::get<CopulaNNMP>(spec_);
      if (m.copula == CopulaFamily::Gaussian) {
        const double x1 = a_[i];
        const double x2 = a_[j];
        const double q = 1.0 - r * r;
        return -0.5 * std::log(q) - (r * r * (x1 * x1 + x2 * x2) - 2.0 * r * x1 * x2) / (2.0 * q) +
               c_[i];
      }
      const double eta = r;
      const double lu1 = b_[i];
      const double lu2 = b_[j];
      const double log_a = log_add_exp(eta * lu1, eta * lu2);
      const double a_root = std::exp(log_a / eta);
      return -a_root + std::log(a_root + eta - 1.0) + (1.0 / eta - 2.0) * log_a +
             (eta - 1.0) * (lu1 + lu2) + a_[i] + a_[j] + c_[i];
    }
    default:
      fail(ErrorCategory::Unsupported, "component cache: unsupported family");
  }
}

double conditional_loglik(const FitData& data, const ModelSpec& spec, const WeightParams& w) {
  const ComponentCache cache(data, spec);
  const std::size_t L = data.ref.max_neighbors();
  double total = 0.0;
  std::vector<double> terms;
  for (std::size_t i = L; i < data.size(); ++i) {
    const auto cut = cutoffs(data.ref.neighbor_distances(i), w.zeta);
    const auto wi = weights_from_G(cut, weight_mean(data.ref.site(i), w.gamma), w.kappa2);
    terms.clear();
    for (std::size_t l = 0; l < wi.size(); ++l)
      if (wi[l] > 0.0) terms.push_back(std::log(wi[l]) + cache.log_comp(i, l));
    total += log_sum_exp(terms);
  }
  return total;
}

// ---------------------------------------------------------------- NnmpSampler

NnmpSampler::NnmpSampler(const FitData& data, const ModelSpec& init, const WeightParams& winit,
                         const Priors& priors, const Schedule& schedule)
    : data_(&data),
      spec_(init),
      priors_(priors),
      wb_(data.ref, data.ref.max_neighbors(), winit, priors) {
  validate(data, init);
  for (const auto& name : theta_names(init)) stats_[name].step = schedule.step(name);
  stats_["zeta"].step = schedule.step("zeta");
  if (std::holds_alternative<GaussianNNMP>(init)) {
    stats_.erase("mu");
    stats_.erase("sigma2");
  }
}

BlockStats& NnmpSampler::block(const std::string& name) { return stats_[name]; }

bool NnmpSampler::metropolis(const std::string& name, double log_ratio, Rng& rng) {
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

double NnmpSampler::theta_log_prior(const ModelSpec& spec) const {
  return std::visit(
      Overloaded{
          [&](const GaussianNNMP& m) {
            return normal_prior_logpdf(m.mu, priors_.mu) +
                   inv_gamma_logpdf(m.sigma2, priors_.sigma2.shape, priors_.sigma2.scale) +
                   inv_gamma_logpdf(m.phi, priors_.phi.shape, priors_.phi.scale);
          },
          [&](const SkewGNNMP& m) {
            return normal_prior_logpdf(m.lambda, priors_.lambda) +
                   inv_gamma_logpdf(m.sigma2, priors_.sigma2.shape, priors_.sigma2.scale) +
                   inv_gamma_logpdf(m.phi, priors_.phi.shape, priors_.phi.scale);
          },
          [&](const ExtSkewGNNMP& m) {
            double lp = inv_gamma_logpdf(m.sigma2, priors_.sigma2.shape, priors_.sigma2.scale) +
                        inv_gamma_logpdf(m.phi, priors_.phi.shape, priors_.phi.scale);
            for (double l : m.lambda) lp += normal_prior_logpdf(l, priors_.lambda);
            if (!priors_.beta_var.empty())
              for (std::size_t k = 0; k < m.beta.size(); ++k)
                lp += normal_prior_logpdf(m.beta[k], {priors_.beta_mean[k], priors_.beta_var[k]});
            return lp;
          },
          [&](const CopulaNNMP& m) {
            const auto v = pack_theta(m);
            return gamma_logpdf(v[0], priors_.a.shape, priors_.a.rate) +
                   gamma_logpdf(v[1], priors_.b.shape, priors_.b.rate) +
                   inv_gamma_logpdf(m.phi, priors_.phi.shape, priors_.phi.scale);
          },
          [&](const LomaxNNMP&) { return -kInf; },
      },
      spec);
}

double NnmpSampler::theta_log_target(const ModelSpec& spec) const {
  const double lp = theta_log_prior(spec);
  if (!std::isfinite(lp)) return -kInf;
  auto cache = std::make_shared<const ComponentCache>(*data_, spec, &wb_.labels(), last_cache_.get());
  double ll = 0.0;
  for (std::size_t i = wb_.start(); i < data_->size(); ++i) ll += cache->log_comp(i, wb_.ell(i));
  last_cache_ = std::move(cache);
  return std::isnan(ll) ? -kInf : lp + ll;
}

double NnmpSampler::current_target() {
  if (!cur_valid_ || cur_labels_ != wb_.labels()) {
    cur_target_ = theta_log_target(spec_);
    cur_labels_ = wb_.labels();
    cur_valid_ = true;
  }
  return cur_target_;
}

double NnmpSampler::log_likelihood() const { return conditional_loglik(*data_, spec_, wb_.params()); }

void NnmpSampler::update_t(Rng& rng) {
  const ComponentCache cache(*data_, spec_, nullptr, last_cache_.get());
  wb_.update_t([&](std::size_t i, std::size_t l) { return cache.log_comp(i, l); }, rng);
}

void NnmpSampler::update_gamma_kappa(Rng& rng) {
  wb_.update_gamma(rng);
  wb_.update_kappa2(rng);
}

void NnmpSampler::update_zeta(Rng& rng) {
  auto& st = stats_["zeta"];
  ++st.proposed;
  const bool accept = wb_.update_zeta(st.step, rng);
  if (accept) ++st.accepted;
  if (adapting_) {
    const double gain = std::pow(static_cast<double>(iteration_) + 1.0, -0.6);
    st.step *= std::exp(gain * ((accept ? 1.0 : 0.0) - kTargetAccept));
  }
}

void NnmpSampler::mh_positive(const std::string& name, double& value, Rng& rng) {
  const double cur = value;
  const double cur_target = current_target();
  const double prop = cur * std::exp(stats_[name].step * std_normal(rng));
  value = prop;
  const double prop_target = theta_log_target(spec_);
  const double log_ratio = prop_target - cur_target + std::log(prop) - std::log(cur);
  if (metropolis(name, log_ratio, rng))
    cur_target_ = prop_target;
  else
    value = cur;
}

void NnmpSampler::mh_real(const std::string& name, double& value, Rng& rng) {
  const double cur = value;
  const double cur_target = current_target();
  value = cur + stats_[name].step * std_normal(rng);
  const double prop_target = theta_log_target(spec_);
  if (metropolis(name, prop_target - cur_target, rng))
    cur_target_ = prop_target;
  else
    value = cur;
}

void NnmpSampler::gaussian_conjugate(Rng& rng) {
  auto& m = std::get<GaussianNNMP>(spec_);
  const auto& y = data_->y;
  const std::size_t n = data_->size();
  std::vector<double> rho(n, 0.0);
  std::vector<std::size_t> nb(n, 0);
  for (std::size_t i = wb_.start(); i < n; ++i) {
    const std::size_t l = wb_.ell(i);
    nb[i] = data_->ref.neighbors(i)[l];
    rho[i] = std::min(correlation(distance(data_->ref.site(i), data_->ref.site(nb[i])), m.phi),
                      kMaxRho);
  }
  // mu | sigma2, phi, l
  double prec = std::isfinite(priors_.mu.var) ? 1.0 / priors_.mu.var : 0.0;
  double num = std::isfinite(priors_.mu.var) ? priors_.mu.mean / priors_.mu.var : 0.0;
  for (std::size_t i = wb_.start(); i < n; ++i) {
    const double r = rho[i];
    const double v = m.sigma2 * (1.0 - r * r);
    prec += (1.0 - r) * (1.0 - r) / v;
    num += (1.0 - r) * (y[i] - r * y[nb[i]]) / v;
  }
  m.mu = num / prec + std_normal(rng) / std::sqrt(prec);
  // sigma2 | mu, phi, l
  double ss = 0.0;
  for (std::size_t i = wb_.start(); i < n; ++i) {
    const double r = rho[i];
    const double e = y[i] - (1.0 - r) * m.mu - r * y[nb[i]];
    ss += e * e / (1.0 - r * r);
  }
  m.sigma2 = sample_inv_gamma(priors_.sigma2.shape + 0.5 * static_cast<double>(n - wb_.start()),
                              priors_.sigma2.scale + 0.5 * ss, rng);
}

void NnmpSampler::update_theta(Rng& rng) {
  std::visit(Overloaded{
                 [&](GaussianNNMP& m) {
                   gaussian_conjugate(rng);
                   cur_valid_ = false;
                   mh_positive("phi", m.phi, rng);
                 },
                 [&](SkewGNNMP& m) {
                   mh_real("lambda", m.lambda, rng);
                   mh_positive("sigma2", m.sigma2, rng);
                   mh_positive("phi", m.phi, rng);
                 },
                 [&](ExtSkewGNNMP& m) {
                   for (std::size_t k = 0; k < m.beta.size(); ++k)
                     mh_real("beta" + std::to_string(k), m.beta[k], rng);
                   for (std::size_t k = 0; k < m.lambda.size(); ++k)
                     mh_real("lambda" + std::to_string(k), m.lambda[k], rng);
                   mh_positive("sigma2", m.sigma2, rng);
                   mh_positive("phi", m.phi, rng);
                 },
                 [&](CopulaNNMP& m) {
                   if (auto* g = std::get_if<Gamma>(&m.marginal)) {
                     mh_positive("a", g->shape, rng);
                     mh_positive("b", g->rate, rng);
                   } else {
                     auto& b = std::get<Beta>(m.marginal);
                     mh_positive("a", b.a, rng);
                     mh_positive("b", b.b, rng);
                   }
                   mh_positive("phi", m.phi, rng);
                 },
                 [&](LomaxNNMP&) {},
             },
             spec_);
}

void NnmpSampler::scan(Rng& rng) {
  update_t(rng);
  update_gamma_kappa(rng);
  update_zeta(rng);
  update_theta(rng);
}

ChainDraws run_chain(const FitData& data, const ModelSpec& init, const WeightParams& winit,
                     const Priors& priors, const Schedule& schedule) {
  validate(schedule);
  NnmpSampler sampler(data, init, winit, priors, schedule);
  const double lt = sampler.theta_log_target(init);
  const double lz = sampler.weights().zeta_log_target(winit.zeta);
  if (!std::isfinite(lt) || !std::isfinite(lz))
    fail(ErrorCategory::Numeric,
         "run_chain: non-finite log-posterior at initialization: " + dump(init, winit));

  ChainDraws out;
  out.family = family_name(init);
  out.template_spec = init;
  out.names = theta_names(init);
  for (const char* w : {"gamma0", "gamma1", "gamma2", "kappa2", "zeta"}) out.names.push_back(w);
  out.iterations = schedule.iterations;
  out.burnin = schedule.burnin;
  out.thin = schedule.thin;
  out.seed = schedule.seed;
  if (schedule.keep_latent) out.latent_name = "t";
  out.values.reserve(schedule.retained());

  Rng rng(schedule.seed);
  for (std::size_t it = 1; it <= schedule.iterations; ++it) {
    sampler.set_iteration(it);
    sampler.set_adapting(schedule.adapt && it <= schedule.burnin);
    sampler.scan(rng);
    if (it > schedule.burnin && (it - schedule.burnin) % schedule.thin == 0) {
      auto row = pack_theta(sampler.spec());
      const auto& w = sampler.weights().params();
      row.insert(row.end(), {w.gamma[0], w.gamma[1], w.gamma[2], w.kappa2, w.zeta});
      out.values.push_back(std::move(row));
      out.loglik.push_back(sampler.log_likelihood());
      if (schedule.keep_latent) {
        std::vector<double> t(data.size(), kNaN);
        for (std::size_t i = sampler.weights().start(); i < data.size(); ++i)
          t[i] = sampler.weights().t(i);
        out.latent.push_back(std::move(t));
      }
    }
    if (schedule.progress) schedule.progress(it);
  }
  out.acceptance = sampler.stats();
  return out;
}

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = acov(0);
  if (g0 <= 0.0) return static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = acov(2 * k) + acov(2 * k + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau = -1.0 + 2.0 * sum / g0;
  return static_cast<double>(n) / std::max(tau, 1e-12);
}

}  // namespace nnmp
