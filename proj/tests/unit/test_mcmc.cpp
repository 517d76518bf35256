#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "nnmp/mcmc.hpp"
#include "nnmp/regression.hpp"
#include "nnmp/simulate.hpp"

using namespace nnmp;

namespace {

std::vector<Site> uniform_sites(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Site> s(n);
  for (auto& p : s) p = {uniform_open(rng), uniform_open(rng)};
  return s;
}

FitData simulated(const ModelSpec& spec, std::size_t n, std::size_t L, std::uint64_t seed) {
  FitData d{build_reference(uniform_sites(n, seed), L, Ordering::random(seed + 1)), {}, {}, {}};
  d.y = simulate_nnmp(spec, d.ref, WeightParams{}, seed + 2).values;
  return d;
}

double mean_of(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Monte Carlo standard error of a chain mean.
double mcse(const std::vector<double>& x) {
  return std::sqrt(var_of(x) / effective_sample_size(x));
}

}  // namespace

TEST(Schedule, RetainedCounts) {
  Schedule s;
  EXPECT_EQ(s.retained(), 2000u);
  s.iterations = 100;
  s.burnin = 100;
  EXPECT_EQ(s.retained(), 0u);
  s.burnin = 95;
  s.thin = 2;
  EXPECT_EQ(s.retained(), 2u);
  s.thin = 0;
  EXPECT_THROW(validate(s), Error);
  s.thin = 1;
  s.burnin = 101;
  EXPECT_THROW(validate(s), Error);
}

TEST(Schedule, EmptyChainWhenAllBurnin) {
  const auto d = simulated(GaussianNNMP{0, 1, 0.2}, 40, 3, 1);
  Schedule s;
  s.iterations = 20;
  s.burnin = 20;
  s.thin = 1;
  const auto draws = run_chain(d, GaussianNNMP{0, 1, 0.2}, WeightParams{}, Priors{}, s);
  EXPECT_EQ(draws.size(), 0u);
  EXPECT_EQ(draws.names.size(), 8u);
}

TEST(Chain, DeterministicGivenSeed) {
  const ModelSpec spec = CopulaNNMP{CopulaFamily::Gumbel, 0.1, Gamma{2, 2}};
  const auto d = simulated(spec, 60, 3, 2);
  Schedule s;
  s.iterations = 60;
  s.burnin = 20;
  s.thin = 2;
  s.seed = 17;
  s.keep_latent = true;
  const auto a = run_chain(d, spec, WeightParams{}, Priors{}, s);
  const auto b = run_chain(d, spec, WeightParams{}, Priors{}, s);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.loglik, b.loglik);
  ASSERT_EQ(a.latent.size(), 20u);
  for (std::size_t k = 0; k < a.latent.size(); ++k)
    for (std::size_t i = 3; i < d.size(); ++i) EXPECT_EQ(a.latent[k][i], b.latent[k][i]);
  s.seed = 18;
  EXPECT_NE(run_chain(d, spec, WeightParams{}, Priors{}, s).values, a.values);
}

TEST(Chain, ZeroStepAlwaysAccepts) {
  const ModelSpec spec = CopulaNNMP{CopulaFamily::Gumbel, 0.1, Gamma{2, 2}};
  const auto d = simulated(spec, 50, 3, 3);
  Schedule s;
  s.iterations = 30;
  s.burnin = 10;
  s.thin = 1;
  s.default_step = 0.0;
  const auto draws = run_chain(d, spec, WeightParams{}, Priors{}, s);
  for (const auto& [name, st] : draws.acceptance) {
    EXPECT_EQ(st.proposed, 30u) << name;
    EXPECT_EQ(st.rate(), 1.0) << name;
  }
  for (const auto& row : draws.values) EXPECT_EQ(row[draws.index_of("phi")], 0.1);
}

TEST(Chain, AcceptanceFallsWithStepSize) {
  const ModelSpec spec = CopulaNNMP{CopulaFamily::Gumbel, 0.1, Gamma{2, 2}};
  const auto d = simulated(spec, 120, 5, 4);
  std::vector<double> rates;
  for (double step : {0.02, 0.3, 3.0}) {
    Schedule s;
    s.iterations = 300;
    s.burnin = 100;
    s.thin = 10;
    s.default_step = step;
    rates.push_back(run_chain(d, spec, WeightParams{}, Priors{}, s).acceptance.at("phi").rate());
  }
  EXPECT_GT(rates[0], rates[1]);
  EXPECT_GT(rates[1], rates[2]);
  EXPECT_GT(rates[0], 0.8);
  EXPECT_LT(rates[2], 0.2);
}

TEST(Chain, AdaptationMovesTowardTarget) {
  const ModelSpec spec = GaussianNNMP{0, 1, 0.1};
  const auto d = simulated(spec, 150, 5, 5);
  Schedule s;
  s.iterations = 3000;
  s.burnin = 2000;
  s.thin = 10;
  s.default_step = 5.0;
  s.adapt = true;
  const auto draws = run_chain(d, spec, WeightParams{}, Priors{}, s);
  const auto& st = draws.acceptance.at("phi");
  EXPECT_LT(st.step, 2.0);
  EXPECT_GT(st.rate(), 0.2);
}

TEST(WeightBlock, LabelFrequenciesMatchWeightedComponents) {
  const auto ref = build_reference(uniform_sites(30, 6), 3, Ordering::random(7));
  WeightParams w;
  w.gamma = {0.3, -1, 0.5};
  w.kappa2 = 0.8;
  w.zeta = 0.2;
  WeightBlock wb(ref, 3, w, Priors{});
  auto logf = [](std::size_t i, std::size_t l) {
    return -0.7 * (double(l) - 1) * (double(l) - 1) + 0.01 * double(i);
  };
  const std::size_t site = 20;
  const auto wt = wb.weights(site);
  std::vector<double> p(3);
  double tot = 0;
  for (std::size_t l = 0; l < 3; ++l) tot += p[l] = wt[l] * std::exp(logf(site, l));
  for (auto& v : p) v /= tot;
  Rng rng(8);
  std::vector<double> count(3, 0.0);
  const int n = 40000;
  for (int k = 0; k < n; ++k) {
    wb.update_t(logf, rng);
    const std::size_t l = wb.ell(site);
    count[l] += 1;
    ASSERT_EQ(latent_bin(wb.t(site), wb.cutoffs_at(site)), l);
  }
  double chi2 = 0;
  for (std::size_t l = 0; l < 3; ++l) chi2 += std::pow(count[l] - n * p[l], 2) / (n * p[l]);
  EXPECT_LT(chi2, 13.8);  // chi-square(2) at p = 0.001
}

TEST(WeightBlock, LatentMarginalIsNormalWithFlatComponents) {
  const auto ref = build_reference(uniform_sites(20, 9), 4, Ordering::random(9));
  WeightParams w;
  w.gamma = {-0.5, 1, 0};
  w.kappa2 = 2.0;
  WeightBlock wb(ref, 4, w, Priors{});
  Rng rng(10);
  const std::size_t site = 11;
  const double mu = weight_mean(ref.site(site), w.gamma);
  std::vector<double> u;
  for (int k = 0; k < 20000; ++k) {
    wb.update_t([](std::size_t, std::size_t) { return 0.0; }, rng);
    u.push_back(norm_cdf((wb.t(site) - mu) / std::sqrt(2.0)));
  }
  std::sort(u.begin(), u.end());
  double dmax = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    dmax = std::max({dmax, (i + 1.0) / u.size() - u[i], u[i] - double(i) / u.size()});
  EXPECT_LT(dmax, 1.95 / std::sqrt(20000.0));  // KS critical value at 0.001
}

TEST(WeightBlock, GammaConjugateFlatPriorIsOls) {
  const auto ref = build_reference(uniform_sites(200, 11), 5, Ordering::random(12));
  Priors pr;
  pr.gamma_cov = Eigen::Matrix3d::Constant(kInf);
  WeightParams w;
  w.kappa2 = 0.09;
  WeightBlock wb(ref, 5, w, pr);
  Rng rng(13);
  Eigen::MatrixXd D(195, 3);
  Eigen::VectorXd t(195);
  for (std::size_t i = 5; i < 200; ++i) {
    const auto r = Eigen::Index(i - 5);
    D(r, 0) = 1;
    D(r, 1) = ref.site(i).x;
    D(r, 2) = ref.site(i).y;
    t[r] = 0.5 - ref.site(i).x + 2 * ref.site(i).y + 0.3 * std_normal(rng);
    wb.set_t(i, t[r]);
  }
  const Eigen::Vector3d ols = (D.transpose() * D).ldlt().solve(D.transpose() * t);
  const Eigen::Matrix3d cov = 0.09 * (D.transpose() * D).inverse();
  const int n = 20000;
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  Eigen::Matrix3d ss = Eigen::Matrix3d::Zero();
  for (int k = 0; k < n; ++k) {
    wb.update_gamma(rng);
    const Eigen::Vector3d g(wb.params().gamma[0], wb.params().gamma[1], wb.params().gamma[2]);
    s += g;
    ss += g * g.transpose();
  }
  const Eigen::Vector3d m = s / n;
  const Eigen::Matrix3d c = ss / n - m * m.transpose();
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(m[j], ols[j], 5 * std::sqrt(cov(j, j) / n));
    EXPECT_NEAR(c(j, j) / cov(j, j), 1.0, 0.05);
  }
  EXPECT_NEAR(c(1, 2) / std::sqrt(c(1, 1) * c(2, 2)),
              cov(1, 2) / std::sqrt(cov(1, 1) * cov(2, 2)), 0.03);
}

TEST(WeightBlock, Kappa2IsInverseGammaConjugate) {
  const auto ref = build_reference(uniform_sites(60, 14), 3, Ordering::random(15));
  Priors pr;
  WeightParams w;
  w.gamma = {0.2, 0.1, -0.3};
  WeightBlock wb(ref, 3, w, pr);
  Rng rng(16);
  double ss = 0;
  for (std::size_t i = 3; i < 60; ++i) {
    const double t = std_normal(rng);
    wb.set_t(i, t);
    const double r = t - weight_mean(ref.site(i), w.gamma);
    ss += r * r;
  }
  const double shape = pr.kappa2.shape + 57 / 2.0, scale = pr.kappa2.scale + ss / 2;
  std::vector<double> x;
  for (int k = 0; k < 100000; ++k) {
    wb.update_kappa2(rng);
    x.push_back(wb.params().kappa2);
  }
  const double want_mean = scale / (shape - 1);
  const double want_var = scale * scale / ((shape - 1) * (shape - 1) * (shape - 2));
  EXPECT_NEAR(mean_of(x), want_mean, 5 * std::sqrt(want_var / x.size()));
  EXPECT_NEAR(var_of(x) / want_var, 1.0, 0.03);
}

TEST(WeightBlock, ZetaChainMatchesQuadrature) {
  const auto ref = build_reference(uniform_sites(80, 17), 4, Ordering::random(18));
  WeightParams w;
  w.zeta = 0.1;
  WeightBlock wb(ref, 4, w, Priors{});
  Rng rng(19);
  // labels from the prior so the conditional is informative but fixed
  wb.update_t([](std::size_t, std::size_t) { return 0.0; }, rng);
  const double lo = 1e-4, hi = 20.0;
  const int m = 20000;
  double z0 = 0, z1 = 0;
  const double lmax = wb.zeta_log_target(0.1);
  for (int k = 0; k < m; ++k) {
    const double lz = std::log(lo) + (std::log(hi) - std::log(lo)) * (k + 0.5) / m;
    const double z = std::exp(lz);
    const double f = std::exp(wb.zeta_log_target(z) - lmax) * z;
    z0 += f;
    z1 += f * z;
  }
  const double want = z1 / z0;
  std::vector<double> x;
  for (int k = 0; k < 40000; ++k) {
    wb.update_zeta(0.5, rng);
    x.push_back(wb.params().zeta);
  }
  EXPECT_NEAR(mean_of(x), want, 5 * mcse(x));
}

TEST(Sampler, GaussianThetaChainMatchesGridPosterior) {
  const ModelSpec truth = GaussianNNMP{1.0, 0.5, 0.15};
  const auto d = simulated(truth, 80, 3, 20);
  Schedule sch;
  sch.default_step = 0.4;
  NnmpSampler smp(d, truth, WeightParams{}, Priors{}, sch);
  Rng rng(21);
  smp.update_t(rng);  // fixes a label configuration
  std::vector<double> mu, s2, ph;
  for (int k = 0; k < 30000; ++k) {
    smp.update_theta(rng);
    const auto& g = std::get<GaussianNNMP>(smp.spec());
    mu.push_back(g.mu);
    s2.push_back(g.sigma2);
    ph.push_back(g.phi);
  }
  auto range = [](std::vector<double> x, bool log_scale) {
    std::sort(x.begin(), x.end());
    double a = x[x.size() / 2000], b = x[x.size() - 1 - x.size() / 2000];
    if (log_scale) a = std::log(a), b = std::log(b);
    const double w = b - a;
    return std::pair{a - 0.6 * w, b + 0.6 * w};
  };
  const auto rm = range(mu, false), rs = range(s2, true), rp = range(ph, true);
  const int G = 48;
  double z = 0, emu = 0, es2 = 0, eph = 0, edge = 0;
  std::vector<double> lt;
  lt.reserve(G * G * G);
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b)
      for (int c = 0; c < G; ++c) {
        const double m = rm.first + (rm.second - rm.first) * (a + 0.5) / G;
        const double s = std::exp(rs.first + (rs.second - rs.first) * (b + 0.5) / G);
        const double p = std::exp(rp.first + (rp.second - rp.first) * (c + 0.5) / G);
        lt.push_back(smp.theta_log_target(GaussianNNMP{m, s, p}) + std::log(s) + std::log(p));
      }
  const double top = *std::max_element(lt.begin(), lt.end());
  std::size_t k = 0;
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b)
      for (int c = 0; c < G; ++c) {
        const double f = std::exp(lt[k++] - top);
        const double m = rm.first + (rm.second - rm.first) * (a + 0.5) / G;
        const double s = std::exp(rs.first + (rs.second - rs.first) * (b + 0.5) / G);
        const double p = std::exp(rp.first + (rp.second - rp.first) * (c + 0.5) / G);
        z += f;
        emu += f * m;
        es2 += f * s;
        eph += f * p;
        if (a == 0 || b == 0 || c == 0 || a == G - 1 || b == G - 1 || c == G - 1) edge += f;
      }
  EXPECT_LT(edge / z, 1e-4);
  EXPECT_NEAR(mean_of(mu), emu / z, 5 * mcse(mu));
  EXPECT_NEAR(mean_of(s2), es2 / z, 5 * mcse(s2));
  EXPECT_NEAR(mean_of(ph), eph / z, 5 * mcse(ph));
}

TEST(Sampler, CopulaPhiChainMatchesQuadrature) {
  const ModelSpec truth = CopulaNNMP{CopulaFamily::Gumbel, 0.1, Gamma{2, 2}};
  const auto d = simulated(truth, 80, 3, 22);
  NnmpSampler smp(d, truth, WeightParams{}, Priors{}, Schedule{});
  Rng rng(23);
  smp.update_t(rng);
  // a and b held at the truth; only phi moves through the Metropolis kernel
  std::vector<double> x;
  auto cur = std::get<CopulaNNMP>(smp.spec());
  const double step = 0.5;
  const double lmax = smp.theta_log_target(cur);
  for (int k = 0; k < 40000; ++k) {
    auto prop = cur;
    prop.phi = cur.phi * std::exp(step * std_normal(rng));
    const double r = smp.theta_log_target(prop) - smp.theta_log_target(cur) + std::log(prop.phi / cur.phi);
    if (std::log(uniform_open(rng)) < r) cur = prop;
    x.push_back(cur.phi);
  }
  // the sampler's own phi block on the same target
  std::vector<double> y;
  Schedule sch;
  sch.steps["a"] = 0.0;
  sch.steps["b"] = 0.0;
  sch.steps["phi"] = step;
  NnmpSampler own(d, truth, WeightParams{}, Priors{}, sch);
  Rng rng2(24);
  own.update_t(rng2);
  for (std::size_t i = 3; i < d.size(); ++i) own.weights().set_ell(i, smp.weights().ell(i));
  for (int k = 0; k < 40000; ++k) {
    own.update_theta(rng2);
    y.push_back(std::get<CopulaNNMP>(own.spec()).phi);
  }
  double z0 = 0, z1 = 0;
  const int m = 20000;
  for (int k = 0; k < m; ++k) {
    const double p = std::exp(std::log(1e-4) + (std::log(50.0) - std::log(1e-4)) * (k + 0.5) / m);
    auto s = cur;
    s.phi = p;
    const double f = std::exp(smp.theta_log_target(s) - lmax) * p;
    z0 += f;
    z1 += f * p;
  }
  EXPECT_NEAR(mean_of(x), z1 / z0, 5 * mcse(x));
  EXPECT_NEAR(mean_of(y), z1 / z0, 5 * mcse(y));
}

TEST(Regression, LatentGibbsMatchesExactPosterior) {
  const std::size_t n = 5;
  FitData d{build_reference(uniform_sites(n, 25), 2, Ordering::random(26)), {}, {}, {}};
  d.covariates = RowMatrix::Ones(n, 1);
  d.y = {0.3, -0.2, 1.1, 0.7, 0.0};
  RegressionState st;
  st.beta = {0.4};
  st.tau2 = 0.2;
  st.sigma2 = 0.8;
  st.phi = 0.3;
  st.z.assign(n, 0.0);
  RegressionSampler smp(d, st, WeightParams{}, Priors{}, Schedule{});
  Rng rng(27);
  for (std::size_t i = 2; i < n; ++i) smp.weights().set_ell(i, i % 2);
  // independent construction of the Gaussian DAG prior
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd Dv(n);
  Dv[0] = st.sigma2;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t p = d.ref.neighbors(i)[i == 1 ? 0 : i % 2];
    const double r = std::exp(-distance(d.ref.site(i), d.ref.site(p)) / st.phi);
    B(Eigen::Index(i), Eigen::Index(p)) = r;
    Dv[Eigen::Index(i)] = st.sigma2 * (1 - r * r);
    EXPECT_EQ(smp.parent(i), p);
  }
  const Eigen::MatrixXd IB = Eigen::MatrixXd::Identity(n, n) - B;
  const Eigen::MatrixXd P = IB.transpose() * Dv.cwiseInverse().asDiagonal() * IB +
                            Eigen::MatrixXd::Identity(n, n) / st.tau2;
  Eigen::VectorXd r(n);
  for (std::size_t i = 0; i < n; ++i) r[Eigen::Index(i)] = (d.y[i] - 0.4) / st.tau2;
  const Eigen::MatrixXd C = P.inverse();
  const Eigen::VectorXd m = C * r;
  const int N = 200000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < N; ++k) {
    smp.update_z(rng);
    const Eigen::Map<const Eigen::VectorXd> z(smp.state().z.data(), Eigen::Index(n));
    s += z;
    ss += z * z.transpose();
  }
  const Eigen::VectorXd em = s / N;
  const Eigen::MatrixXd ec = ss / N - em * em.transpose();
  for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
    EXPECT_NEAR(em[i], m[i], 0.01) << i;
    for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) EXPECT_NEAR(ec(i, j), C(i, j), 0.01) << i << "," << j;
  }
}

TEST(Regression, Tau2WithExactResiduals) {
  const std::size_t n = 40;
  FitData d{build_reference(uniform_sites(n, 28), 3, Ordering::random(29)), {}, {}, {}};
  d.covariates = RowMatrix::Ones(n, 1);
  Rng rng(30);
  RegressionState st;
  st.beta = {2.0};
  for (std::size_t i = 0; i < n; ++i) {
    d.y.push_back(2.0 + std_normal(rng));
    st.z.push_back(d.y.back() - 2.0);
  }
  Priors pr;
  RegressionSampler smp(d, st, WeightParams{}, pr, Schedule{});
  std::vector<double> x;
  for (int k = 0; k < 50000; ++k) {
    smp.update_tau2(rng);
    x.push_back(smp.state().tau2);
  }
  const double shape = pr.tau2.shape + n / 2.0;
  EXPECT_NEAR(mean_of(x), pr.tau2.scale / (shape - 1), 0.01 * pr.tau2.scale / (shape - 1));
}

TEST(Regression, BetaFlatPriorIsOls) {
  const std::size_t n = 50;
  FitData d{build_reference(uniform_sites(n, 31), 3, Ordering::random(32)), {}, {}, {}};
  d.covariates.resize(n, 2);
  Rng rng(33);
  for (std::size_t i = 0; i < n; ++i) {
    d.covariates(Eigen::Index(i), 0) = 1;
    d.covariates(Eigen::Index(i), 1) = std_normal(rng);
    d.y.push_back(1 - 2 * d.covariates(Eigen::Index(i), 1) + 0.5 * std_normal(rng));
  }
  RegressionState st;
  st.beta = {0, 0};
  st.tau2 = 0.25;
  st.z.assign(n, 0.0);
  RegressionSampler smp(d, st, WeightParams{}, Priors{}, Schedule{});
  const Eigen::MatrixXd X = d.covariates;
  const Eigen::Map<const Eigen::VectorXd> y(d.y.data(), Eigen::Index(n));
  const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  const Eigen::MatrixXd cov = 0.25 * (X.transpose() * X).inverse();
  std::vector<double> b0, b1;
  for (int k = 0; k < 20000; ++k) {
    smp.update_beta(rng);
    b0.push_back(smp.state().beta[0]);
    b1.push_back(smp.state().beta[1]);
  }
  EXPECT_NEAR(mean_of(b0), ols[0], 5 * std::sqrt(cov(0, 0) / 20000));
  EXPECT_NEAR(mean_of(b1), ols[1], 5 * std::sqrt(cov(1, 1) / 20000));
  EXPECT_NEAR(var_of(b1) / cov(1, 1), 1.0, 0.05);
}

TEST(Regression, ChainRecoversCoefficients) {
  const std::size_t n = 300;
  const auto ref = build_reference(uniform_sites(n, 34), 5, Ordering::random(35));
  RowMatrix X(n, 2);
  Rng rng(36);
  for (std::size_t i = 0; i < n; ++i) {
    X(Eigen::Index(i), 0) = 1;
    X(Eigen::Index(i), 1) = std_normal(rng);
  }
  const std::vector<double> beta{1.0, -0.5};
  const auto sim = simulate_gnnmp_regression(ref, X, beta, 0.05, 1.0, 0.1, WeightParams{}, 37);
  FitData d{ref, sim.values, X, {}};
  Schedule s;
  s.iterations = 2000;
  s.burnin = 1000;
  s.thin = 5;
  s.adapt = true;
  const auto draws = run_regression(d, prior_median_regression(d, Priors{}), WeightParams{}, Priors{}, s);
  EXPECT_EQ(draws.size(), 200u);
  EXPECT_TRUE(draws.regression);
  EXPECT_NEAR(mean_of(draws.column("beta1")), -0.5, 0.1);
  EXPECT_EQ(draws.latent_name, "z");
}

TEST(Ess, IidAndAr1) {
  Rng rng(38);
  const std::size_t n = 100000;
  std::vector<double> iid(n), ar(n);
  double prev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    iid[i] = std_normal(rng);
    prev = 0.5 * prev + std::sqrt(0.75) * std_normal(rng);
    ar[i] = prev;
  }
  EXPECT_NEAR(effective_sample_size(iid) / n, 1.0, 0.1);
  EXPECT_NEAR(effective_sample_size(ar) / (n / 3.0), 1.0, 0.1);
}

TEST(Priors, Medians) {
  EXPECT_NEAR(inv_gamma_median({2, 1}), 1 / 1.678346990016661, 1e-12);
  EXPECT_NEAR(gamma_median({1, 1}), std::log(2.0), 1e-14);
  const auto w = prior_median_weights(Priors{});
  EXPECT_EQ(w.gamma[0], -1.5);
  EXPECT_NEAR(w.zeta, 0.2 / 2.674060313723561, 1e-12);
}
