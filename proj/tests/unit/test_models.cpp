#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "nnmp/models.hpp"
#include "nnmp/weights.hpp"

using namespace nnmp;

namespace {

double npdf(double x, double m, double v) {
  return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * std::numbers::pi * v);
}

// Transition density of the bivariate skew-Gaussian construction
// (Y, Ynb) = (mv + lv z0 + w1, mnb + lnb z0 + w2), z0 ~ N+(0, 1),
// (w1, w2) ~ N(0, sigma2 [[1, rho], [rho, 1]]), by quadrature over z0.
double skew_oracle(double y, double ynb, double mv, double mnb, double lv, double lnb,
                   double s2, double rho) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto joint = [&](double z0) {
    const double a = y - mv - lv * z0, b = ynb - mnb - lnb * z0;
    const double det = s2 * s2 * (1 - rho * rho);
    const double q = (a * a - 2 * rho * a * b + b * b) * s2 / det;
    return 2 * npdf(z0, 0, 1) * std::exp(-0.5 * q) / (2 * std::numbers::pi * std::sqrt(det));
  };
  auto marg = [&](double z0) { return 2 * npdf(z0, 0, 1) * npdf(ynb - mnb - lnb * z0, 0, s2); };
  return ts.integrate(joint, 0.0, kInf) / ts.integrate(marg, 0.0, kInf);
}

std::vector<Site> uniform_sites(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Site> s(n);
  for (auto& p : s) p = {uniform_open(rng), uniform_open(rng)};
  return s;
}

std::vector<std::vector<double>> all_weights(const SiteSet& ref, const WeightParams& p) {
  std::vector<std::vector<double>> w(ref.size());
  for (std::size_t i = 1; i < ref.size(); ++i) w[i] = site_weights(ref, i, p);
  return w;
}

}  // namespace

TEST(Components, GaussianIndependenceLimit) {
  const GaussianNNMP m{0.7, 2.0, 0.1};
  const NeighborValue nb{0, 1e4, 5.0, {}};
  for (double y : {-2.0, 0.0, 1.3}) {
    EXPECT_NEAR(component_logdensity(m, {}, nb, y), std::log(npdf(y, 0.7, 2.0)), 1e-13);
  }
}

TEST(Components, SkewZeroShapeIsGaussian) {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const double mu = std_normal(rng), s2 = 0.2 + uniform_open(rng), phi = 0.05 + uniform_open(rng);
    const NeighborValue nb{0, uniform_open(rng) * 0.3, std_normal(rng), {}};
    const double y = std_normal(rng);
    EXPECT_NEAR(component_logdensity(SkewGNNMP{0.0, s2, phi, mu}, {}, nb, y),
                component_logdensity(GaussianNNMP{mu, s2, phi}, {}, nb, y), 1e-12);
  }
}

TEST(Components, SkewClosedFormMatchesQuadrature) {
  Rng rng(3);
  for (int k = 0; k < 30; ++k) {
    const double mv = std_normal(rng), mnb = std_normal(rng);
    const double lv = 3 * std_normal(rng), lnb = 3 * std_normal(rng);
    const double s2 = 0.3 + 2 * uniform_open(rng), rho = 0.95 * uniform_open(rng);
    const double ynb = mnb + 2 * std_normal(rng), y = mv + 2 * std_normal(rng);
    const double got = std::exp(skew_component_logdensity(y, ynb, mv, mnb, lv, lnb, s2, rho));
    EXPECT_NEAR(got, skew_oracle(y, ynb, mv, mnb, lv, lnb, s2, rho), 1e-6);
  }
}

TEST(Components, SkewSamplerMatchesDensity) {
  Rng rng(4);
  const double mv = 0.5, mnb = -0.2, lv = 2.0, lnb = 1.5, s2 = 0.8, rho = 0.6, ynb = 1.1;
  const int n = 200000;
  std::vector<double> x(n);
  for (auto& v : x) v = skew_component_sample(ynb, mv, mnb, lv, lnb, s2, rho, rng);
  for (double t : {-0.5, 0.8, 2.0, 3.5}) {
    const double p = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double y) { return std::exp(skew_component_logdensity(y, ynb, mv, mnb, lv, lnb, s2, rho)); },
        -30.0, t, 15, 1e-12);
    const double emp = double(std::count_if(x.begin(), x.end(), [t](double v) { return v <= t; })) / n;
    EXPECT_NEAR(emp, p, 4 * std::sqrt(p * (1 - p) / n) + 1e-4) << t;
  }
}

TEST(Mixture, SingleNeighbor) {
  const CopulaNNMP m{CopulaFamily::Gumbel, 0.2, Gamma{2, 2}};
  const std::vector<NeighborValue> nb{{0, 0.1, 0.8, {}}};
  const std::vector<double> w{1.0};
  EXPECT_DOUBLE_EQ(conditional_logdensity(m, {}, w, nb, 1.3), component_logdensity(m, {}, nb[0], 1.3));
}

TEST(Mixture, CollapseAndNaiveSum) {
  const GaussianNNMP m{0.0, 1.0, 0.3};
  const std::vector<NeighborValue> same{{0, 0.1, 0.5, {}}, {1, 0.1, 0.5, {}}, {2, 0.1, 0.5, {}}};
  const std::vector<double> eq{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_NEAR(conditional_logdensity(m, {}, eq, same, 0.2), component_logdensity(m, {}, same[0], 0.2), 1e-14);

  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const SkewGNNMP s{std_normal(rng), 0.5 + uniform_open(rng), 0.2, 0.1};
    std::vector<NeighborValue> nb;
    std::vector<double> w;
    double tot = 0.0;
    for (std::size_t l = 0; l < 5; ++l) {
      nb.push_back({l, 0.05 * (l + 1), std_normal(rng), {}});
      w.push_back(uniform_open(rng));
      tot += w.back();
    }
    for (auto& v : w) v /= tot;
    const double y = std_normal(rng);
    double naive = 0.0;
    for (std::size_t l = 0; l < 5; ++l) naive += w[l] * std::exp(component_logdensity(s, {}, nb[l], y));
    EXPECT_NEAR(conditional_logdensity(s, {}, w, nb, y), std::log(naive), 1e-10);
  }
}

TEST(Sampling, GaussianIndependentComponent) {
  Rng rng(6);
  const GaussianNNMP m{2.0, 3.0, 0.1};
  const NeighborValue nb{0, 1e5, -10.0, {}};
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_component(m, {}, nb, rng);
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 2.0, 4 * std::sqrt(3.0 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 3.0, 0.05);
}

TEST(Sampling, GumbelIndependenceGivesMarginal) {
  Rng rng(7);
  const CopulaNNMP m{CopulaFamily::Gumbel, 0.01, Gamma{2, 2}};
  const NeighborValue lo{0, 100.0, 0.01, {}}, hi{0, 100.0, 8.0, {}};
  const int n = 100000;
  double a = 0, b = 0;
  for (int i = 0; i < n; ++i) {
    a += sample_component(m, {}, lo, rng);
    b += sample_component(m, {}, hi, rng);
  }
  const double se = std::sqrt(0.5 / n);
  EXPECT_NEAR(a / n, 1.0, 4 * se);
  EXPECT_NEAR(b / n, 1.0, 4 * se);
}

TEST(Sampling, GaussianCopulaStochasticallyIncreasing) {
  Rng rng(8);
  const CopulaNNMP m{CopulaFamily::Gaussian, 1.0, Gamma{2, 2}};
  const double d = -std::log(0.9);  // rho = 0.9
  double prev = -kInf;
  for (double v : {0.1, 0.4, 1.0, 2.0, 4.0}) {
    const NeighborValue nb{0, d, v, {}};
    double s = 0;
    for (int i = 0; i < 40000; ++i) s += sample_component(m, {}, nb, rng);
    EXPECT_GT(s / 40000, prev);
    prev = s / 40000;
  }
}

TEST(Stationarity, DefectSmall) {
  std::vector<double> grid;
  for (int k = 1; k < 40; ++k) grid.push_back(-3.0 + 0.15 * k);
  EXPECT_LT(stationarity_defect(GaussianNNMP{0.3, 1.2, 0.2}, 0.1, grid), 1e-6);
  EXPECT_LT(stationarity_defect(SkewGNNMP{2.0, 0.8, 0.2, 0.1}, 0.1, grid), 1e-5);
  std::vector<double> pos;
  for (int k = 1; k < 40; ++k) pos.push_back(0.1 * k);
  for (double d : {0.01, 0.05, 0.1, 0.3, 1.0})
    EXPECT_LT(stationarity_defect(CopulaNNMP{CopulaFamily::Gaussian, 0.2, Gamma{2, 2}}, d, pos), 1e-5);
  std::vector<double> unit;
  for (int k = 1; k < 20; ++k) unit.push_back(0.05 * k);
  EXPECT_LT(stationarity_defect(CopulaNNMP{CopulaFamily::Gumbel, 0.2, Beta{3, 6}}, 0.05, unit), 1e-5);
  EXPECT_THROW(stationarity_defect(LomaxNNMP{{1.0}, {2.0}}, 0.1, unit), Error);
}

TEST(JointMixture, TwoSites) {
  const std::vector<Site> s{{0, 0}, {0.3, 0.4}};
  const auto ref = build_reference(s, 1, Ordering::as_given());
  const GaussianNNMP m{0.0, 2.0, 0.25};
  const auto mix = gaussian_joint_mixture(m, ref, {{}, {1.0}});
  ASSERT_EQ(mix.weights.size(), 1u);
  const double rho = std::exp(-0.5 / 0.25);
  EXPECT_NEAR(mix.covariances[0](0, 1), 2.0 * rho, 1e-15);
  EXPECT_NEAR(mix.covariances[0](1, 1), 2.0, 1e-15);
}

TEST(JointMixture, ThreeSitesTwoComponents) {
  const std::vector<Site> s{{0, 0}, {0.2, 0}, {0.1, 0.3}};
  const auto ref = build_reference(s, 2, Ordering::as_given());
  const auto mix = gaussian_joint_mixture(GaussianNNMP{}, ref, {{}, {1.0}, {0.3, 0.7}});
  ASSERT_EQ(mix.weights.size(), 2u);
  EXPECT_NEAR(mix.weights[0] + mix.weights[1], 1.0, 1e-15);
  std::vector<double> w = mix.weights;
  std::sort(w.begin(), w.end());
  EXPECT_NEAR(w[0], 0.3, 1e-15);
}

TEST(JointMixture, MatchesConditionalProduct) {
  const auto s = uniform_sites(4, 9);
  const auto ref = build_reference(s, 2, Ordering::random(1));
  const GaussianNNMP m{0.5, 1.5, 0.3};
  WeightParams p;
  p.gamma = {0.2, 0.5, -0.3};
  const auto w = all_weights(ref, p);
  const auto mix = gaussian_joint_mixture(m, ref, w);
  Rng rng(10);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd z(4);
    for (int i = 0; i < 4; ++i) z(i) = 0.5 + 1.5 * std_normal(rng);
    // product of the DAG conditionals written out directly
    double lp = std::log(npdf(z(0), m.mu, m.sigma2));
    for (std::size_t i = 1; i < 4; ++i) {
      double f = 0.0;
      for (std::size_t l = 0; l < ref.neighbors(i).size(); ++l) {
        const auto j = ref.neighbors(i)[l];
        const double rho = std::exp(-distance(ref.site(i), ref.site(j)) / m.phi);
        f += w[i][l] * npdf(z(i), (1 - rho) * m.mu + rho * z(j), m.sigma2 * (1 - rho * rho));
      }
      lp += std::log(f);
    }
    EXPECT_NEAR(mix.log_density(z), lp, 1e-10);
    EXPECT_NEAR(dag_joint_logdensity(m, ref, w, std::vector<double>(z.data(), z.data() + 4)), lp, 1e-10);
  }
  EXPECT_THROW(gaussian_joint_mixture(m, build_reference(uniform_sites(7, 1), 2, Ordering::as_given()),
                                      std::vector<std::vector<double>>(7)),
               Error);
}

TEST(Covariance, SmallCases) {
  const std::vector<Site> s{{0, 0}, {0.1, 0.2}};
  const auto ref = build_reference(s, 1, Ordering::as_given());
  const GaussianNNMP m{0.0, 1.7, 0.2};
  const auto c = covariance_recursion(m, ref, {{}, {1.0}});
  EXPECT_NEAR(c(0, 1), 1.7 * std::exp(-std::sqrt(0.05) / 0.2), 1e-14);
  const auto big = build_reference(uniform_sites(100, 3), 5, Ordering::random(3));
  const auto cb = covariance_recursion(m, big, all_weights(big, WeightParams{}));
  for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(cb(i, i), 1.7);
}

TEST(Covariance, MatchesForwardSimulation) {
  const std::size_t n = 500;
  const auto ref = build_reference(uniform_sites(n, 12), 10, Ordering::random(5));
  const GaussianNNMP m{0.0, 1.0, 0.1};
  const auto w = all_weights(ref, WeightParams{});
  const auto c = covariance_recursion(m, ref, w);

  Rng rng(13);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 1; i < n; i += 5) pairs.emplace_back(i, ref.neighbors(i)[0]);
  for (int k = 0; k < 100; ++k) {
    const auto a = static_cast<std::size_t>(uniform_open(rng) * n);
    const auto b = static_cast<std::size_t>(uniform_open(rng) * n);
    if (a != b) pairs.emplace_back(a, b);
  }
  std::vector<double> rho_nb(n * 10), sd(n * 10);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t l = 0; l < ref.neighbors(i).size(); ++l) {
      const double r = std::exp(-distance(ref.site(i), ref.site(ref.neighbors(i)[l])) / m.phi);
      rho_nb[i * 10 + l] = r;
      sd[i * 10 + l] = std::sqrt(1 - r * r);
    }
  const int reps = 100000;
  std::vector<double> s1(pairs.size()), s2(pairs.size());
  std::vector<double> z(n);
  for (int r = 0; r < reps; ++r) {
    z[0] = std_normal(rng);
    for (std::size_t i = 1; i < n; ++i) {
      const auto l = sample_categorical(w[i], rng);
      z[i] = rho_nb[i * 10 + l] * z[ref.neighbors(i)[l]] + sd[i * 10 + l] * std_normal(rng);
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double p = z[pairs[k].first] * z[pairs[k].second];
      s1[k] += p;
      s2[k] += p * p;
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double mean = s1[k] / reps;
    const double se = std::sqrt((s2[k] / reps - mean * mean) / reps);
    worst = std::max(worst, std::abs(mean - c(pairs[k].first, pairs[k].second)) / se);
  }
  EXPECT_LT(worst, 4.0);
}

TEST(Covariance, QueryTerms) {
  const std::size_t n = 60;
  const auto ref = build_reference(uniform_sites(n, 14), 4, Ordering::random(2));
  const GaussianNNMP m{0.0, 1.0, 0.2};
  const WeightParams p;
  const auto w = all_weights(ref, p);
  const auto c = covariance_recursion(m, ref, w);
  const Site a{0.31, 0.52}, b{0.35, 0.49};
  const auto qa = neighbors_of_query(ref, a, 4), qb = neighbors_of_query(ref, b, 4);
  const auto wa = weights_from_G(cutoffs(qa.distances, p.zeta), weight_mean(a, p.gamma), p.kappa2);
  const auto wb = weights_from_G(cutoffs(qb.distances, p.zeta), weight_mean(b, p.gamma), p.kappa2);
  const auto cqr = covariance_query_reference(m, c, qa, wa);
  const double cqq = covariance_query_query(m, c, qa, wa, qb, wb);

  Rng rng(15);
  const int reps = 200000;
  double sab = 0, sab2 = 0, sa0 = 0, sa02 = 0;
  std::vector<double> z(n);
  auto draw_query = [&](const QuerySite& q, const std::vector<double>& wq) {
    const auto l = sample_categorical(wq, rng);
    const double r = std::exp(-q.distances[l] / m.phi);
    return r * z[q.neighbors[l]] + std::sqrt(1 - r * r) * std_normal(rng);
  };
  for (int r = 0; r < reps; ++r) {
    z[0] = std_normal(rng);
    for (std::size_t i = 1; i < n; ++i) {
      const auto l = sample_categorical(w[i], rng);
      const double rr = std::exp(-distance(ref.site(i), ref.site(ref.neighbors(i)[l])) / m.phi);
      z[i] = rr * z[ref.neighbors(i)[l]] + std::sqrt(1 - rr * rr) * std_normal(rng);
    }
    const double za = draw_query(qa, wa), zb = draw_query(qb, wb);
    sab += za * zb;
    sab2 += za * zb * za * zb;
    const double x = za * z[qa.neighbors[0]];
    sa0 += x;
    sa02 += x * x;
  }
  const double mab = sab / reps, ma0 = sa0 / reps;
  EXPECT_NEAR(mab, cqq, 4 * std::sqrt((sab2 / reps - mab * mab) / reps));
  EXPECT_NEAR(ma0, cqr(qa.neighbors[0]), 4 * std::sqrt((sa02 / reps - ma0 * ma0) / reps));
}

TEST(TailBounds, LomaxExamples) {
  const std::vector<double> d{0.1, 0.2};
  const std::vector<double> w{0.5, 0.5};
  const auto tb = tail_lower_bounds(LomaxNNMP{{1, 1}, {1, 2}}, d, w);
  EXPECT_TRUE(tb.supported);
  EXPECT_DOUBLE_EQ(tb.upper, 0.375);
  EXPECT_FALSE(tb.p0.has_value());
  const auto near0 = tail_lower_bounds(LomaxNNMP{{1, 1}, {1e-9, 1e-9}}, d, w);
  EXPECT_NEAR(near0.upper, 1.0, 1e-8);
}

TEST(TailBounds, GumbelBoundaryMass) {
  // d/phi chosen so that eta = 2 for both components
  const double phi = 1.0, d = std::log(2.0);
  const std::vector<double> dist{d, d};
  const std::vector<double> w{0.5, 0.5};
  const auto tb = tail_lower_bounds(CopulaNNMP{CopulaFamily::Gumbel, phi, Gamma{2, 2}}, dist, w);
  ASSERT_TRUE(tb.p1.has_value());
  EXPECT_NEAR(*tb.p1, 2 - std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(tb.upper, (2 - std::sqrt(2.0)) / 2, 1e-12);
  EXPECT_EQ(*tb.p0, 0.0);
  const auto g = tail_lower_bounds(CopulaNNMP{CopulaFamily::Gaussian, phi, Gamma{2, 2}}, dist, w);
  EXPECT_EQ(g.upper, 0.0);
  EXPECT_FALSE(tail_lower_bounds(SkewGNNMP{}, dist, w).supported);
}

TEST(Models, Validation) {
  EXPECT_THROW(validate(ModelSpec{GaussianNNMP{0, -1, 0.1}}), Error);
  EXPECT_THROW(validate(ModelSpec{CopulaNNMP{CopulaFamily::Gumbel, 0.0, Gamma{2, 2}}}), Error);
  EXPECT_THROW(validate(ModelSpec{LomaxNNMP{{1}, {1, 2}}}), Error);
  EXPECT_NO_THROW(validate(ModelSpec{SkewGNNMP{}}));
  const auto f = stationary_marginal(SkewGNNMP{2.0, 1.0, 0.1, 0.5});
  ASSERT_TRUE(f.has_value());
  const auto& sn = std::get<SkewNormal>(*f);
  EXPECT_DOUBLE_EQ(sn.scale2, 5.0);
  EXPECT_DOUBLE_EQ(sn.shape, 2.0);
  EXPECT_FALSE(stationary_marginal(LomaxNNMP{{1}, {1}}).has_value());
}
