#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "nnmp/io.hpp"
#include "nnmp/mcmc.hpp"

using namespace nnmp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nnmp_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Doubles, ShortestRoundTrip) {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const double v = std::ldexp(std_normal(rng), static_cast<int>(std_normal(rng) * 100));
    EXPECT_EQ(parse_double(format_double(v), "t"), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_TRUE(std::isnan(parse_double(format_double(kNaN), "t")));
  EXPECT_EQ(parse_double(format_double(-kInf), "t"), -kInf);
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "t"),
            std::numeric_limits<double>::denorm_min());
  EXPECT_THROW(parse_double("abc", "t"), Error);
  EXPECT_THROW(parse_double("1.5x", "t"), Error);
}

TEST(Dataset, ThreeRows) {
  const auto d = parse_dataset("x,y,value\n0,0,1.5\n1,0,2\n0,1,-3\n", "mem");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.value[2], -3.0);
  EXPECT_EQ(d.covariates.cols(), 0);
  EXPECT_EQ(d.role[0], Role::Ref);
}

TEST(Dataset, HeaderOnlyRejectedAtFitTime) {
  const auto d = parse_dataset("x,y,value\n", "mem");
  EXPECT_EQ(d.size(), 0u);
  EXPECT_THROW(prepare_fit_data(d, 5, Ordering::random(1)), Error);
}

TEST(Dataset, ErrorsCarryLineNumbers) {
  try {
    parse_dataset("x,y,value\n0,0,1\n0,zz,1\n", "f.csv");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Data);
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dataset("x,y\n0,0,1\n", "f"), Error);
  EXPECT_THROW(parse_dataset("x,value\n0,1\n", "f"), Error);
  EXPECT_THROW(parse_dataset("x,y,role\n0,0,train\n", "f"), Error);
  EXPECT_THROW(parse_dataset("x,y,partition\n0,0,1.5\n", "f"), Error);
}

TEST(Dataset, CovariatesPartitionRoles) {
  const auto d = parse_dataset(
      "# comment\nx,y,value,elev,partition,role\n0,0,1,10,0,ref\n1,1,,20,1,holdout\n2,2,nan,30,1,grid\n",
      "mem");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.covariate_names, std::vector<std::string>{"elev"});
  EXPECT_EQ(d.covariates(1, 0), 20.0);
  EXPECT_EQ(d.partition[2], 1u);
  EXPECT_EQ(d.rows_with(Role::Holdout), std::vector<std::size_t>{1});
  EXPECT_TRUE(std::isnan(d.value[2]));
}

TEST(Dataset, SaveLoadIdentity) {
  Rng rng(2);
  Dataset d;
  d.covariate_names = {"a", "b"};
  d.covariates.resize(200, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    d.sites.push_back({uniform_open(rng), uniform_open(rng) * 1e-7});
    d.value.push_back(i % 17 == 0 ? kNaN : std_normal(rng) * 1e5);
    d.covariates(static_cast<Eigen::Index>(i), 0) = std_normal(rng);
    d.covariates(static_cast<Eigen::Index>(i), 1) = 1.0 / 3.0;
    d.partition.push_back(i % 3);
    d.role.push_back(static_cast<Role>(i % 3));
  }
  const auto dir = scratch("roundtrip");
  const auto path = (dir / "d.csv").string();
  save_dataset(path, d);
  const auto e = load_dataset(path);
  ASSERT_EQ(e.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(e.sites[i], d.sites[i]);
    if (std::isnan(d.value[i]))
      EXPECT_TRUE(std::isnan(e.value[i]));
    else
      EXPECT_EQ(e.value[i], d.value[i]);
    EXPECT_EQ(e.covariates(static_cast<Eigen::Index>(i), 0), d.covariates(static_cast<Eigen::Index>(i), 0));
    EXPECT_EQ(e.partition[i], d.partition[i]);
    EXPECT_EQ(e.role[i], d.role[i]);
  }
  EXPECT_EQ(format_dataset(e), format_dataset(d));
}

TEST(Dataset, PrepareOrdersReferenceRows) {
  const auto d = parse_dataset(
      "x,y,value,role\n0,0,1,ref\n1,0,2,holdout\n0,1,3,ref\n1,1,4,ref\n0.5,0.5,5,ref\n", "mem");
  const auto p = prepare_fit_data(d, 2, Ordering::random(3));
  ASSERT_EQ(p.fit.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NE(p.rows[i], 1u);
    EXPECT_EQ(p.fit.y[i], d.value[p.rows[i]]);
    EXPECT_EQ(p.fit.ref.site(i), d.sites[p.rows[i]]);
  }
}

TEST(Atomic, WritesAndReplaces) {
  const auto dir = scratch("atomic");
  const auto path = (dir / "sub" / "f.txt").string();
  atomic_write(path, "one");
  EXPECT_EQ(read_file(path), "one");
  atomic_write(path, "two");
  EXPECT_EQ(read_file(path), "two");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "sub")) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
}

TEST(Hash, Fnv1aVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Config, ParseAndAccessors) {
  const auto c = Config::parse(
      "# run\nmodel.family = gumbel-copula-gamma\nmcmc.iterations = 500 # short\n"
      "weights.gamma = -1, 0.5, 0\nmcmc.adapt = true\n",
      "cfg");
  EXPECT_EQ(c.get("model.family", ""), "gumbel-copula-gamma");
  EXPECT_EQ(c.get_size("mcmc.iterations", 0), 500u);
  EXPECT_EQ(c.get_list("weights.gamma", {}), (std::vector<double>{-1, 0.5, 0}));
  EXPECT_TRUE(c.get_bool("mcmc.adapt", false));
  EXPECT_EQ(c.get_double("model.phi", 0.25), 0.25);
  EXPECT_NO_THROW(c.check_schema());
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), Error);
  EXPECT_THROW(Config::parse("novalue\n"), Error);
  EXPECT_THROW(Config::parse("a.b.c.d.e = 1\n"), Error);
  EXPECT_THROW(Config::parse("model.famly = gaussian\n").check_schema(), Error);
  EXPECT_THROW(Config::parse("mcmc.iterations = -3\n").get_size("mcmc.iterations", 0), Error);
  EXPECT_THROW(Config::parse("mcmc.adapt = maybe\n").get_bool("mcmc.adapt", false), Error);
}

TEST(Config, HashIgnoresOutputAndLayout) {
  const auto a = Config::parse("model.family = gaussian\nmcmc.seed = 3\noutput.dir = /tmp/a\n");
  const auto b = Config::parse("mcmc.seed=3\n\n# x\nmodel.family=gaussian\noutput.dir=/tmp/b\n");
  const auto c = Config::parse("mcmc.seed=4\nmodel.family=gaussian\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, RunConfigDefaultsAndFamilies) {
  const auto r = run_config(Config::parse(""));
  EXPECT_EQ(r.family, "gaussian");
  EXPECT_EQ(r.neighbors, 10u);
  EXPECT_EQ(r.schedule.iterations, 30000u);
  EXPECT_EQ(r.schedule.burnin, 10000u);
  EXPECT_EQ(r.schedule.thin, 10u);
  EXPECT_EQ(r.sim.nx, 200u);
  EXPECT_EQ(r.sim.n_ref, 2000u);
  EXPECT_DOUBLE_EQ(r.sim.phi_w, 1.0 / 12.0);
  const auto g = run_config(Config::parse("model.family = gumbel-copula-beta\nmodel.a = 2\nmodel.phi = 0.3\n"));
  const auto& m = std::get<CopulaNNMP>(g.spec);
  EXPECT_EQ(m.copula, CopulaFamily::Gumbel);
  EXPECT_DOUBLE_EQ(std::get<Beta>(m.marginal).a, 2.0);
  EXPECT_DOUBLE_EQ(m.phi, 0.3);
  bool reg = false;
  family_template("gnnmp-regression", 1, 2, &reg);
  EXPECT_TRUE(reg);
  EXPECT_THROW(family_template("frank-copula-gamma", 1, 0), Error);
  EXPECT_THROW(run_config(Config::parse("mcmc.iterations = 10\nmcmc.burnin = 20\n")), Error);
}

TEST(Draws, WriteReadRoundTrip) {
  ChainDraws d;
  d.family = "gumbel-copula-gamma";
  d.template_spec = CopulaNNMP{CopulaFamily::Gumbel, 0.1, Gamma{2, 2}};
  d.names = theta_names(d.template_spec);
  for (const char* n : {"gamma0", "gamma1", "gamma2", "kappa2", "zeta"}) d.names.push_back(n);
  Rng rng(4);
  for (int k = 0; k < 7; ++k) {
    std::vector<double> row;
    for (std::size_t j = 0; j < d.names.size(); ++j) row.push_back(std::exp(std_normal(rng)));
    d.values.push_back(row);
    d.loglik.push_back(-100 * uniform_open(rng));
  }
  d.latent_name = "t";
  for (int k = 0; k < 7; ++k) d.latent.push_back({kNaN, 0.25 * k, -1.5 + k});
  d.iterations = 100;
  d.burnin = 30;
  d.thin = 10;
  d.seed = 99;
  d.acceptance["phi"] = BlockStats{70, 21, 0.3};
  const auto dir = scratch("draws");
  const auto files = write_draws(dir.string(), d, {{"data_hash", "abc"}});
  EXPECT_GE(files.size(), 2u);
  DrawsMeta meta;
  const auto e = read_draws(dir.string(), &meta);
  EXPECT_EQ(meta.fields.at("data_hash"), "abc");
  EXPECT_EQ(e.family, d.family);
  EXPECT_EQ(e.names, d.names);
  EXPECT_EQ(e.values, d.values);
  EXPECT_EQ(e.loglik, d.loglik);
  EXPECT_EQ(e.seed, 99u);
  EXPECT_EQ(e.thin, 10u);
  ASSERT_EQ(e.latent.size(), 7u);
  EXPECT_TRUE(std::isnan(e.latent[0][0]));
  EXPECT_EQ(e.latent[3][2], 1.5);
  const auto& spec = std::get<CopulaNNMP>(e.template_spec);
  EXPECT_EQ(spec.copula, CopulaFamily::Gumbel);
  const auto pm = posterior_mean(e);
  double s = 0;
  for (const auto& row : d.values) s += row[0];
  EXPECT_NEAR(pm[0], s / 7, 1e-14);
  // identical content gives identical bytes
  const auto dir2 = scratch("draws2");
  const auto files2 = write_draws(dir2.string(), d, {{"data_hash", "abc"}});
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(read_file(files[i]), read_file(files2[i]));
}
