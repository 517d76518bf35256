#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnmp/io.hpp"
#include "nnmp/mcmc.hpp"
#include "nnmp/models.hpp"
#include "nnmp/predict.hpp"
#include "nnmp/regression.hpp"
#include "nnmp/scoring.hpp"
#include "nnmp/simulate.hpp"

namespace fs = std::filesystem;
using namespace nnmp;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> burnin;
  std::optional<std::size_t> thin;
  std::optional<std::size_t> neighbors;
  std::string out;
  std::string data;
  std::string draws;
};

Config load_config(const Overrides& o, bool seed_is_simulation) {
  Config c = o.config.empty() ? Config{} : Config::load(o.config);
  if (o.seed) c.set(seed_is_simulation ? "simulate.seed" : "mcmc.seed", std::to_string(*o.seed));
  if (o.iterations) c.set("mcmc.iterations", std::to_string(*o.iterations));
  if (o.burnin) c.set("mcmc.burnin", std::to_string(*o.burnin));
  if (o.thin) c.set("mcmc.thin", std::to_string(*o.thin));
  if (o.neighbors) c.set("data.neighbors", std::to_string(*o.neighbors));
  if (!o.out.empty()) c.set("output.dir", o.out);
  if (!o.data.empty()) c.set("data.path", o.data);
  return c;
}

void write_manifest(const std::string& dir, const std::string& command, const Config& c,
                    const std::map<std::string, std::string>& extra,
                    const std::vector<std::string>& files) {
  std::string m = "command=" + command + "\nconfig_hash=" + c.hash() + "\n";
  for (const auto& [k, v] : extra) m += k + "=" + v + "\n";
  for (const auto& f : files) m += "file." + fs::path(f).filename().string() + "=" + hex64(hash_file(f)) + "\n";
  m += "# config\n";
  m += c.canonical();
  atomic_write((fs::path(dir) / "manifest.txt").string(), m);
}

std::string data_path(const RunConfig& r) {
  require(!r.data_path.empty(), ErrorCategory::Config, "no dataset given (data.path or --data)");
  return r.data_path;
}

QueryPoint query_for_row(const Dataset& d, std::size_t row) {
  QueryPoint q;
  q.site = d.sites[row];
  for (Eigen::Index k = 0; k < d.covariates.cols(); ++k)
    q.covariates.push_back(d.covariates(static_cast<Eigen::Index>(row), k));
  if (!d.partition.empty()) q.partition = d.partition[row];
  return q;
}

// ------------------------------------------------------------------ simulate

int cmd_simulate(const Overrides& o) {
  const Config c = load_config(o, true);
  const RunConfig r = run_config(c);
  const auto& s = r.sim;
  const auto layout = benchmark_layout(s.nx, s.ny, s.n_ref, s.n_holdout, s.seed);
  std::vector<Role> role(layout.sites.size(), Role::Grid);
  for (auto i : layout.reference) role[i] = Role::Ref;
  for (auto i : layout.holdout) role[i] = Role::Holdout;

  std::vector<std::size_t> rows;
  if (s.keep_grid) {
    for (std::size_t i = 0; i < layout.sites.size(); ++i) rows.push_back(i);
  } else {
    rows = layout.reference;
    rows.insert(rows.end(), layout.holdout.begin(), layout.holdout.end());
    std::sort(rows.begin(), rows.end());
  }
  std::vector<Site> sites;
  for (auto i : rows) sites.push_back(layout.sites[i]);

  Dataset d;
  d.sites = sites;
  d.value.assign(sites.size(), kNaN);
  for (auto i : rows) d.role.push_back(role[i]);
  d.covariates.resize(static_cast<Eigen::Index>(sites.size()), 0);

  if (s.generator == "tcopula-gamma" || s.generator == "skew-gp" || s.generator == "beta-copula") {
    FieldRealization f;
    if (s.generator == "tcopula-gamma")
      f = simulate_tcopula_gamma(sites, s.nu, s.phi_w, Gamma{s.a, s.b}, s.seed);
    else if (s.generator == "skew-gp")
      f = simulate_skew_gp(sites, s.sigma1, s.sigma2, s.phi, s.seed);
    else
      f = simulate_beta_copula(sites, Beta{s.a, s.b}, s.phi, s.seed);
    d.value = f.values;
  } else if (s.generator == "nnmp" || s.generator == "gnnmp-regression") {
    // Sequential generators run on the reference and held-out rows.
    std::vector<std::size_t> active;
    std::vector<Site> asites;
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (d.role[k] != Role::Grid) {
        active.push_back(k);
        asites.push_back(sites[k]);
      }
    const SiteSet ref = build_reference(asites, r.neighbors, Ordering::random(s.seed));
    FieldRealization f;
    if (s.generator == "nnmp") {
      require(!r.regression, ErrorCategory::Config,
              "simulate.generator = nnmp needs a response-level model family");
      f = simulate_nnmp(r.spec, ref, r.weights, s.seed);
    } else {
      const auto& g = std::get<GaussianNNMP>(r.spec);
      std::vector<double> beta = c.get_list("model.beta", {0.0});
      require(beta.size() == 1 || beta.size() == 3, ErrorCategory::Config,
              "gnnmp-regression simulation takes 1 (intercept) or 3 (intercept, x, y) coefficients");
      RowMatrix x(static_cast<Eigen::Index>(ref.size()), static_cast<Eigen::Index>(beta.size()));
      for (std::size_t i = 0; i < ref.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        if (beta.size() == 3) {
          x(static_cast<Eigen::Index>(i), 1) = ref.site(i).x;
          x(static_cast<Eigen::Index>(i), 2) = ref.site(i).y;
        }
      }
      f = simulate_gnnmp_regression(ref, x, beta, c.get_double("model.tau2", 0.1), g.sigma2, g.phi,
                                    r.weights, s.seed);
      d.covariate_names = beta.size() == 3 ? std::vector<std::string>{"intercept", "sx", "sy"}
                                           : std::vector<std::string>{"intercept"};
      d.covariates.resize(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(beta.size()));
      for (std::size_t k = 0; k < sites.size(); ++k) {
        d.covariates(static_cast<Eigen::Index>(k), 0) = 1.0;
        if (beta.size() == 3) {
          d.covariates(static_cast<Eigen::Index>(k), 1) = sites[k].x;
          d.covariates(static_cast<Eigen::Index>(k), 2) = sites[k].y;
        }
      }
    }
    for (std::size_t i = 0; i < ref.size(); ++i) d.value[active[ref.order()[i]]] = f.values[i];
  } else {
    fail(ErrorCategory::Config, "unknown simulate.generator '" + s.generator + "'");
  }

  const std::string out = (fs::path(r.out_dir) / "data.csv").string();
  save_dataset(out, d);
  write_manifest(r.out_dir, "simulate", c, {{"seed", std::to_string(s.seed)}}, {out});
  std::cout << "wrote " << d.size() << " rows (" << d.rows_with(Role::Ref).size() << " reference, "
            << d.rows_with(Role::Holdout).size() << " held out) to " << out << "\n";
  return 0;
}

// ----------------------------------------------------------------------- fit

struct Fitted {
  Dataset data;
  PreparedData prep;
  std::string data_hash;
};

Fitted prepare(const RunConfig& r) {
  Fitted f;
  const std::string path = data_path(r);
  f.data = load_dataset(path);
  f.data_hash = hex64(hash_file(path));
  f.prep = prepare_fit_data(f.data, r.neighbors, r.ordering);
  return f;
}

ModelSpec template_for(const RunConfig& r, const Dataset& d) {
  ModelSpec spec = r.spec;
  if (auto* m = std::get_if<ExtSkewGNNMP>(&spec)) {
    if (m->beta.empty()) m->beta.assign(static_cast<std::size_t>(d.covariates.cols()), 0.0);
    std::size_t k = 1;
    for (auto p : d.partition) k = std::max(k, p + 1);
    if (m->lambda.size() < k) m->lambda.assign(k, 0.0);
  }
  return spec;
}

int cmd_fit(const Overrides& o) {
  const Config c = load_config(o, false);
  RunConfig r = run_config(c);
  Fitted f = prepare(r);
  const auto& fit = f.prep.fit;
  const std::size_t total = r.schedule.iterations;
  r.schedule.progress = [total](std::size_t it) {
    if (total >= 10 && it % (total / 10) == 0)
      std::cerr << "fit: iteration " << it << " / " << total << "\n";
  };
  ChainDraws draws;
  if (r.regression) {
    const auto init = prior_median_regression(fit, r.priors);
    draws = run_regression(fit, init, prior_median_weights(r.priors), r.priors, r.schedule);
  } else {
    const ModelSpec tmpl = template_for(r, f.data);
    const ModelSpec init = prior_median_spec(tmpl, r.priors);
    draws = run_chain(fit, init, prior_median_weights(r.priors), r.priors, r.schedule);
  }
  const std::map<std::string, std::string> meta = {{"config_hash", c.hash()},
                                                   {"data_hash", f.data_hash}};
  const auto files = write_draws(r.out_dir, draws, meta);
  write_manifest(r.out_dir, "fit", c, {{"data_hash", f.data_hash}, {"seed", std::to_string(r.schedule.seed)}},
                 files);
  std::cout << "retained " << draws.size() << " draws";
  for (const auto& [k, st] : draws.acceptance) std::cout << "; accept." << k << "=" << st.rate();
  std::cout << "\n";
  return 0;
}

// ------------------------------------------------------------------- predict

ChainDraws load_matching_draws(const Overrides& o, const RunConfig& r, const Fitted& f) {
  const std::string dir = o.draws.empty() ? r.out_dir : o.draws;
  DrawsMeta meta;
  ChainDraws d = read_draws(dir, &meta);
  const auto it = meta.fields.find("data_hash");
  require(it != meta.fields.end() && it->second == f.data_hash, ErrorCategory::Data,
          "draws in " + dir + " were fitted to a different dataset (data hash mismatch)");
  return d;
}

std::vector<QueryPoint> queries(const Fitted& f, std::span<const std::size_t> rows) {
  std::vector<std::size_t> dag_of(f.data.size(), SIZE_MAX);
  for (std::size_t i = 0; i < f.prep.rows.size(); ++i) dag_of[f.prep.rows[i]] = i;
  std::vector<QueryPoint> out;
  for (auto row : rows) {
    QueryPoint q = query_for_row(f.data, row);
    if (dag_of[row] != SIZE_MAX) q.reference = dag_of[row];
    out.push_back(std::move(q));
  }
  return out;
}

int cmd_predict(const Overrides& o) {
  const Config c = load_config(o, false);
  const RunConfig r = run_config(c);
  const Fitted f = prepare(r);
  const ChainDraws draws = load_matching_draws(o, r, f);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < f.data.size(); ++i)
    if (f.data.role[i] != Role::Ref || r.predict_reference) rows.push_back(i);
  const auto pts = queries(f, rows);
  const auto s = predict_points(draws, f.prep.fit, pts, r.predict_seed, r.level);
  std::string out = "# config_hash=" + c.hash() + "\nrow,x,y,role,median,mean,lower,upper\n";
  for (std::size_t k = 0; k < rows.size(); ++k)
    out += std::to_string(rows[k]) + "," + format_double(s.sites[k].x) + "," +
           format_double(s.sites[k].y) + "," + role_name(f.data.role[rows[k]]) + "," +
           format_double(s.median[k]) + "," + format_double(s.mean[k]) + "," +
           format_double(s.lower[k]) + "," + format_double(s.upper[k]) + "\n";
  std::vector<std::string> files;
  const std::string p = (fs::path(r.out_dir) / "predictions.csv").string();
  atomic_write(p, out);
  files.push_back(p);
  if (r.grid) {
    const auto g = predict_grid(draws, f.prep.fit, *r.grid, derive_seed(r.predict_seed, 99), r.level);
    std::string go = "# config_hash=" + c.hash() + "\nx,y,median,mean,lower,upper\n";
    for (std::size_t k = 0; k < g.sites.size(); ++k)
      go += format_double(g.sites[k].x) + "," + format_double(g.sites[k].y) + "," +
            format_double(g.median[k]) + "," + format_double(g.mean[k]) + "," +
            format_double(g.lower[k]) + "," + format_double(g.upper[k]) + "\n";
    const std::string gp = (fs::path(r.out_dir) / "grid.csv").string();
    atomic_write(gp, go);
    files.push_back(gp);
  }
  write_manifest(r.out_dir, "predict", c, {{"data_hash", f.data_hash}}, files);
  std::cout << "predicted " << rows.size() << " rows\n";
  return 0;
}

// --------------------------------------------------------------------- score

double loglik_at_mean(const ChainDraws& d, const FitData& fit) {
  const auto m = posterior_mean(d);
  if (d.regression) {
    const std::size_t p = d.index_of("tau2");
    const double tau2 = m[p];
    std::vector<double> zbar(fit.size(), 0.0);
    for (const auto& z : d.latent)
      for (std::size_t i = 0; i < zbar.size(); ++i) zbar[i] += z[i] / static_cast<double>(d.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < fit.size(); ++i) {
      double mu = zbar[i];
      for (std::size_t k = 0; k < p; ++k)
        mu += fit.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * m[k];
      const double e = fit.y[i] - mu;
      ll += -0.5 * e * e / tau2 - 0.5 * std::log(2.0 * M_PI * tau2);
    }
    return ll;
  }
  const auto theta_n = theta_names(d.template_spec).size();
  const ModelSpec spec = unpack_theta(d.template_spec, std::span<const double>(m.data(), theta_n));
  WeightParams w;
  w.gamma = {m[d.index_of("gamma0")], m[d.index_of("gamma1")], m[d.index_of("gamma2")]};
  w.kappa2 = m[d.index_of("kappa2")];
  w.zeta = m[d.index_of("zeta")];
  return conditional_loglik(fit, spec, w);
}

int cmd_score(const Overrides& o) {
  const Config c = load_config(o, false);
  const RunConfig r = run_config(c);
  const Fitted f = prepare(r);
  const ChainDraws draws = load_matching_draws(o, r, f);
  const auto rows = f.data.rows_with(Role::Holdout);
  require(!rows.empty(), ErrorCategory::Data, "score: the dataset has no holdout rows");
  std::vector<double> observed;
  for (auto row : rows) {
    require(std::isfinite(f.data.value[row]), ErrorCategory::Data,
            "score: holdout row " + std::to_string(row + 1) + " has no value");
    observed.push_back(f.data.value[row]);
  }
  const auto pts = queries(f, rows);
  const auto s = predict_points(draws, f.prep.fit, pts, r.predict_seed, r.level, true);
  std::optional<Dic> d;
  if (!draws.loglik.empty()) d = dic(draws.loglik, loglik_at_mean(draws, f.prep.fit));
  const auto rep = score_predictions(s.draws, observed, r.level, d);
  const std::string txt = "# config_hash=" + c.hash() + "\n" + format_report(rep);
  std::string csv = "# config_hash=" + c.hash() + "\nrmspe,ci_coverage,ci_width,crps,pplc,dic\n";
  csv += format_double(rep.rmspe) + "," + format_double(rep.coverage) + "," +
         format_double(rep.width) + "," + format_double(rep.crps) + "," +
         format_double(rep.pplc.total) + "," + format_double(rep.dic ? rep.dic->dic : kNaN) + "\n";
  std::string sites = "row,x,y,observed,median,lower,upper,crps\n";
  for (std::size_t k = 0; k < rows.size(); ++k)
    sites += std::to_string(rows[k]) + "," + format_double(s.sites[k].x) + "," +
             format_double(s.sites[k].y) + "," + format_double(observed[k]) + "," +
             format_double(s.median[k]) + "," + format_double(s.lower[k]) + "," +
             format_double(s.upper[k]) + "," + format_double(rep.site_crps[k]) + "\n";
  const std::string p1 = (fs::path(r.out_dir) / "report.txt").string();
  const std::string p2 = (fs::path(r.out_dir) / "report.csv").string();
  const std::string p3 = (fs::path(r.out_dir) / "report_sites.csv").string();
  atomic_write(p1, txt);
  atomic_write(p2, csv);
  atomic_write(p3, sites);
  write_manifest(r.out_dir, "score", c, {{"data_hash", f.data_hash}}, {p1, p2, p3});
  std::cout << format_report(rep);
  return 0;
}

// --------------------------------------------------------------- tail-bounds

int cmd_tail_bounds(const Overrides& o) {
  const Config c = load_config(o, false);
  const RunConfig r = run_config(c);
  const Fitted f = prepare(r);
  ModelSpec spec = template_for(r, f.data);
  WeightParams w = r.weights;
  if (!o.draws.empty()) {
    const ChainDraws d = load_matching_draws(o, r, f);
    require(!d.regression, ErrorCategory::Unsupported, "tail-bounds: regression draws have no copula");
    const auto m = posterior_mean(d);
    spec = unpack_theta(d.template_spec, std::span<const double>(m.data(), theta_names(d.template_spec).size()));
    w.gamma = {m[d.index_of("gamma0")], m[d.index_of("gamma1")], m[d.index_of("gamma2")]};
    w.kappa2 = m[d.index_of("kappa2")];
    w.zeta = m[d.index_of("zeta")];
  }
  std::vector<std::size_t> rows(f.data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto pts = queries(f, rows);
  std::string out = "# config_hash=" + c.hash() + "\nrow,x,y,role,supported,lower,upper,p0,p1\n";
  std::string note;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    std::vector<double> dist;
    if (pts[k].reference) {
      dist = f.prep.fit.ref.neighbor_distances(*pts[k].reference);
    } else {
      dist = neighbors_of_query(f.prep.fit.ref, pts[k].site).distances;
    }
    out += std::to_string(rows[k]) + "," + format_double(pts[k].site.x) + "," +
           format_double(pts[k].site.y) + "," + role_name(f.data.role[rows[k]]) + ",";
    if (dist.empty()) {
      out += "0,nan,nan,nan,nan\n";
      continue;
    }
    const auto cut = cutoffs(dist, w.zeta);
    const auto wt = weights_from_G(cut, weight_mean(pts[k].site, w.gamma), w.kappa2);
    const auto tb = tail_lower_bounds(spec, dist, wt);
    note = tb.note;
    out += std::string(tb.supported ? "1" : "0") + "," + format_double(tb.lower) + "," +
           format_double(tb.upper) + "," + format_double(tb.p0.value_or(kNaN)) + "," +
           format_double(tb.p1.value_or(kNaN)) + "\n";
  }
  const std::string p = (fs::path(r.out_dir) / "tail_bounds.csv").string();
  atomic_write(p, out);
  write_manifest(r.out_dir, "tail-bounds", c, {{"data_hash", f.data_hash}}, {p});
  std::cout << "wrote tail bounds for " << pts.size() << " rows to " << p << "\n";
  if (!note.empty()) std::cout << note << "\n";
  return 0;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
    default: return 1;
  }
}

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
    default: return "unsupported";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearest-neighbor mixture process geostatistics"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (key = value)");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--iterations", o.iterations, "MCMC iterations");
    sub->add_option("--burnin", o.burnin, "MCMC burn-in");
    sub->add_option("--thin", o.thin, "MCMC thinning");
    sub->add_option("--neighbors,-L", o.neighbors, "Neighbor set size L");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--data", o.data, "Dataset CSV");
    sub->add_option("--draws", o.draws, "Directory holding fitted draws");
  };
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  auto* fit = app.add_subcommand("fit", "Run the posterior sampler");
  auto* pred = app.add_subcommand("predict", "Posterior predictive summaries");
  auto* score = app.add_subcommand("score", "Score held-out predictions");
  auto* tail = app.add_subcommand("tail-bounds", "Tail dependence lower bounds");
  for (auto* s : {sim, fit, pred, score, tail}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (pred->parsed()) return cmd_predict(o);
    if (score->parsed()) return cmd_score(o);
    if (tail->parsed()) return cmd_tail_bounds(o);
  } catch (const Error& e) {
    std::cerr << "error (" << category_name(e.category()) << "): " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
