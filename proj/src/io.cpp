#include "nnmp/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace nnmp {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

const std::set<std::string>& schema_keys() {
  static const std::set<std::string> keys = {
      "model.family", "model.mu", "model.sigma2", "model.phi", "model.lambda", "model.location",
      "model.beta", "model.partitions", "model.a", "model.b", "model.tau2", "model.lomax.shift",
      "model.lomax.alpha", "weights.gamma", "weights.kappa2", "weights.zeta", "data.path",
      "data.neighbors", "data.ordering", "data.ordering_seed", "mcmc.iterations", "mcmc.burnin",
      "mcmc.thin", "mcmc.seed", "mcmc.adapt", "mcmc.keep_latent", "mcmc.step",
      "prior.gamma.mean", "prior.gamma.var", "prior.kappa2.shape", "prior.kappa2.scale",
      "prior.zeta.shape", "prior.zeta.scale", "prior.phi.shape", "prior.phi.scale",
      "prior.sigma2.shape", "prior.sigma2.scale", "prior.tau2.shape", "prior.tau2.scale",
      "prior.mu.mean", "prior.mu.var", "prior.lambda.mean", "prior.lambda.var", "prior.a.shape",
      "prior.a.rate", "prior.b.shape", "prior.b.rate", "prior.beta.mean", "prior.beta.var",
      "predict.level", "predict.seed", "predict.reference", "predict.grid.nx", "predict.grid.ny",
      "predict.grid.xmin", "predict.grid.xmax", "predict.grid.ymin", "predict.grid.ymax",
      "simulate.generator", "simulate.nx", "simulate.ny", "simulate.n_ref", "simulate.n_holdout",
      "simulate.keep_grid", "simulate.seed", "simulate.nu", "simulate.phi_w", "simulate.sigma1",
      "simulate.sigma2", "simulate.phi", "simulate.a", "simulate.b", "output.dir"};
  return keys;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  s = trim(s);
  if (s == "nan" || s == "NaN" || s == "NA" || s.empty()) return kNaN;
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCategory::Data, context + "not a number: '" + std::string(s) + "'");
  return v;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::Data, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_file(const std::string& path) { return fnv1a(read_file(path)); }

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCategory::Data, "cannot write " + tmp);
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorCategory::Data, "write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCategory::Data, "cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::string role_name(Role r) {
  switch (r) {
    case Role::Ref: return "ref";
    case Role::Holdout: return "holdout";
    case Role::Grid: return "grid";
  }
  return "ref";
}

std::vector<std::size_t> Dataset::rows_with(Role r) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < role.size(); ++i)
    if (role[i] == r) out.push_back(i);
  return out;
}

Dataset parse_dataset(std::string_view text, const std::string& source) {
  const auto ls = lines(text);
  std::size_t li = 0;
  while (li < ls.size() && (trim(ls[li]).empty() || trim(ls[li]).front() == '#')) ++li;
  require(li < ls.size(), ErrorCategory::Data, source + ": missing header row");
  const auto header = split(ls[li], ',');
  const std::size_t header_line = li + 1;
  std::optional<std::size_t> cx, cy, cv, cp, cr;
  std::vector<std::size_t> ccov;
  Dataset d;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string name(header[k]);
    require(!name.empty(), ErrorCategory::Data, at_line(source, header_line) + "empty column name");
    require(seen.insert(name).second, ErrorCategory::Data,
            at_line(source, header_line) + "duplicate column '" + name + "'");
    if (name == "x") cx = k;
    else if (name == "y") cy = k;
    else if (name == "value") cv = k;
    else if (name == "partition") cp = k;
    else if (name == "role") cr = k;
    else {
      ccov.push_back(k);
      d.covariate_names.push_back(name);
    }
  }
  require(cx && cy, ErrorCategory::Data, at_line(source, header_line) + "columns x and y are required");
  std::vector<std::vector<double>> cov;
  for (++li; li < ls.size(); ++li) {
    const auto raw = trim(ls[li]);
    if (raw.empty() || raw.front() == '#') continue;
    const std::string ctx = at_line(source, li + 1);
    const auto f = split(raw, ',');
    require(f.size() == header.size(), ErrorCategory::Data,
            ctx + "expected " + std::to_string(header.size()) + " fields, found " +
                std::to_string(f.size()));
    const double x = parse_double(f[*cx], ctx);
    const double y = parse_double(f[*cy], ctx);
    require(std::isfinite(x) && std::isfinite(y), ErrorCategory::Data, ctx + "non-finite coordinate");
    d.sites.push_back({x, y});
    d.value.push_back(cv ? parse_double(f[*cv], ctx) : kNaN);
    std::vector<double> row;
    for (auto k : ccov) {
      const double v = parse_double(f[k], ctx);
      require(std::isfinite(v), ErrorCategory::Data, ctx + "non-finite covariate");
      row.push_back(v);
    }
    cov.push_back(std::move(row));
    if (cp) {
      const double p = parse_double(f[*cp], ctx);
      require(p >= 0.0 && p == std::floor(p), ErrorCategory::Data,
              ctx + "partition label must be a non-negative integer");
      d.partition.push_back(static_cast<std::size_t>(p));
    }
    Role r = Role::Ref;
    if (cr) {
      const auto s = f[*cr];
      if (s == "ref" || s.empty()) r = Role::Ref;
      else if (s == "holdout") r = Role::Holdout;
      else if (s == "grid") r = Role::Grid;
      else fail(ErrorCategory::Data, ctx + "unknown role '" + std::string(s) + "'");
    }
    d.role.push_back(r);
  }
  d.covariates.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(ccov.size()));
  for (std::size_t i = 0; i < cov.size(); ++i)
    for (std::size_t k = 0; k < ccov.size(); ++k)
      d.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cov[i][k];
  return d;
}

Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path), path); }

std::string format_dataset(const Dataset& d) {
  std::string out = "x,y,value";
  for (const auto& n : d.covariate_names) out += "," + n;
  if (!d.partition.empty()) out += ",partition";
  out += ",role\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += format_double(d.sites[i].x) + "," + format_double(d.sites[i].y) + "," +
           format_double(d.value[i]);
    for (Eigen::Index k = 0; k < d.covariates.cols(); ++k)
      out += "," + format_double(d.covariates(static_cast<Eigen::Index>(i), k));
    if (!d.partition.empty()) out += "," + std::to_string(d.partition[i]);
    out += "," + role_name(d.role[i]) + "\n";
  }
  return out;
}

void save_dataset(const std::string& path, const Dataset& d) { atomic_write(path, format_dataset(d)); }

PreparedData prepare_fit_data(const Dataset& d, std::size_t neighbors, const Ordering& ordering) {
  const auto rows = d.rows_with(Role::Ref);
  require(rows.size() >= 2, ErrorCategory::Data,
          "dataset has " + std::to_string(rows.size()) + " reference rows; at least 2 are needed");
  std::vector<Site> sites;
  for (auto r : rows) {
    require(std::isfinite(d.value[r]), ErrorCategory::Data,
            "reference row " + std::to_string(r + 1) + " has no value");
    sites.push_back(d.sites[r]);
  }
  PreparedData p;
  p.fit.ref = build_reference(sites, neighbors, ordering);
  const std::size_t n = rows.size();
  p.rows.resize(n);
  p.fit.y.resize(n);
  p.fit.covariates.resize(static_cast<Eigen::Index>(n), d.covariates.cols());
  if (!d.partition.empty()) p.fit.partition.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rows[p.fit.ref.order()[i]];
    p.rows[i] = r;
    p.fit.y[i] = d.value[r];
    p.fit.covariates.row(static_cast<Eigen::Index>(i)) = d.covariates.row(static_cast<Eigen::Index>(r));
    if (!d.partition.empty()) p.fit.partition[i] = d.partition[r];
  }
  return p;
}

Config Config::parse(std::string_view text, const std::string& source) {
  Config c;
  const auto ls = lines(text);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto line = ls[i];
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorCategory::Config,
            at_line(source, i + 1) + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    require(!key.empty(), ErrorCategory::Config, at_line(source, i + 1) + "empty key");
    require(std::count(key.begin(), key.end(), '.') <= 3, ErrorCategory::Config,
            at_line(source, i + 1) + "key nests too deeply: " + key);
    require(!c.has(key), ErrorCategory::Config, at_line(source, i + 1) + "duplicate key " + key);
    c.kv_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::Config, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  double v = 0.0;
  try {
    v = parse_double(it->second, "config " + key + ": ");
  } catch (const Error& e) {
    fail(ErrorCategory::Config, e.what());
  }
  require(!std::isnan(v), ErrorCategory::Config, "config " + key + ": value is not a number");
  return v;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const auto s = trim(it->second);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCategory::Config,
          "config " + key + ": expected a non-negative integer, got '" + it->second + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const auto& s = it->second;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorCategory::Config, "config " + key + ": expected a boolean, got '" + s + "'");
}

std::vector<double> Config::get_list(const std::string& key, std::vector<double> fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<double> out;
  if (trim(it->second).empty()) return out;
  for (auto f : split(it->second, ',')) {
    try {
      out.push_back(parse_double(f, "config " + key + ": "));
    } catch (const Error& e) {
      fail(ErrorCategory::Config, e.what());
    }
  }
  return out;
}

void Config::check_schema() const {
  for (const auto& [k, v] : kv_) {
    if (schema_keys().count(k)) continue;
    if (k.rfind("mcmc.step.", 0) == 0) continue;
    fail(ErrorCategory::Config, "config: unknown key '" + k + "'");
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    if (k.rfind("output.", 0) == 0) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string Config::hash() const { return hex64(fnv1a(canonical())); }

ModelSpec family_template(const std::string& family, std::size_t n_partitions,
                          std::size_t n_covariates, bool* regression) {
  if (regression) *regression = false;
  if (family == "gaussian") return GaussianNNMP{};
  if (family == "skew") return SkewGNNMP{};
  if (family == "ext-skew") {
    ExtSkewGNNMP m;
    m.beta.assign(n_covariates, 0.0);
    m.lambda.assign(std::max<std::size_t>(n_partitions, 1), 0.0);
    return m;
  }
  if (family == "gnnmp-regression") {
    if (regression) *regression = true;
    return GaussianNNMP{0.0, 1.0, 0.1};
  }
  if (family == "lomax") return LomaxNNMP{};
  const auto dash = family.rfind('-');
  if (dash != std::string::npos) {
    const std::string cop = family.substr(0, dash);
    const std::string mar = family.substr(dash + 1);
    CopulaNNMP m;
    bool ok = true;
    if (cop == "gaussian-copula") m.copula = CopulaFamily::Gaussian;
    else if (cop == "gumbel-copula") m.copula = CopulaFamily::Gumbel;
    else ok = false;
    if (mar == "gamma") m.marginal = Gamma{2.0, 2.0};
    else if (mar == "beta") m.marginal = Beta{3.0, 6.0};
    else ok = false;
    if (ok) return m;
  }
  fail(ErrorCategory::Config, "unknown model family '" + family + "'");
}

RunConfig run_config(const Config& c) {
  c.check_schema();
  RunConfig r;
  r.family = c.get("model.family", "gaussian");
  auto& pr = r.priors;
  const auto gm = c.get_list("prior.gamma.mean", {pr.gamma_mean[0], pr.gamma_mean[1], pr.gamma_mean[2]});
  require(gm.size() == 3, ErrorCategory::Config, "prior.gamma.mean needs 3 values");
  pr.gamma_mean = {gm[0], gm[1], gm[2]};
  pr.gamma_cov = c.get_double("prior.gamma.var", 2.0) * Eigen::Matrix3d::Identity();
  auto ig = [&](const std::string& name, InvGammaPrior& p) {
    p.shape = c.get_double("prior." + name + ".shape", p.shape);
    p.scale = c.get_double("prior." + name + ".scale", p.scale);
    require(p.shape > 0.0 && p.scale > 0.0, ErrorCategory::Config,
            "prior." + name + ": shape and scale must be > 0");
  };
  ig("kappa2", pr.kappa2);
  ig("zeta", pr.zeta);
  ig("phi", pr.phi);
  ig("sigma2", pr.sigma2);
  ig("tau2", pr.tau2);
  auto ga = [&](const std::string& name, GammaPrior& p) {
    p.shape = c.get_double("prior." + name + ".shape", p.shape);
    p.rate = c.get_double("prior." + name + ".rate", p.rate);
    require(p.shape > 0.0 && p.rate > 0.0, ErrorCategory::Config,
            "prior." + name + ": shape and rate must be > 0");
  };
  ga("a", pr.a);
  ga("b", pr.b);
  pr.mu.mean = c.get_double("prior.mu.mean", pr.mu.mean);
  pr.mu.var = c.get_double("prior.mu.var", pr.mu.var);
  pr.lambda.mean = c.get_double("prior.lambda.mean", pr.lambda.mean);
  pr.lambda.var = c.get_double("prior.lambda.var", pr.lambda.var);
  pr.beta_mean = c.get_list("prior.beta.mean", {});
  pr.beta_var = c.get_list("prior.beta.var", {});
  require(pr.beta_mean.size() == pr.beta_var.size(), ErrorCategory::Config,
          "prior.beta.mean and prior.beta.var must have the same length");

  const auto beta = c.get_list("model.beta", {});
  r.spec = family_template(r.family, c.get_size("model.partitions", 1), beta.size(), &r.regression);
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianNNMP>) {
          m.mu = c.get_double("model.mu", m.mu);
          m.sigma2 = c.get_double("model.sigma2", m.sigma2);
          m.phi = c.get_double("model.phi", m.phi);
        } else if constexpr (std::is_same_v<T, SkewGNNMP>) {
          m.lambda = c.get_double("model.lambda", m.lambda);
          m.sigma2 = c.get_double("model.sigma2", m.sigma2);
          m.phi = c.get_double("model.phi", m.phi);
          m.location = c.get_double("model.location", m.location);
        } else if constexpr (std::is_same_v<T, ExtSkewGNNMP>) {
          m.beta = beta;
          m.lambda = c.get_list("model.lambda", m.lambda);
          m.sigma2 = c.get_double("model.sigma2", m.sigma2);
          m.phi = c.get_double("model.phi", m.phi);
        } else if constexpr (std::is_same_v<T, CopulaNNMP>) {
          m.phi = c.get_double("model.phi", m.phi);
          if (auto* g = std::get_if<Gamma>(&m.marginal)) {
            g->shape = c.get_double("model.a", g->shape);
            g->rate = c.get_double("model.b", g->rate);
          } else {
            auto& b = std::get<Beta>(m.marginal);
            b.a = c.get_double("model.a", b.a);
            b.b = c.get_double("model.b", b.b);
          }
        } else {
          m.shift = c.get_list("model.lomax.shift", {});
          m.alpha = c.get_list("model.lomax.alpha", {});
        }
      },
      r.spec);
  if (!std::holds_alternative<LomaxNNMP>(r.spec)) validate(r.spec);

  const auto wg = c.get_list("weights.gamma", {r.weights.gamma[0], r.weights.gamma[1], r.weights.gamma[2]});
  require(wg.size() == 3, ErrorCategory::Config, "weights.gamma needs 3 values");
  r.weights.gamma = {wg[0], wg[1], wg[2]};
  r.weights.kappa2 = c.get_double("weights.kappa2", r.weights.kappa2);
  r.weights.zeta = c.get_double("weights.zeta", r.weights.zeta);
  validate(r.weights);

  r.neighbors = c.get_size("data.neighbors", 10);
  require(r.neighbors >= 1, ErrorCategory::Config, "data.neighbors must be >= 1");
  const std::string ord = c.get("data.ordering", "random");
  const auto oseed = c.get_u64("data.ordering_seed", 1);
  if (ord == "random") r.ordering = Ordering::random(oseed);
  else if (ord == "as-given") r.ordering = Ordering::as_given();
  else if (ord == "coordinate-sum") r.ordering = Ordering::coordinate_sum();
  else fail(ErrorCategory::Config, "data.ordering must be random, as-given or coordinate-sum");
  r.data_path = c.get("data.path", "");

  auto& s = r.schedule;
  s.iterations = c.get_size("mcmc.iterations", s.iterations);
  s.burnin = c.get_size("mcmc.burnin", s.burnin);
  s.thin = c.get_size("mcmc.thin", s.thin);
  s.seed = c.get_u64("mcmc.seed", s.seed);
  s.adapt = c.get_bool("mcmc.adapt", s.adapt);
  s.keep_latent = c.get_bool("mcmc.keep_latent", s.keep_latent);
  s.default_step = c.get_double("mcmc.step", s.default_step);
  for (const auto& [k, v] : c.entries())
    if (k.rfind("mcmc.step.", 0) == 0) s.steps[k.substr(10)] = c.get_double(k, 0.1);
  validate(s);

  r.level = c.get_double("predict.level", r.level);
  require(r.level > 0.0 && r.level < 1.0, ErrorCategory::Config, "predict.level must lie in (0, 1)");
  r.predict_seed = c.get_u64("predict.seed", s.seed);
  r.predict_reference = c.get_bool("predict.reference", false);
  if (c.has("predict.grid.nx") || c.has("predict.grid.ny")) {
    GridSpec g;
    g.nx = c.get_size("predict.grid.nx", g.nx);
    g.ny = c.get_size("predict.grid.ny", g.ny);
    g.xmin = c.get_double("predict.grid.xmin", g.xmin);
    g.xmax = c.get_double("predict.grid.xmax", g.xmax);
    g.ymin = c.get_double("predict.grid.ymin", g.ymin);
    g.ymax = c.get_double("predict.grid.ymax", g.ymax);
    r.grid = g;
  }

  auto& sim = r.sim;
  sim.generator = c.get("simulate.generator", sim.generator);
  sim.nx = c.get_size("simulate.nx", sim.nx);
  sim.ny = c.get_size("simulate.ny", sim.ny);
  sim.n_ref = c.get_size("simulate.n_ref", sim.n_ref);
  sim.n_holdout = c.get_size("simulate.n_holdout", sim.n_holdout);
  sim.keep_grid = c.get_bool("simulate.keep_grid", sim.keep_grid);
  sim.seed = c.get_u64("simulate.seed", sim.seed);
  sim.nu = c.get_double("simulate.nu", sim.nu);
  sim.phi_w = c.get_double("simulate.phi_w", sim.phi_w);
  sim.sigma1 = c.get_double("simulate.sigma1", sim.sigma1);
  sim.sigma2 = c.get_double("simulate.sigma2", sim.sigma2);
  sim.phi = c.get_double("simulate.phi", sim.phi);
  const bool beta_gen = sim.generator == "beta-copula";
  sim.a = c.get_double("simulate.a", beta_gen ? 3.0 : 2.0);
  sim.b = c.get_double("simulate.b", beta_gen ? 6.0 : 2.0);

  r.out_dir = c.get("output.dir", ".");
  return r;
}

namespace {

std::string header_block(const ChainDraws& d, const std::map<std::string, std::string>& meta) {
  std::string out = "# family=" + d.family + "\n";
  out += "# iterations=" + std::to_string(d.iterations) + "\n";
  out += "# burnin=" + std::to_string(d.burnin) + "\n";
  out += "# thin=" + std::to_string(d.thin) + "\n";
  out += "# seed=" + std::to_string(d.seed) + "\n";
  if (const auto* m = std::get_if<SkewGNNMP>(&d.template_spec))
    out += "# location=" + format_double(m->location) + "\n";
  for (const auto& [k, st] : d.acceptance)
    out += "# accept." + k + "=" + format_double(st.rate()) + "\n";
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  return out;
}

}  // namespace

std::vector<std::string> write_draws(const std::string& dir,
                                     const ChainDraws& d,
                                     const std::map<std::string, std::string>& meta) {
  std::vector<std::string> files;
  const std::string head = header_block(d, meta);
  std::string p = head + "draw";
  for (const auto& n : d.names) p += "," + n;
  p += ",loglik\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    p += std::to_string(k);
    for (double v : d.values[k]) p += "," + format_double(v);
    p += "," + format_double(k < d.loglik.size() ? d.loglik[k] : kNaN) + "\n";
  }
  const std::string pp = (fs::path(dir) / "params.csv").string();
  atomic_write(pp, p);
  files.push_back(pp);
  if (!d.latent_name.empty() && !d.latent.empty()) {
    std::string l = head + "# latent=" + d.latent_name + "\ndraw";
    const std::size_t n = d.latent.front().size();
    for (std::size_t i = 0; i < n; ++i) l += "," + d.latent_name + std::to_string(i);
    l += "\n";
    for (std::size_t k = 0; k < d.latent.size(); ++k) {
      l += std::to_string(k);
      for (double v : d.latent[k]) l += "," + format_double(v);
      l += "\n";
    }
    const std::string lp = (fs::path(dir) / "latent.csv").string();
    atomic_write(lp, l);
    files.push_back(lp);
  }
  return files;
}

ChainDraws read_draws(const std::string& dir, DrawsMeta* meta_out) {
  const std::string pp = (fs::path(dir) / "params.csv").string();
  const std::string text = read_file(pp);
  DrawsMeta meta;
  ChainDraws d;
  std::vector<std::string> header;
  const auto ls = lines(text);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto line = trim(ls[i]);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos)
        meta.fields[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
      continue;
    }
    const auto f = split(line, ',');
    if (header.empty()) {
      for (auto s : f) header.emplace_back(s);
      require(header.size() >= 2 && header.front() == "draw" && header.back() == "loglik",
              ErrorCategory::Data, pp + ": malformed header");
      continue;
    }
    require(f.size() == header.size(), ErrorCategory::Data,
            at_line(pp, i + 1) + "field count does not match the header");
    std::vector<double> row;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) row.push_back(parse_double(f[k], at_line(pp, i + 1)));
    d.values.push_back(std::move(row));
    d.loglik.push_back(parse_double(f.back(), at_line(pp, i + 1)));
  }
  require(!header.empty(), ErrorCategory::Data, pp + ": no header row");
  d.names.assign(header.begin() + 1, header.end() - 1);
  auto field = [&](const std::string& k) {
    const auto it = meta.fields.find(k);
    require(it != meta.fields.end(), ErrorCategory::Data, pp + ": missing metadata " + k);
    return it->second;
  };
  d.family = field("family");
  d.iterations = static_cast<std::size_t>(std::stoull(field("iterations")));
  d.burnin = static_cast<std::size_t>(std::stoull(field("burnin")));
  d.thin = static_cast<std::size_t>(std::stoull(field("thin")));
  d.seed = std::stoull(field("seed"));
  std::size_t n_beta = 0;
  std::size_t n_lambda = 0;
  for (const auto& n : d.names) {
    if (n.rfind("beta", 0) == 0) ++n_beta;
    if (n.rfind("lambda", 0) == 0 && n != "lambda") ++n_lambda;
  }
  d.template_spec = family_template(d.family, n_lambda, n_beta, &d.regression);
  if (auto* m = std::get_if<SkewGNNMP>(&d.template_spec))
    m->location = parse_double(field("location"), pp + ": ");
  for (const auto& [k, v] : meta.fields)
    if (k.rfind("accept.", 0) == 0) {
      auto& st = d.acceptance[k.substr(7)];
      st.proposed = 1000000;
      st.accepted = static_cast<std::size_t>(parse_double(v, pp + ": ") * 1e6 + 0.5);
    }

  const fs::path lp = fs::path(dir) / "latent.csv";
  if (fs::exists(lp)) {
    const std::string lt = read_file(lp.string());
    bool seen_header = false;
    const auto ll = lines(lt);
    for (std::size_t i = 0; i < ll.size(); ++i) {
      const auto line = trim(ll[i]);
      if (line.empty()) continue;
      if (line.front() == '#') {
        const auto body = trim(line.substr(1));
        if (body.rfind("latent=", 0) == 0) d.latent_name = std::string(body.substr(7));
        continue;
      }
      if (!seen_header) {
        seen_header = true;
        continue;
      }
      const auto f = split(line, ',');
      std::vector<double> row;
      for (std::size_t k = 1; k < f.size(); ++k) row.push_back(parse_double(f[k], at_line(lp.string(), i + 1)));
      d.latent.push_back(std::move(row));
    }
    require(d.latent.size() == d.values.size(), ErrorCategory::Data,
            lp.string() + ": latent draw count does not match params.csv");
  }
  if (meta_out) *meta_out = std::move(meta);
  return d;
}

std::vector<double> posterior_mean(const ChainDraws& d) {
  require(d.size() > 0, ErrorCategory::Data, "posterior mean of an empty chain");
  std::vector<double> m(d.names.size(), 0.0);
  for (const auto& row : d.values)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += row[k];
  for (auto& v : m) v /= static_cast<double>(d.size());
  return m;
}

}  // namespace nnmp
