#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "nnmp/copulas.hpp"
#include "nnmp/io.hpp"
#include "nnmp/mcmc.hpp"
#include "nnmp/models.hpp"
#include "nnmp/predict.hpp"
#include "nnmp/regression.hpp"
#include "nnmp/scoring.hpp"
#include "nnmp/simulate.hpp"

namespace py = pybind11;
using namespace nnmp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Array& a) {
  const auto r = a.unchecked<1>();
  std::vector<double> v(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) v[static_cast<std::size_t>(i)] = r(i);
  return v;
}

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<Site> to_sites(const Array& x, const Array& y) {
  const auto xs = to_vec(x), ys = to_vec(y);
  require(xs.size() == ys.size(), ErrorCategory::Data, "x and y differ in length");
  std::vector<Site> s(xs.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = {xs[i], ys[i]};
  return s;
}

Config to_config(const std::map<std::string, py::object>& d) {
  Config c;
  for (const auto& [k, v] : d) c.set(k, py::str(v).cast<std::string>());
  c.check_schema();
  return c;
}

CopulaFamily copula_family(const std::string& name) {
  if (name == "gaussian") return CopulaFamily::Gaussian;
  if (name == "gumbel") return CopulaFamily::Gumbel;
  fail(ErrorCategory::Config, "unknown copula family '" + name + "'");
}

Copula make_copula(const std::string& family, double param) {
  return copula_family(family) == CopulaFamily::Gaussian ? Copula::gaussian(param)
                                                         : Copula::gumbel(param);
}

RowMatrix to_matrix(const std::optional<Array>& m,
                    std::size_t rows) {
  if (!m) return RowMatrix(static_cast<Eigen::Index>(rows), 0);
  const auto r = m->unchecked<2>();
  require(static_cast<std::size_t>(r.shape(0)) == rows, ErrorCategory::Data,
          "covariates need one row per site");
  RowMatrix out(r.shape(0), r.shape(1));
  for (py::ssize_t i = 0; i < r.shape(0); ++i)
    for (py::ssize_t j = 0; j < r.shape(1); ++j) out(i, j) = r(i, j);
  return out;
}

/// A fitted chain together with the data it was fitted to.
class Fit {
 public:
  Fit(const Array& x, const Array& y, const Array& value, const std::map<std::string, py::object>& config,
      const std::optional<Array>& covariates, const std::optional<std::vector<std::size_t>>& partition);

  std::vector<std::string> names() const { return draws_.names; }
  py::array_t<double> values() const {
    py::array_t<double> a({static_cast<py::ssize_t>(draws_.size()), static_cast<py::ssize_t>(draws_.names.size())});
    auto m = a.mutable_unchecked<2>();
    for (std::size_t d = 0; d < draws_.size(); ++d)
      for (std::size_t k = 0; k < draws_.names.size(); ++k)
        m(static_cast<py::ssize_t>(d), static_cast<py::ssize_t>(k)) = draws_.values[d][k];
    return a;
  }
  Array column(const std::string& name) const { return to_array(draws_.column(name)); }
  Array loglik() const { return to_array(draws_.loglik); }
  std::map<std::string, double> acceptance() const {
    std::map<std::string, double> out;
    for (const auto& [k, s] : draws_.acceptance) out[k] = s.rate();
    return out;
  }
  std::string family() const { return draws_.family; }

  py::dict predict(const Array& x, const Array& y, std::uint64_t seed, double level,
                   const std::optional<Array>& covariates,
                   const std::optional<std::vector<std::size_t>>& partition) const {
    const auto sites = to_sites(x, y);
    const RowMatrix cov = to_matrix(covariates, sites.size());
    std::vector<QueryPoint> q(sites.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i].site = sites[i];
      for (Eigen::Index k = 0; k < cov.cols(); ++k) q[i].covariates.push_back(cov(static_cast<Eigen::Index>(i), k));
      if (partition) q[i].partition = partition->at(i);
    }
    PredictiveSummary s;
    {
      py::gil_scoped_release release;
      s = predict_points(draws_, data_, q, seed, level);
    }
    py::dict out;
    out["median"] = to_array(s.median);
    out["mean"] = to_array(s.mean);
    out["lower"] = to_array(s.lower);
    out["upper"] = to_array(s.upper);
    return out;
  }

  void save(const std::string& dir) const { write_draws(dir, draws_, {}); }

 private:
  FitData data_;
  ChainDraws draws_;
};

}  // namespace

Fit::Fit(const Array& x, const Array& y, const Array& value, const std::map<std::string, py::object>& config,
         const std::optional<Array>& covariates, const std::optional<std::vector<std::size_t>>& partition) {
  const RunConfig r = run_config(to_config(config));
  Dataset d;
  d.sites = to_sites(x, y);
  d.value = to_vec(value);
  require(d.value.size() == d.sites.size(), ErrorCategory::Data, "value and coordinates differ in length");
  d.covariates = to_matrix(covariates, d.sites.size());
  for (Eigen::Index k = 0; k < d.covariates.cols(); ++k) d.covariate_names.push_back("x" + std::to_string(k));
  if (partition) d.partition = *partition;
  d.role.assign(d.sites.size(), Role::Ref);
  auto prep = prepare_fit_data(d, r.neighbors, r.ordering);
  data_ = std::move(prep.fit);

  py::gil_scoped_release release;
  if (r.regression) {
    draws_ = run_regression(data_, prior_median_regression(data_, r.priors), prior_median_weights(r.priors),
                            r.priors, r.schedule);
    return;
  }
  ModelSpec tmpl = r.spec;
  if (auto* m = std::get_if<ExtSkewGNNMP>(&tmpl)) {
    if (m->beta.empty()) m->beta.assign(static_cast<std::size_t>(data_.covariates.cols()), 0.0);
    std::size_t k = 1;
    for (auto p : data_.partition) k = std::max(k, p + 1);
    if (m->lambda.size() < k) m->lambda.assign(k, 0.0);
  }
  draws_ = run_chain(data_, prior_median_spec(tmpl, r.priors), prior_median_weights(r.priors), r.priors,
                     r.schedule);
}

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nearest-neighbor mixture process models";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.category()) {
        case ErrorCategory::Config:
        case ErrorCategory::Data: PyErr_SetString(PyExc_ValueError, e.what()); return;
        case ErrorCategory::Numeric: PyErr_SetString(PyExc_ArithmeticError, e.what()); return;
        case ErrorCategory::Unsupported: PyErr_SetString(PyExc_NotImplementedError, e.what()); return;
      }
    }
  });

  m.def("chi_coefficient", &chi_coefficient, py::arg("nu"), py::arg("rho0"));
  m.def("student_t_cdf", &student_t_cdf, py::arg("x"), py::arg("nu"));

  m.def("copula_density", [](const std::string& f, double p, double t1, double t2) {
    return copula_density(make_copula(f, p), t1, t2);
  }, py::arg("family"), py::arg("param"), py::arg("t1"), py::arg("t2"));
  m.def("copula_cdf", [](const std::string& f, double p, double t1, double t2) {
    return copula_cdf(make_copula(f, p), t1, t2);
  }, py::arg("family"), py::arg("param"), py::arg("t1"), py::arg("t2"));
  m.def("conditional_cdf", [](const std::string& f, double p, double t1, double t2) {
    return conditional_cdf(make_copula(f, p), t1, t2);
  }, py::arg("family"), py::arg("param"), py::arg("t1"), py::arg("t2"));
  m.def("inverse_conditional", [](const std::string& f, double p, double z, double t2) {
    return inverse_conditional(make_copula(f, p), z, t2);
  }, py::arg("family"), py::arg("param"), py::arg("z"), py::arg("t2"));
  m.def("tail_coefficients", [](const std::string& f, double p) {
    const auto t = tail_coefficients(make_copula(f, p));
    return std::make_pair(t.lower, t.upper);
  }, py::arg("family"), py::arg("param"));
  m.def("sample_copula", [](const std::string& f, double p, std::size_t n, std::uint64_t seed) {
    const auto c = make_copula(f, p);
    py::array_t<double> a({static_cast<py::ssize_t>(n), py::ssize_t{2}});
    auto w = a.mutable_unchecked<2>();
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [t1, t2] = sample_copula(c, rng);
      w(static_cast<py::ssize_t>(i), 0) = t1;
      w(static_cast<py::ssize_t>(i), 1) = t2;
    }
    return a;
  }, py::arg("family"), py::arg("param"), py::arg("n"), py::arg("seed") = 1);

  m.def("crps", [](const Array& draws, double y) { return crps_empirical(to_vec(draws), y); },
        py::arg("draws"), py::arg("observed"));
  m.def("empirical_tail", [](double q, const Array& u, const Array& v, bool upper) {
    const auto t = empirical_tail(q, to_vec(u), to_vec(v), upper);
    py::dict d;
    d["defined"] = t.defined;
    d["estimate"] = t.estimate;
    d["se"] = t.se;
    return d;
  }, py::arg("q"), py::arg("u"), py::arg("v"), py::arg("upper") = true);

  m.def("simulate_field", [](const std::string& generator, const Array& x, const Array& y, std::uint64_t seed,
                             const std::map<std::string, double>& kw) {
    const auto sites = to_sites(x, y);
    auto get = [&](const char* k, double fb) {
      const auto it = kw.find(k);
      return it == kw.end() ? fb : it->second;
    };
    FieldRealization f;
    if (generator == "tcopula-gamma")
      f = simulate_tcopula_gamma(sites, get("nu", 10.0), get("phi_w", 1.0 / 12), Gamma{get("a", 2), get("b", 2)}, seed);
    else if (generator == "skew-gp")
      f = simulate_skew_gp(sites, get("sigma1", 10.0), get("sigma2", 1.0), get("phi", 0.1), seed);
    else if (generator == "beta-copula")
      f = simulate_beta_copula(sites, Beta{get("a", 3), get("b", 6)}, get("phi", 0.1), seed);
    else
      fail(ErrorCategory::Config, "unknown generator '" + generator + "'");
    return to_array(f.values);
  }, py::arg("generator"), py::arg("x"), py::arg("y"), py::arg("seed") = 1,
     py::arg("params") = std::map<std::string, double>{});

  m.def("simulate_nnmp", [](const Array& x, const Array& y, const std::map<std::string, py::object>& config,
                            std::uint64_t seed) {
    const RunConfig r = run_config(to_config(config));
    require(!r.regression, ErrorCategory::Config, "simulate_nnmp needs a response-level family");
    const auto ref = build_reference(to_sites(x, y), r.neighbors, r.ordering);
    const auto f = simulate_nnmp(r.spec, ref, r.weights, seed);
    std::vector<double> out(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) out[ref.order()[i]] = f.values[i];
    return to_array(out);
  }, py::arg("x"), py::arg("y"), py::arg("config") = std::map<std::string, py::object>{}, py::arg("seed") = 1);

  py::class_<Fit>(m, "Fit")
      .def(py::init<const Array&, const Array&, const Array&, const std::map<std::string, py::object>&,
                    const std::optional<Array>&, const std::optional<std::vector<std::size_t>>&>(),
           py::arg("x"), py::arg("y"), py::arg("value"), py::arg("config") = std::map<std::string, py::object>{},
           py::arg("covariates") = py::none(), py::arg("partition") = py::none())
      .def_property_readonly("family", &Fit::family)
      .def_property_readonly("names", &Fit::names)
      .def_property_readonly("values", &Fit::values)
      .def_property_readonly("loglik", &Fit::loglik)
      .def_property_readonly("acceptance", &Fit::acceptance)
      .def("column", &Fit::column, py::arg("name"))
      .def("predict", &Fit::predict, py::arg("x"), py::arg("y"), py::arg("seed") = 1, py::arg("level") = 0.95,
           py::arg("covariates") = py::none(), py::arg("partition") = py::none())
      .def("save", &Fit::save, py::arg("directory"));
}
