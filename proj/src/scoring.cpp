#include "nnmp/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "nnmp/common.hpp"
#include "nnmp/predict.hpp"

namespace nnmp {

double crps_empirical(std::span<const double> draws, double observed) {
  const std::size_t m = draws.size();
  require(m >= 2, ErrorCategory::Data, "CRPS: need at least 2 draws");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  double abs_dev = 0.0;
  double pair = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    abs_dev += std::abs(x[i] - observed);
    // sum_{i<j} (x_j - x_i) = sum_i x_i (2i - m + 1) with 0-based i.
    pair += x[i] * (2.0 * static_cast<double>(i) - static_cast<double>(m) + 1.0);
  }
  const double md = static_cast<double>(m);
  return abs_dev / md - pair / (md * md);
}

double crps_bruteforce(std::span<const double> draws, double observed) {
  const std::size_t m = draws.size();
  require(m >= 2, ErrorCategory::Data, "CRPS: need at least 2 draws");
  double a = 0.0;
  double b = 0.0;
  for (double x : draws) {
    a += std::abs(x - observed);
    for (double y : draws) b += std::abs(x - y);
  }
  const double md = static_cast<double>(m);
  return a / md - 0.5 * b / (md * md);
}

Pplc pplc(const std::vector<std::vector<double>>& replicates, std::span<const double> observed) {
  require(replicates.size() == observed.size(), ErrorCategory::Data,
          "PPLC: replicate and observation counts differ");
  Pplc out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const auto& r = replicates[i];
    require(!r.empty(), ErrorCategory::Data, "PPLC: empty replicate set");
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(r.size());
    out.g += (mean - observed[i]) * (mean - observed[i]);
    out.p += var;
  }
  out.total = out.g + out.p;
  return out;
}

Dic dic(std::span<const double> loglik, double loglik_at_mean) {
  require(!loglik.empty(), ErrorCategory::Data, "DIC: no log-likelihood values");
  double s = 0.0;
  for (double l : loglik) {
    require(std::isfinite(l), ErrorCategory::Numeric, "DIC: non-finite log-likelihood");
    s += -2.0 * l;
  }
  require(std::isfinite(loglik_at_mean), ErrorCategory::Numeric,
          "DIC: non-finite log-likelihood at the posterior mean");
  Dic out;
  out.dbar = s / static_cast<double>(loglik.size());
  out.pd = out.dbar - (-2.0 * loglik_at_mean);
  out.dic = out.dbar + out.pd;
  return out;
}

TailEstimate empirical_tail(double q, std::span<const double> u, std::span<const double> v,
                            bool upper) {
  require(q > 0.0 && q < 1.0, ErrorCategory::Config, "empirical tail: q must lie in (0, 1)");
  require(u.size() == v.size() && !u.empty(), ErrorCategory::Data,
          "empirical tail: paired samples of equal nonzero length required");
  auto threshold = [&](std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    const auto k = static_cast<std::size_t>(
        std::floor((upper ? q : 1.0 - q) * static_cast<double>(s.size() - 1)));
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
    return s[k];
  };
  const double tu = threshold(u);
  const double tv = threshold(v);
  TailEstimate out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const bool ev = upper ? v[i] > tv : v[i] < tv;
    if (!ev) continue;
    ++out.marginal;
    if (upper ? u[i] > tu : u[i] < tu) ++out.joint;
  }
  if (out.marginal == 0) return out;
  out.defined = true;
  const double m = static_cast<double>(out.marginal);
  out.estimate = static_cast<double>(out.joint) / m;
  out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / m);
  return out;
}

double rmspe(std::span<const double> predicted, std::span<const double> observed) {
  require(predicted.size() == observed.size() && !observed.empty(), ErrorCategory::Data,
          "RMSPE: prediction and observation counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    s += (predicted[i] - observed[i]) * (predicted[i] - observed[i]);
  return std::sqrt(s / static_cast<double>(observed.size()));
}

double coverage(std::span<const double> lower, std::span<const double> upper,
                std::span<const double> observed) {
  require(lower.size() == observed.size() && upper.size() == observed.size() && !observed.empty(),
          ErrorCategory::Data, "coverage: interval and observation counts differ");
  std::size_t c = 0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    if (observed[i] >= lower[i] && observed[i] <= upper[i]) ++c;
  return static_cast<double>(c) / static_cast<double>(observed.size());
}

double mean_width(std::span<const double> lower, std::span<const double> upper) {
  require(lower.size() == upper.size() && !lower.empty(), ErrorCategory::Data,
          "interval width: bound counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) s += upper[i] - lower[i];
  return s / static_cast<double>(lower.size());
}

ScoreReport score_predictions(const std::vector<std::vector<double>>& draws,
                              std::span<const double> observed, double level,
                              std::optional<Dic> d) {
  require(draws.size() == observed.size() && !observed.empty(), ErrorCategory::Data,
          "score: draw sets and observations differ in count");
  ScoreReport r;
  r.level = level;
  const double a = 0.5 * (1.0 - level);
  std::vector<double> med, lo, hi;
  double crps_sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    med.push_back(sample_quantile(draws[i], 0.5));
    lo.push_back(sample_quantile(draws[i], a));
    hi.push_back(sample_quantile(draws[i], 1.0 - a));
    r.site_crps.push_back(crps_empirical(draws[i], observed[i]));
    crps_sum += r.site_crps.back();
  }
  r.rmspe = rmspe(med, observed);
  r.coverage = coverage(lo, hi, observed);
  r.width = mean_width(lo, hi);
  r.crps = crps_sum / static_cast<double>(observed.size());
  r.pplc = pplc(draws, observed);
  r.dic = d;
  return r;
}

namespace {
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
}  // namespace

std::string format_report(const ScoreReport& r) {
  std::ostringstream os;
  os << "# rmspe = sqrt(mean((median - y)^2)); crps = mean(E|X-y| - E|X-X'|/2)\n"
     << "# pplc = G + P, G = sum (mean_rep - y)^2, P = sum var_rep\n"
     << "# dic = Dbar + pD, D = -2 log L, pD = Dbar - D(posterior mean)\n"
     << "# coverage counts closed equal-tailed intervals\n";
  os << "rmspe=" << num(r.rmspe) << "\n";
  os << "coverage=" << num(r.coverage) << "\n";
  os << "level=" << num(r.level) << "\n";
  os << "width=" << num(r.width) << "\n";
  os << "crps=" << num(r.crps) << "\n";
  os << "pplc.g=" << num(r.pplc.g) << "\n";
  os << "pplc.p=" << num(r.pplc.p) << "\n";
  os << "pplc=" << num(r.pplc.total) << "\n";
  if (r.dic) {
    os << "dic.dbar=" << num(r.dic->dbar) << "\n";
    os << "dic.pd=" << num(r.dic->pd) << "\n";
    os << "dic=" << num(r.dic->dic) << "\n";
  }
  return os.str();
}

}  // namespace nnmp
