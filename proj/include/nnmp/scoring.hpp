#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nnmp {

/// E|X - y| - E|X - X'|/2 over the empirical distribution of the draws.
double crps_empirical(std::span<const double> draws, double observed);

/// Direct O(m^2) evaluation of the same quantity.
double crps_bruteforce(std::span<const double> draws, double observed);

struct Pplc {
  double g = 0.0;  // sum of squared deviations of replicate means
  double p = 0.0;  // sum of replicate variances
  double total = 0.0;
};

/// replicates[i] holds the predictive replicates of observation i.
Pplc pplc(const std::vector<std::vector<double>>& replicates, std::span<const double> observed);

struct Dic {
  double dbar = 0.0;  // mean of -2 log L over draws
  double pd = 0.0;    // dbar - D(posterior mean)
  double dic = 0.0;   // dbar + pd
};

Dic dic(std::span<const double> loglik_per_draw, double loglik_at_mean);

struct TailEstimate {
  bool defined = false;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t joint = 0;
  std::size_t marginal = 0;
};

/// P(U > F_U^{-1}(q) | V > F_V^{-1}(q)) with empirical quantiles; `upper`
/// false gives the lower-tail version with < F^{-1}(1 - q).
TailEstimate empirical_tail(double q, std::span<const double> u, std::span<const double> v,
                            bool upper = true);

double rmspe(std::span<const double> predicted, std::span<const double> observed);

/// Fraction of observations inside the closed interval [lower, upper].
double coverage(std::span<const double> lower, std::span<const double> upper,
                std::span<const double> observed);
double mean_width(std::span<const double> lower, std::span<const double> upper);

struct ScoreReport {
  double rmspe = 0.0;
  double coverage = 0.0;
  double level = 0.95;
  double width = 0.0;
  double crps = 0.0;
  Pplc pplc;
  std::optional<Dic> dic;
  std::vector<double> site_crps;
};

/// Scores held-out predictions. `draws[i]` are predictive draws for
/// observation i; point predictions are predictive medians.
ScoreReport score_predictions(const std::vector<std::vector<double>>& draws,
                              std::span<const double> observed, double level = 0.95,
                              std::optional<Dic> dic = std::nullopt);

/// Key-value text rendering with the formulas used.
std::string format_report(const ScoreReport& r);

}  // namespace nnmp
