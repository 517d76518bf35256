#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnmp {

/// Failure categories surfaced by the CLI as distinct exit codes.
enum class ErrorCategory { Config, Data, Numeric, Unsupported };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) {
  throw Error(c, msg);
}

inline void require(bool ok, ErrorCategory c, const std::string& msg) {
  if (!ok) fail(c, msg);
}

/// All samplers take an explicit engine owned by the caller.
using Rng = std::mt19937_64;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// splitmix64 finalizer; used to derive independent child seeds from
/// a parent seed and a stream counter.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random mantissa bits, offset by half an ulp so 0 is unreachable.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double std_normal(Rng& rng);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double log_sum_exp(std::span<const double> xs);

/// Draws an index with probability proportional to exp(logp[i]).
std::size_t sample_log_categorical(std::span<const double> logp, Rng& rng);

/// Draws an index with probability proportional to p[i] (p >= 0).
std::size_t sample_categorical(std::span<const double> p, Rng& rng);

}  // namespace nnmp
