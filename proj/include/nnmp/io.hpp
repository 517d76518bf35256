#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nnmp/geo.hpp"
#include "nnmp/mcmc.hpp"
#include "nnmp/predict.hpp"

namespace nnmp {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s, const std::string& context);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);
std::string read_file(const std::string& path);
std::uint64_t hash_file(const std::string& path);

/// Writes to a temporary sibling and renames it over `path`.
void atomic_write(const std::string& path, const std::string& content);

enum class Role { Ref, Holdout, Grid };
std::string role_name(Role r);

/// Rows of x, y, value, covariates..., partition, role. `value` is NaN
/// where missing (grid rows).
struct Dataset {
  std::vector<Site> sites;
  std::vector<double> value;
  std::vector<std::string> covariate_names;
  RowMatrix covariates;
  std::vector<std::size_t> partition;  // empty when the column is absent
  std::vector<Role> role;

  std::size_t size() const { return sites.size(); }
  std::vector<std::size_t> rows_with(Role r) const;
};

/// Header row required with columns x and y; optional value, partition and
/// role (ref | holdout | grid, default ref); all other columns are
/// covariates.
Dataset parse_dataset(std::string_view text, const std::string& source);
Dataset load_dataset(const std::string& path);
std::string format_dataset(const Dataset& d);
void save_dataset(const std::string& path, const Dataset& d);

/// Reference rows of a dataset ordered into a DAG. `rows[i]` is the dataset
/// row of DAG site i.
struct PreparedData {
  FitData fit;
  std::vector<std::size_t> rows;
};

PreparedData prepare_fit_data(const Dataset& d, std::size_t neighbors, const Ordering& ordering);

/// Flat key = value configuration with dotted keys; '#' starts a comment.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "config");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

  /// Rejects keys outside the schema.
  void check_schema() const;
  /// Sorted key = value text without output.* keys; the basis of hash().
  std::string canonical() const;
  std::string hash() const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct SimulationConfig {
  std::string generator = "tcopula-gamma";
  std::size_t nx = 200;
  std::size_t ny = 200;
  std::size_t n_ref = 2000;
  std::size_t n_holdout = 0;
  bool keep_grid = true;
  std::uint64_t seed = 1;
  double nu = 10.0;
  double phi_w = 1.0 / 12.0;
  double sigma1 = 10.0;
  double sigma2 = 1.0;
  double phi = 0.1;
  double a = 2.0;
  double b = 2.0;
};

struct RunConfig {
  std::string family = "gaussian";
  bool regression = false;
  ModelSpec spec = GaussianNNMP{};
  WeightParams weights;
  Priors priors;
  std::size_t neighbors = 10;
  Ordering ordering = Ordering::random(1);
  Schedule schedule;
  double level = 0.95;
  std::uint64_t predict_seed = 1;
  bool predict_reference = false;
  std::optional<GridSpec> grid;
  SimulationConfig sim;
  std::string data_path;
  std::string out_dir = ".";
};

/// Parses a family name into a model template (regression sets `regression`).
ModelSpec family_template(const std::string& family, std::size_t n_partitions,
                          std::size_t n_covariates, bool* regression = nullptr);

RunConfig run_config(const Config& c);

struct DrawsMeta {
  std::map<std::string, std::string> fields;  // from '# key=value' lines
};

/// params.csv holds one row per draw (parameters and loglik); latent.csv
/// holds the retained latent vectors when present.
std::vector<std::string> write_draws(const std::string& dir, const ChainDraws& d,
                                     const std::map<std::string, std::string>& meta);
ChainDraws read_draws(const std::string& dir, DrawsMeta* meta = nullptr);

/// Posterior mean of every named parameter.
std::vector<double> posterior_mean(const ChainDraws& d);

}  // namespace nnmp
