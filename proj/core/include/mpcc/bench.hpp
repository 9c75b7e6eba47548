#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpcc/dfo.hpp"
#include "mpcc/hypertune.hpp"
#include "mpcc/svm.hpp"

namespace mpcc {

/// Sidecar preprocessing declaration for delimited text files with a header
/// row. Rows with missing values are dropped, declared categorical columns
/// are one-hot encoded, remaining feature columns are standardized when
/// requested, and the label column is mapped to ±1 (either numerically or
/// through label_map; rows whose label is absent from a nonempty map are
/// excluded).
struct PreprocessSpec {
  std::vector<std::string> categorical;
  std::vector<std::string> drop;
  std::map<std::string, int> label_map;
  std::string label_column = "label";
  bool standardize = true;
  char delimiter = ',';

  static PreprocessSpec from_json_file(const std::string& path);
  static PreprocessSpec from_json_text(const std::string& text);
};

Dataset load_dataset(const std::string& path,
                     const PreprocessSpec& spec = {});

/// In-place per-column standardization (population variance); constant
/// columns are centred only.
void standardize(Dataset& data);

enum class SyntheticKind { Circles, Moons, Xor, Linear, SwissRoll, Hastie };

SyntheticKind parse_synthetic_kind(const std::string& name);
const char* to_string(SyntheticKind kind);

/// Seeded synthetic classification datasets:
///  - circles: one class on the unit sphere, the other on a half-radius
///    sphere, Gaussian coordinate noise (defaults n=54, d=2, noise 0.2);
///  - moons: two interweaving half-circles in the plane;
///  - xor: uniform on [-1,1]^2, positive iff the coordinate product is
///    positive;
///  - linear: uniform on [0,1]^d split by a random hyperplane;
///  - swiss_roll: two spiral sheets rolled inside one another (d=3);
///  - hastie: x ~ N(0, I_10), positive iff ‖x‖² > 9.34 (exact rule, noise
///    ignored).
Dataset generate_synthetic(SyntheticKind kind, int n, int d, double noise,
                           std::uint64_t seed);

/// Write a dataset in the loader's file format.
void save_dataset(const Dataset& data, const std::string& path);

struct RunRecord {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  double C0 = 0.0, gamma0 = 0.0;
  double C = 0.0, gamma = 0.0;
  double objective = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_time = 0.0;
  std::string status;
  double final_param = 0.0;
  double mpcc_feasibility = 0.0;
  int iterations = 0;

  std::string to_json() const;
  static RunRecord from_json(const std::string& line);
};

std::vector<RunRecord> read_records(const std::string& path);
void write_records(const std::vector<RunRecord>& records,
                   const std::string& path);  // atomic: tmp file + rename

struct ProfilePoint {
  std::string method;
  double adjusted_runtime = 0.0;  // mean runtime / success fraction
  double solved_fraction = 0.0;
};

/// Restart-adjusted runtimes per (method, dataset): mean runtime divided by
/// the fraction p of runs reaching the dataset's target test accuracy
/// (p = 0 gives the +inf sentinel and drops the instance from the curve).
/// Points trace the cumulative fraction of datasets solved within t.
std::vector<ProfilePoint> performance_profile(
    const std::vector<RunRecord>& records,
    const std::map<std::string, double>& target_accuracy);

struct DatasetConfig {
  std::string name;
  // either a synthetic recipe ...
  std::string synthetic;  // kind tag, empty for file datasets
  int n = 54, d = 2;
  double noise = 0.2;
  std::uint64_t seed = 7;
  bool standardize = true;
  // ... or a file
  std::string path;
  std::string preprocess;  // sidecar spec path, optional
};

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<std::string> methods;  // solver tags and/or dfo tags
  std::vector<std::uint64_t> seeds = {1};
  TuneParams tune;
  int dfo_random_evals = 50;
  int dfo_bayesian_evals = 50;
  double dfo_pattern_h0 = 1.0;
  int dfo_grid_exp_lo = -3, dfo_grid_exp_hi = 3;
  std::string out = "results";

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ExperimentOutcome {
  std::vector<RunRecord> records;
  std::string summary;  // quartile table, one block per dataset
  int failures = 0;
};

/// Run every (dataset, method, seed) combination, append per-run records,
/// and emit quartile summaries. Results are written atomically under
/// config.out as records.jsonl and summary.txt.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

Dataset dataset_from_config(const DatasetConfig& config);

}  // namespace mpcc
