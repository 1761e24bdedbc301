#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dagnet/activation.hpp"
#include "dagnet/builders.hpp"
#include "dagnet/evaluator.hpp"
#include "dagnet/linearity.hpp"
#include "dagnet/network.hpp"
#include "dagnet/spectral.hpp"

namespace dagnet {

/// Width-parameterized network family. Hidden layers have `width` neurons;
/// the linear family is the depth-1 identity net with `width` inputs.
struct FamilyConfig {
  std::string family = "fcn";  // fcn | densenet | random-dag | conv1d | skip | linear
  std::size_t input_dim = 16;
  std::size_t depth = 3;
  std::size_t outputs = 1;
  double dropout_p = 0.0;
  std::size_t kernel = 3;      // conv1d
  std::size_t input_len = 8;   // conv1d, single input channel
  double kappa = 2.0;          // random-dag
  SkipPolicy skip_policy = SkipPolicy::previous_layer_same_index;
  std::size_t bottleneck_count = 0;
  std::size_t bottleneck_indegree = 1;
  Activation activation = Activation::tanh;
};

const std::vector<std::string>& family_names();
void validate_family(const FamilyConfig& config);
NetworkSpec build_family(const FamilyConfig& config, std::size_t width, std::uint64_t seed);

enum class Metric { hessnorm, lin_residual, ntk_drift, preact_hessian };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

struct TrainOptions {
  double lr = 0.0;                 // <= 0: 1 / lambda_max(K_0)
  std::size_t max_halvings = 6;
  std::size_t max_steps = 5000;
  double loss_target_ratio = 1e-2; // stop at loss <= ratio * initial loss
  std::size_t stride = 10;         // NTK snapshot stride
  double divergence_factor = 1e6;
  std::size_t output = 0;
};

struct NtkSnapshot {
  std::size_t step = 0;
  double rel_change = 0.0;
};

struct TrainRecord {
  std::vector<double> losses;  // losses[t] is the loss before step t + 1
  std::vector<NtkSnapshot> snapshots;
  double max_drift = 0.0;
  std::size_t steps = 0;
  double lr = 0.0;
  std::size_t halvings = 0;
  bool converged = false;
  bool diverged = false;
  bool monotone = true;
  std::vector<double> final_params;
};

/// Full-batch gradient descent on 0.5 * sum (f(x_i) - y_i)^2.
TrainRecord train_gd(const NetworkSpec& spec, std::span<const double> params0,
                     const Dataset& data, const TrainOptions& options = {});

/// n rows of N(0, I) truncated at 4, labels +1, -1, +1, ...
Dataset synthetic_dataset(std::size_t n, std::size_t dim, std::uint64_t seed);

/// CSV rows of features followed by the label; '#' lines are skipped.
Dataset load_dataset_csv(const std::string& text);

struct SweepConfig {
  FamilyConfig family;
  std::vector<std::size_t> widths;
  std::vector<std::uint64_t> seeds;
  Metric metric = Metric::hessnorm;
  double radius = 1.0;
  std::size_t probes = 8;
  SpectralOptions spectral;
  std::size_t data_size = 10;
  std::uint64_t data_seed = 0;
  std::optional<Dataset> data;     // replaces the synthetic set when present
  std::size_t preact_layer = 0;    // 0: layer depth - 1
  TrainOptions train;
  std::size_t jobs = 1;
  bool timing = false;             // wall_ms stays 0 otherwise
};

/// Throws Error on an empty width or seed list or a bad family.
void validate_sweep(const SweepConfig& config);

struct SweepRecord {
  std::string family;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  std::string error;  // empty on success
};

/// One record per (width, seed), sorted by (width, seed). Cell failures are
/// recorded, not thrown.
std::vector<SweepRecord> width_sweep(const SweepConfig& config);

/// Seed streams of one cell, shared with single-network runs so they
/// reproduce sweep cells exactly.
ParamVector cell_params(const NetworkSpec& spec, std::uint64_t seed);
std::vector<double> cell_input(const NetworkSpec& spec, std::uint64_t seed);
ProbeOptions cell_probe_options(std::size_t probes, const SpectralOptions& spectral,
                                std::uint64_t seed);

/// Metric for one cell.
SweepRecord run_cell(const SweepConfig& config, std::size_t width, std::uint64_t seed);

inline constexpr const char* kSweepCsvHeader =
    "family,width,depth,seed,metric,value,converged,wall_ms";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records,
                     const std::vector<std::string>& comments = {});
std::vector<SweepRecord> read_sweep_csv(const std::string& text);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;  // NaN with only two widths
  std::vector<std::size_t> widths;
  std::vector<double> means;
  std::vector<std::string> warnings;
};

/// OLS of log2(mean value) on log2(width). Non-positive or non-finite
/// values are dropped with a warning; fewer than two widths throws Error.
SlopeFit fit_loglog_slope(const std::vector<SweepRecord>& records);
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct DriftRow {
  std::size_t width = 0;
  double mean = 0.0;
  double std = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
  bool all_converged = true;
};

struct DriftTable {
  std::vector<DriftRow> rows;
  std::optional<SlopeFit> fit;
  std::string fit_error;
  std::vector<SweepRecord> records;
};

/// ntk_drift sweep aggregated per width; the fit is skipped for a single width.
DriftTable ntk_drift_experiment(SweepConfig config);
std::vector<DriftRow> aggregate_by_width(const std::vector<SweepRecord>& records);

}  // namespace dagnet
