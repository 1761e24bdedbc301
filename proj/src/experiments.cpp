#include "dagnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/evaluator.hpp"
#include "dagnet/random.hpp"

namespace dagnet {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, fmt::format("not a number: '{}'", s));
  }
  if (pos != s.size()) throw ParseError(line, fmt::format("not a number: '{}'", s));
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError(line, fmt::format("not an unsigned integer: '{}'", s));
  }
  return std::stoull(s);
}

std::vector<std::size_t> hidden_sizes(const FamilyConfig& c, std::size_t width) {
  std::vector<std::size_t> sizes{c.input_dim};
  for (std::size_t l = 1; l < c.depth; ++l) sizes.push_back(width);
  sizes.push_back(c.outputs);
  return sizes;
}

// Gradients of every sample, residuals and loss at w.
struct Batch {
  std::vector<std::vector<double>> rows;
  std::vector<double> residuals;
  double loss = 0.0;
};

Batch evaluate_batch(const NetworkSpec& spec, std::span<const double> w, const Dataset& data,
                     std::size_t output) {
  Batch b;
  std::vector<double> values;
  b.rows = jacobian_rows(spec, w, data.inputs, output, &values);
  b.residuals.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    b.residuals[i] = values[i] - data.labels[i];
    b.loss += 0.5 * b.residuals[i] * b.residuals[i];
  }
  return b;
}

}  // namespace

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names{"fcn",    "densenet", "random-dag",
                                              "conv1d", "skip",     "linear"};
  return names;
}

void validate_family(const FamilyConfig& c) {
  const auto& names = family_names();
  if (std::find(names.begin(), names.end(), c.family) == names.end()) {
    throw Error(fmt::format("unknown family '{}'", c.family));
  }
  if (c.input_dim == 0) throw Error("input_dim must be positive");
  if (c.outputs == 0) throw Error("outputs must be positive");
  if (c.depth == 0) throw Error("depth must be positive");
  if (c.family == "skip" && c.depth < 2) throw Error("skip family needs depth >= 2");
  if (c.family == "random-dag" && c.depth < 2) throw Error("random-dag family needs depth >= 2");
  if (!(c.dropout_p >= 0.0 && c.dropout_p < 1.0)) throw Error("dropout must lie in [0, 1)");
  if (c.family == "conv1d" && (c.kernel % 2 == 0 || c.input_len == 0)) {
    throw Error("conv1d needs an odd kernel and a positive input length");
  }
}

NetworkSpec build_family(const FamilyConfig& c, std::size_t width, std::uint64_t seed) {
  validate_family(c);
  if (width == 0) throw Error("width must be positive");
  std::optional<NetworkSpec> spec;
  if (c.family == "fcn") {
    spec.emplace(build_fcn(hidden_sizes(c, width), c.activation));
  } else if (c.family == "densenet") {
    spec.emplace(build_densenet(hidden_sizes(c, width), c.activation));
  } else if (c.family == "random-dag") {
    RandomDagConfig rc{hidden_sizes(c, width), width, c.kappa, c.activation};
    spec.emplace(build_random_dag(rc, derive_seed(seed, 1)));
  } else if (c.family == "conv1d") {
    std::vector<std::size_t> channels{1};
    for (std::size_t l = 1; l < c.depth; ++l) channels.push_back(width);
    channels.push_back(c.outputs);
    Conv1dOptions opt;
    opt.dense_head = true;
    opt.activation = c.activation;
    spec.emplace(build_conv1d(channels, c.kernel, c.input_len, opt));
  } else if (c.family == "skip") {
    spec.emplace(add_skip_connections(build_fcn(hidden_sizes(c, width), c.activation),
                                      c.skip_policy, derive_seed(seed, 3)));
  } else {
    const std::vector<std::size_t> sizes{width, c.outputs};
    spec.emplace(build_fcn(sizes, Activation::identity));
  }
  if (c.dropout_p > 0.0) spec.emplace(drop_edges(*spec, c.dropout_p, derive_seed(seed, 2)));
  if (c.bottleneck_count > 0) {
    spec.emplace(inject_bottleneck(*spec, c.bottleneck_count, c.bottleneck_indegree));
  }
  return std::move(*spec);
}

Metric parse_metric(const std::string& name) {
  if (name == "hessnorm" || name == "ball_hessian_norm") return Metric::hessnorm;
  if (name == "lin_residual" || name == "lin-residual") return Metric::lin_residual;
  if (name == "ntk_drift" || name == "ntk-drift") return Metric::ntk_drift;
  if (name == "preact_hessian" || name == "preact-hessian") return Metric::preact_hessian;
  throw Error(fmt::format("unknown metric '{}'", name));
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::hessnorm: return "hessnorm";
    case Metric::lin_residual: return "lin_residual";
    case Metric::ntk_drift: return "ntk_drift";
    case Metric::preact_hessian: return "preact_hessian";
  }
  return "?";
}

Dataset synthetic_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n == 0) throw Error("dataset size must be positive");
  Dataset d{gaussian_inputs(n, dim, seed, 4.0), {}};
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(i % 2 == 0 ? 1.0 : -1.0);
  return d;
}

Dataset load_dataset_csv(const std::string& text) {
  Dataset d;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  double bound = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() < 2) throw ParseError(lineno, "need at least one feature and a label");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(trim(c), lineno));
    const double label = row.back();
    row.pop_back();
    if (d.inputs.dim == 0) d.inputs.dim = row.size();
    if (row.size() != d.inputs.dim) {
      throw ParseError(lineno, fmt::format("expected {} features, got {}", d.inputs.dim,
                                           row.size()));
    }
    for (double v : row) bound = std::max(bound, std::abs(v));
    d.inputs.push_back(row);
    d.labels.push_back(label);
  }
  if (d.labels.empty()) throw Error("dataset has no rows");
  d.inputs.sup_norm_bound = bound;
  return d;
}

TrainRecord train_gd(const NetworkSpec& spec, std::span<const double> params0,
                     const Dataset& data, const TrainOptions& options) {
  if (data.size() == 0 || data.inputs.size() != data.size()) {
    throw Error("dataset must be non-empty with one label per input");
  }
  if (options.stride == 0) throw Error("snapshot stride must be positive");
  const std::size_t p = spec.param_count();
  const Batch start = evaluate_batch(spec, params0, data, options.output);
  const NtkGram k0 = gram_from_rows(start.rows);
  const double target = options.loss_target_ratio * start.loss;

  TrainRecord rec;
  double lr = options.lr;
  if (lr <= 0.0) {
    const auto eig = dense_sym_eig(k0.matrix);
    const double lmax = eig.empty() ? 0.0 : eig.back();
    lr = lmax > 0.0 ? 1.0 / lmax : 1.0;
  }
  if (start.loss == 0.0 || start.loss <= target) {
    rec.losses = {start.loss};
    rec.snapshots = {{0, 0.0}};
    rec.lr = lr;
    rec.converged = true;
    rec.final_params.assign(params0.begin(), params0.end());
    return rec;
  }
  const bool k0_zero = dense_spectral_norm(k0.matrix) == 0.0;
  auto drift = [&](const std::vector<std::vector<double>>& rows) {
    return k0_zero ? 0.0 : ntk_rel_change(k0.matrix, gram_from_rows(rows).matrix);
  };

  for (std::size_t attempt = 0;; ++attempt) {
    rec = TrainRecord{};
    rec.lr = lr;
    rec.halvings = attempt;
    std::vector<double> w(params0.begin(), params0.end());
    std::vector<double> grad(p);
    Batch b = start;
    bool diverged = false;
    std::size_t t = 0;
    for (;; ++t) {
      rec.losses.push_back(b.loss);
      if (!std::isfinite(b.loss) || b.loss > options.divergence_factor * start.loss) {
        diverged = true;
        break;
      }
      if (t > 0 && b.loss > rec.losses[t - 1]) rec.monotone = false;
      const bool done = b.loss <= target || t == options.max_steps;
      if (t % options.stride == 0 || done) {
        const double d = t == 0 ? 0.0 : drift(b.rows);
        rec.snapshots.push_back({t, d});
        rec.max_drift = std::max(rec.max_drift, d);
      }
      if (done) {
        rec.converged = b.loss <= target;
        break;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < data.size(); ++i) axpy(b.residuals[i], b.rows[i], grad);
      axpy(-lr, grad, w);
      b = evaluate_batch(spec, w, data, options.output);
    }
    rec.steps = t;
    if (!diverged) {
      rec.final_params = std::move(w);
      return rec;
    }
    if (attempt >= options.max_halvings) {
      rec.diverged = true;
      rec.final_params = std::move(w);
      return rec;
    }
    lr *= 0.5;
  }
}

void validate_sweep(const SweepConfig& config) {
  validate_family(config.family);
  if (config.widths.empty()) throw Error("width list is empty");
  if (config.seeds.empty()) throw Error("seed list is empty");
  for (std::size_t w : config.widths) {
    if (w == 0) throw Error("widths must be positive");
  }
  if (!(config.radius > 0.0) || !std::isfinite(config.radius)) {
    throw Error("radius must be finite and positive");
  }
  if (config.probes == 0) throw Error("probes must be at least 1");
  if (config.data_size == 0) throw Error("data size must be positive");
}

ParamVector cell_params(const NetworkSpec& spec, std::uint64_t seed) {
  return init_params(spec, derive_seed(seed, 4));
}

std::vector<double> cell_input(const NetworkSpec& spec, std::uint64_t seed) {
  return gaussian_inputs(1, spec.input_count(), derive_seed(seed, 7)).data;
}

ProbeOptions cell_probe_options(std::size_t probes, const SpectralOptions& spectral,
                                std::uint64_t seed) {
  ProbeOptions probe;
  probe.probes = probes;
  probe.seed = derive_seed(seed, 5);
  probe.spectral = spectral;
  probe.spectral.seed = derive_seed(seed, 6);
  return probe;
}

SweepRecord run_cell(const SweepConfig& config, std::size_t width, std::uint64_t seed) {
  SweepRecord rec;
  rec.family = config.family.family;
  rec.width = width;
  rec.seed = seed;
  rec.metric = to_string(config.metric);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const NetworkSpec spec = build_family(config.family, width, seed);
    rec.depth = spec.depth();
    const ParamVector w0 = cell_params(spec, seed);
    const ProbeOptions probe = cell_probe_options(config.probes, config.spectral, seed);
    const std::vector<double> x = cell_input(spec, seed);
    switch (config.metric) {
      case Metric::hessnorm: {
        const Ball ball(w0.values, config.radius);
        const BallScan s = ball_hessian_norm(spec, ball, x, Target::output(0), probe);
        rec.value = s.sup;
        rec.converged = s.all_converged;
        break;
      }
      case Metric::lin_residual: {
        const Ball ball(w0.values, config.radius);
        const BallScan s = lin_residual(spec, ball, x, Target::output(0), probe);
        rec.value = s.sup;
        rec.converged = s.all_converged;
        break;
      }
      case Metric::preact_hessian: {
        const std::size_t layer = config.preact_layer == 0
                                      ? std::max<std::size_t>(spec.depth() - 1, 1)
                                      : config.preact_layer;
        const Ball ball(w0.values, config.radius);
        const BallScan s = preactivation_hessian_norm(spec, ball, x, layer, 0, probe);
        rec.value = s.sup;
        rec.converged = s.all_converged;
        break;
      }
      case Metric::ntk_drift: {
        const Dataset data = config.data
                                 ? *config.data
                                 : synthetic_dataset(config.data_size, spec.input_count(),
                                                     config.data_seed);
        const TrainRecord tr = train_gd(spec, w0.values, data, config.train);
        rec.value = tr.max_drift;
        rec.converged = tr.converged && !tr.diverged;
        break;
      }
    }
    if (!std::isfinite(rec.value)) rec.converged = false;
  } catch (const std::exception& e) {
    rec.value = std::numeric_limits<double>::quiet_NaN();
    rec.converged = false;
    rec.error = e.what();
  }
  if (config.timing) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
  }
  return rec;
}

std::vector<SweepRecord> width_sweep(const SweepConfig& config) {
  validate_sweep(config);
  std::vector<std::pair<std::size_t, std::uint64_t>> cells;
  for (std::size_t w : config.widths) {
    for (std::uint64_t s : config.seeds) cells.emplace_back(w, s);
  }
  std::vector<SweepRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      out[i] = run_cell(config, cells[i].first, cells[i].second);
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, cells.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  std::stable_sort(out.begin(), out.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.width, a.seed) < std::tie(b.width, b.seed);
  });
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records,
                     const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& r : records) {
    if (!r.error.empty()) out << fmt::format("# error width={} seed={}: {}\n", r.width, r.seed, r.error);
  }
  out << kSweepCsvHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{:.17g},{},{}\n", r.family, r.width, r.depth, r.seed,
                       r.metric, r.value, r.converged ? 1 : 0,
                       static_cast<long long>(std::llround(r.wall_ms)));
  }
}

std::vector<SweepRecord> read_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kSweepCsvHeader) throw ParseError(lineno, "unexpected CSV header");
      header = true;
      continue;
    }
    const auto c = split(line, ',');
    if (c.size() != 8) throw ParseError(lineno, fmt::format("expected 8 fields, got {}", c.size()));
    SweepRecord r;
    r.family = c[0];
    r.width = parse_uint(c[1], lineno);
    r.depth = parse_uint(c[2], lineno);
    r.seed = parse_uint(c[3], lineno);
    r.metric = c[4];
    r.value = c[5] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(c[5], lineno);
    r.converged = c[6] == "1";
    r.wall_ms = parse_double(c[7], lineno);
    out.push_back(std::move(r));
  }
  if (!header) throw Error("CSV header not found");
  return out;
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("x and y differ in length");
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      fit.warnings.push_back(fmt::format("dropped point ({}, {}): not positive", x[i], y[i]));
      continue;
    }
    lx.push_back(std::log2(x[i]));
    ly.push_back(std::log2(y[i]));
  }
  const std::size_t k = lx.size();
  if (k < 2) throw Error("slope fit needs at least two widths with positive values");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error("slope fit needs at least two distinct widths");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (k > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
  } else {
    fit.stderr_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

SlopeFit fit_loglog_slope(const std::vector<SweepRecord>& records) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  std::vector<std::string> warnings;
  for (const auto& r : records) {
    if (!std::isfinite(r.value) || r.value <= 0.0) {
      warnings.push_back(fmt::format("excluded width={} seed={} value={}: not positive",
                                     r.width, r.seed, r.value));
      continue;
    }
    auto& a = acc[r.width];
    a.first += r.value;
    a.second += 1;
  }
  std::vector<double> x, y;
  std::vector<std::size_t> widths;
  for (const auto& [w, a] : acc) {
    widths.push_back(w);
    x.push_back(static_cast<double>(w));
    y.push_back(a.first / static_cast<double>(a.second));
  }
  SlopeFit fit = fit_loglog_slope(x, y);
  fit.widths = std::move(widths);
  fit.means = std::move(y);
  fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

std::vector<DriftRow> aggregate_by_width(const std::vector<SweepRecord>& records) {
  std::map<std::size_t, std::vector<const SweepRecord*>> groups;
  for (const auto& r : records) groups[r.width].push_back(&r);
  std::vector<DriftRow> rows;
  for (const auto& [w, rs] : groups) {
    DriftRow row;
    row.width = w;
    double sum = 0.0;
    for (const auto* r : rs) {
      row.all_converged = row.all_converged && r->converged;
      if (!std::isfinite(r->value)) continue;
      sum += r->value;
      ++row.count;
    }
    if (row.count > 0) {
      row.mean = sum / static_cast<double>(row.count);
      double ss = 0.0;
      for (const auto* r : rs) {
        if (std::isfinite(r->value)) ss += (r->value - row.mean) * (r->value - row.mean);
      }
      row.std = row.count > 1 ? std::sqrt(ss / static_cast<double>(row.count - 1)) : 0.0;
      row.stderr_mean = row.std / std::sqrt(static_cast<double>(row.count));
    } else {
      row.mean = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

DriftTable ntk_drift_experiment(SweepConfig config) {
  config.metric = Metric::ntk_drift;
  DriftTable table;
  table.records = width_sweep(config);
  table.rows = aggregate_by_width(table.records);
  if (table.rows.size() < 2) {
    table.fit_error = "slope fit needs at least two widths";
    return table;
  }
  try {
    table.fit = fit_loglog_slope(table.records);
  } catch (const Error& e) {
    table.fit_error = e.what();
  }
  return table;
}

}  // namespace dagnet
