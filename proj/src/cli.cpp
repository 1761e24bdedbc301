#include "dagnet/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dagnet/autodiff.hpp"
#include "dagnet/builders.hpp"
#include "dagnet/error.hpp"
#include "dagnet/evaluator.hpp"
#include "dagnet/experiments.hpp"
#include "dagnet/format.hpp"
#include "dagnet/linearity.hpp"
#include "dagnet/plot.hpp"
#include "dagnet/random.hpp"

#ifndef DAGNET_VERSION
#define DAGNET_VERSION "0.0.0"
#endif

namespace dagnet {

namespace {

struct Options {
  std::string dag;
  std::string family = "fcn";
  std::string widths = "8,16,32,64";
  std::size_t width = 64;
  std::size_t depth = 3;
  std::string seeds = "5";
  std::uint64_t seed = 0;
  double radius = 1.0;
  std::size_t probes = 8;
  double tol = 1e-6;
  std::size_t max_iter = 200;
  std::string metric = "hessnorm";
  double lr = 0.0;
  std::size_t steps = 5000;
  std::string data;
  std::string out;
  std::size_t jobs = 1;
  std::string config;

  std::string activation = "tanh";
  std::size_t input_dim = 16;
  std::size_t outputs = 1;
  double dropout = 0.0;
  std::size_t kernel = 3;
  std::size_t input_len = 8;
  double kappa = 2.0;
  std::string skip_policy = "previous-layer-same-index";
  std::size_t bottleneck = 0;
  std::size_t bottleneck_indegree = 1;
  std::size_t n = 10;
  std::uint64_t data_seed = 0;
  std::size_t stride = 10;
  double loss_ratio = 1e-2;
  std::string target = "output:0";
  std::size_t preact_layer = 0;
  std::string input;
  double eps = 1e-6;
  std::size_t segment_points = 16;
  bool timing = false;
  std::string csv;
  std::string x = "width";
  std::string y = "value";
};

// Domain failure already reported; maps to exit code 1.
struct Failed {};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(fmt::format("not an unsigned integer: '{}'", s));
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(fmt::format("integer out of range: '{}'", s));
  }
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size()) throw Error(fmt::format("not a number: '{}'", item));
    out.push_back(v);
  }
  return out;
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

FamilyConfig family_config(const Options& o) {
  FamilyConfig f;
  f.family = o.family;
  f.input_dim = o.input_dim;
  f.depth = o.depth;
  f.outputs = o.outputs;
  f.dropout_p = o.dropout;
  f.kernel = o.kernel;
  f.input_len = o.input_len;
  f.kappa = o.kappa;
  f.skip_policy = parse_skip_policy(o.skip_policy);
  f.bottleneck_count = o.bottleneck;
  f.bottleneck_indegree = o.bottleneck_indegree;
  f.activation = parse_activation(o.activation);
  validate_family(f);
  return f;
}

SpectralOptions spectral_options(const Options& o) {
  if (!(o.tol > 0.0)) throw Error("tol must be positive");
  if (o.max_iter == 0) throw Error("max-iter must be positive");
  SpectralOptions s;
  s.tol = o.tol;
  s.max_iter = o.max_iter;
  return s;
}

NetworkSpec load_spec(const Options& o) {
  if (!o.dag.empty()) return NetworkSpec(load_network_file(o.dag));
  return build_family(family_config(o), o.width, o.seed);
}

Target parse_target(const std::string& text) {
  const auto parts = [&] {
    std::vector<std::string> p;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) p.push_back(item);
    return p;
  }();
  if (parts.size() == 2 && parts[0] == "output") return Target::output(parse_u64(parts[1]));
  if (parts.size() == 3 && parts[0] == "preact") {
    return Target::pre_activation(parse_u64(parts[1]), parse_u64(parts[2]));
  }
  throw Error(fmt::format("bad target '{}': expected output:K or preact:L:K", text));
}

Dataset load_dataset(const Options& o, std::size_t dim) {
  if (!o.data.empty()) {
    Dataset d = load_dataset_csv(load_text_file(o.data));
    if (d.inputs.dim != dim) {
      throw Error(fmt::format("dataset has {} features, network expects {}", d.inputs.dim, dim));
    }
    return d;
  }
  return synthetic_dataset(o.n, dim, o.data_seed);
}

class Runner {
 public:
  Runner(CLI::App& sub, Options& o, std::ostream& out, std::ostream& err)
      : sub_(sub), o_(o), out_(out), err_(err) {}

  // Comment lines stamping version, command and the resolved configuration.
  std::vector<std::string> stamp() const {
    std::vector<std::string> lines{fmt::format("dagnet {}", DAGNET_VERSION),
                                   fmt::format("command: {}", sub_.get_name())};
    for (const CLI::Option* opt : sub_.get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name == "config" || name == "out") continue;
      std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
      if (opt->get_expected_min() == 0 && value.empty()) value = opt->count() ? "true" : "false";
      lines.push_back(fmt::format("{} = {}", name, value));
    }
    return lines;
  }

  // Writes text to --out (prefixed by the stamp) or to stdout as is.
  void emit(const std::string& text, bool stamp_stdout = false) {
    std::string head;
    for (const auto& l : stamp()) head += "# " + l + "\n";
    if (o_.out.empty()) {
      out_ << (stamp_stdout ? head : std::string()) << text;
    } else {
      save_text_file(o_.out, head + text);
    }
  }

  int validate() {
    const Dag dag = Dag(load_network_file(o_.dag).dag());
    const ValidationReport report = dagnet::validate(dag);
    if (report.ok()) {
      emit("ok\n");
      return 0;
    }
    for (const auto& v : report.violations) err_ << describe(v) << '\n';
    return 1;
  }

  int layers() {
    const NetworkDescription desc = load_network_file(o_.dag);
    const Dag dag = desc.dag();
    const ValidationReport report = dagnet::validate(dag);
    if (!report.ok()) {
      for (const auto& v : report.violations) err_ << describe(v) << '\n';
      return 1;
    }
    const LayerAssignment la = assign_layers(dag);
    const DegreeProfile prof = degree_profile(dag, la);
    std::string s = fmt::format("depth {}\n", la.depth);
    for (std::size_t l = 0; l <= la.depth; ++l) {
      s += fmt::format("layer {} size {} in-degree [{}, {}] members {}\n", l, la.layer_size(l),
                       prof.per_layer_min[l], prof.per_layer_max[l],
                       fmt::join(la.layer_members[l], " "));
    }
    s += fmt::format("width {}\n", prof.width ? std::to_string(*prof.width) : "undefined");
    s += fmt::format("poly_exponent {}\n",
                     prof.poly_exponent ? g17(*prof.poly_exponent) : "undefined");
    emit(s);
    return 0;
  }

  int build() {
    const NetworkSpec spec = build_family(family_config(o_), o_.width, o_.seed);
    std::string text = write_network(spec);
    std::string head;
    for (const auto& l : stamp()) head += "# " + l + "\n";
    const auto nl = text.find('\n');
    text = text.substr(0, nl + 1) + head + text.substr(nl + 1);
    if (o_.out.empty()) {
      out_ << text;
    } else {
      save_text_file(o_.out, text);
    }
    return 0;
  }

  int eval() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    InputBatch batch;
    batch.dim = spec.input_count();
    if (!o_.input.empty()) {
      batch.push_back(parse_doubles(o_.input));
    } else if (!o_.data.empty()) {
      batch = load_dataset(o_, spec.input_count()).inputs;
    } else {
      batch.push_back(cell_input(spec, o_.seed));
    }
    std::string s;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto y = forward(spec, w.values, batch.row(i));
      std::vector<std::string> cells;
      for (double v : y) cells.push_back(g17(v));
      s += fmt::format("{}\n", fmt::join(cells, ","));
    }
    emit(s);
    return 0;
  }

  int grad_check() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    const auto x = cell_input(spec, o_.seed);
    const Target target = parse_target(o_.target);
    const VertexId v = target_vertex(spec, target);
    DerivativeEngine engine(spec);
    std::vector<double> g(spec.param_count());
    engine.gradient(w.values, x, v, target.kind, g);
    std::vector<double> fd(spec.param_count());
    std::vector<double> wp = w.values;
    for (std::size_t i = 0; i < wp.size(); ++i) {
      const double keep = wp[i];
      wp[i] = keep + o_.eps;
      const double fp = engine.value(wp, x, v, target.kind);
      wp[i] = keep - o_.eps;
      const double fm = engine.value(wp, x, v, target.kind);
      wp[i] = keep;
      fd[i] = (fp - fm) / (2.0 * o_.eps);
    }
    SeededStream rng(derive_seed(o_.seed, 8));
    std::vector<double> dir(spec.param_count());
    for (double& d : dir) d = rng.normal();
    std::vector<double> hv(spec.param_count());
    engine.hvp(w.values, x, v, target.kind, dir, hv);
    std::vector<double> gp(spec.param_count()), gm(spec.param_count()), fdh(spec.param_count());
    const double h = 1e-5;
    std::vector<double> shifted = w.values;
    axpy(h, dir, shifted);
    engine.gradient(shifted, x, v, target.kind, gp);
    shifted = w.values;
    axpy(-h, dir, shifted);
    engine.gradient(shifted, x, v, target.kind, gm);
    for (std::size_t i = 0; i < fdh.size(); ++i) fdh[i] = (gp[i] - gm[i]) / (2.0 * h);
    auto rel = [](const std::vector<double>& a, const std::vector<double>& b) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
      }
      return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
    };
    const double eg = rel(g, fd);
    const double eh = rel(hv, fdh);
    const bool ok = eg <= 1e-6 && eh <= 1e-5;
    emit(fmt::format("params {}\ngradient_rel_error {}\nhvp_rel_error {}\n{}\n",
                     spec.param_count(), g17(eg), g17(eh), ok ? "ok" : "FAILED"));
    return ok ? 0 : 1;
  }

  int hessnorm() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    const auto x = cell_input(spec, o_.seed);
    const Ball ball(w.values, o_.radius);
    const ProbeOptions probe = cell_probe_options(o_.probes, spectral_options(o_), o_.seed);
    std::string s = "probe,distance,estimate,converged,iterations\n";
    auto rows = [&](const BallScan& scan) {
      for (std::size_t i = 0; i < scan.probes.size(); ++i) {
        const auto& p = scan.probes[i];
        s += fmt::format("{},{},{},{},{}\n", i, g17(p.distance), g17(p.value),
                         p.converged ? 1 : 0, p.iterations);
      }
    };
    if (o_.target == "all") {
      const MultiOutputBound b = multi_output_hessian_bound(spec, ball, x, probe);
      s = "output,sup\n";
      for (std::size_t k = 0; k < b.per_output.size(); ++k) {
        s += fmt::format("{},{}\n", k, g17(b.per_output[k]));
      }
      s += fmt::format("# bound {}\n# converged {}\n", g17(b.bound), b.all_converged);
    } else {
      const BallScan scan = ball_hessian_norm(spec, ball, x, parse_target(o_.target), probe);
      rows(scan);
      s += fmt::format("# sup {}\n# converged {}\n", g17(scan.sup), scan.all_converged);
    }
    emit(s);
    return 0;
  }

  int lincheck() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    const auto x = cell_input(spec, o_.seed);
    const Target target = parse_target(o_.target);
    const Ball ball(w.values, o_.radius);
    const ProbeOptions probe = cell_probe_options(o_.probes, spectral_options(o_), o_.seed);
    const RemainderCheck check =
        check_remainder_bound(spec, ball, x, target, probe, o_.segment_points);
    std::string s = "probe,residual,segment_hessian,bound,holds\n";
    double sup = 0.0;
    for (std::size_t i = 0; i < check.probes.size(); ++i) {
      const auto& p = check.probes[i];
      sup = std::max(sup, p.residual);
      s += fmt::format("{},{},{},{},{}\n", i, g17(p.residual), g17(p.hessian), g17(p.bound),
                       p.holds ? 1 : 0);
    }
    s += fmt::format("# sup_residual {}\n# violation_rate {}\n", g17(sup),
                     g17(check.violation_rate()));
    emit(s);
    return check.violation_rate() <= 0.05 ? 0 : 1;
  }

  int ntk() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    const Dataset data = load_dataset(o_, spec.input_count());
    const std::size_t output = parse_target(o_.target).index;
    const NtkGram k = ntk_gram(spec, w.values, data.inputs, output);
    const PlStarReport pl = pl_star_check(spec, w.values, data, output);
    std::string s;
    for (std::size_t i = 0; i < k.size(); ++i) {
      std::vector<std::string> cells;
      for (double v : k.matrix.row(i)) cells.push_back(g17(v));
      s += fmt::format("{}\n", fmt::join(cells, ","));
    }
    s += fmt::format(
        "# lambda_min {}\n# trace {}\n# loss {}\n# grad_norm_sq {}\n# pl_bound {}\n"
        "# pl_satisfied {}\n# mu {}\n",
        g17(pl.lambda_min), g17(k.matrix.trace()), g17(pl.loss), g17(pl.grad_norm_sq),
        g17(pl.bound), pl.satisfied, g17(pl.mu));
    emit(s, true);
    return 0;
  }

  int train() {
    const NetworkSpec spec = load_spec(o_);
    const ParamVector w = cell_params(spec, o_.seed);
    const Dataset data = load_dataset(o_, spec.input_count());
    TrainOptions t;
    t.lr = o_.lr;
    t.max_steps = o_.steps;
    t.stride = o_.stride;
    t.loss_target_ratio = o_.loss_ratio;
    t.output = parse_target(o_.target).index;
    const TrainRecord r = train_gd(spec, w.values, data, t);
    std::string s = "step,loss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
      s += fmt::format("{},{}\n", i, g17(r.losses[i]));
    }
    for (const auto& snap : r.snapshots) {
      s += fmt::format("# snapshot step {} ntk_rel_change {}\n", snap.step, g17(snap.rel_change));
    }
    s += fmt::format(
        "# lr {}\n# halvings {}\n# steps {}\n# max_drift {}\n# converged {}\n# diverged {}\n"
        "# monotone {}\n",
        g17(r.lr), r.halvings, r.steps, g17(r.max_drift), r.converged, r.diverged, r.monotone);
    emit(s, true);
    if (r.diverged) {
      err_ << "error: training diverged\n";
      return 1;
    }
    return 0;
  }

  int sweep() {
    SweepConfig c;
    c.family = family_config(o_);
    c.widths = parse_width_list(o_.widths);
    c.seeds = parse_seed_list(o_.seeds);
    c.metric = parse_metric(o_.metric);
    c.radius = o_.radius;
    c.probes = o_.probes;
    c.spectral = spectral_options(o_);
    c.data_size = o_.n;
    c.data_seed = o_.data_seed;
    if (!o_.data.empty()) c.data = load_dataset_csv(load_text_file(o_.data));
    c.preact_layer = o_.preact_layer;
    c.train.lr = o_.lr;
    c.train.max_steps = o_.steps;
    c.train.stride = o_.stride;
    c.train.loss_target_ratio = o_.loss_ratio;
    c.jobs = o_.jobs;
    c.timing = o_.timing;
    const auto records = width_sweep(c);
    std::vector<std::string> comments = stamp();
    comments.push_back(fmt::format("seeds: {}", fmt::join(c.seeds, ",")));
    std::ostringstream csv;
    write_sweep_csv(csv, records, comments);
    if (o_.out.empty()) {
      out_ << csv.str();
    } else {
      save_text_file(o_.out, csv.str());
    }
    std::size_t failed = 0;
    for (const auto& r : records) {
      if (!r.error.empty()) {
        ++failed;
        err_ << fmt::format("warning: width {} seed {} failed: {}\n", r.width, r.seed, r.error);
      }
    }
    std::ostream& info = o_.out.empty() ? err_ : out_;
    if (c.widths.size() >= 2) {
      try {
        const SlopeFit fit = fit_loglog_slope(records);
        for (const auto& w : fit.warnings) err_ << "warning: " << w << '\n';
        info << fmt::format("slope {} intercept {} stderr {}\n", g17(fit.slope),
                            g17(fit.intercept), g17(fit.stderr_slope));
      } catch (const Error& e) {
        err_ << "warning: " << e.what() << '\n';
      }
    }
    if (failed == records.size()) {
      err_ << "error: every sweep cell failed\n";
      return 1;
    }
    return 0;
  }

  int report() {
    const std::string text = load_text_file(o_.csv);
    const PlotData data = load_plot_data(text, o_.x, o_.y);
    if (!o_.out.empty()) save_text_file(o_.out, render_svg(data, o_.x, o_.y));
    std::string s = fmt::format("{},mean_{}\n", o_.x, o_.y);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      s += fmt::format("{},{}\n", g17(data.x[i]), g17(data.mean[i]));
    }
    if (data.fit) {
      s += fmt::format("# slope {} intercept {} stderr {}\n", g17(data.fit->slope),
                       g17(data.fit->intercept), g17(data.fit->stderr_slope));
    } else {
      s += "# slope undefined: single point\n";
    }
    out_ << s;
    return 0;
  }

 private:
  static std::string describe(const Violation& v) {
    return fmt::format("{}: {}", to_string(v.kind), v.message);
  }

  CLI::App& sub_;
  Options& o_;
  std::ostream& out_;
  std::ostream& err_;
};

enum Opt : unsigned {
  kDag = 1u << 0,
  kFamily = 1u << 1,
  kProbe = 1u << 2,
  kSpectral = 1u << 3,
  kTrain = 1u << 4,
  kData = 1u << 5,
  kTarget = 1u << 6,
  kSeed = 1u << 7,
};

constexpr unsigned kNet = kDag | kFamily | kSeed;

void add_options(CLI::App& s, Options& o, unsigned set) {
  s.add_option("--out", o.out, "output file (default stdout)");
  s.add_option("--config", o.config, "flat key = value file; flags take precedence");
  if (set & kDag) s.add_option("--dag", o.dag, "dagnet-v1 network file");
  if (set & kSeed) s.add_option("--seed", o.seed, "seed for parameters, inputs and probes");
  if ((set & kFamily) && (set & kSeed)) {
    s.add_option("--width", o.width, "hidden width of the family network");
  }
  if (set & kFamily) {
    s.add_option("--family", o.family, "fcn | densenet | random-dag | conv1d | skip | linear");
    s.add_option("--depth", o.depth, "number of weight layers L");
    s.add_option("--activation", o.activation, "hidden activation");
    s.add_option("--input-dim", o.input_dim, "input dimension d_0");
    s.add_option("--outputs", o.outputs, "number of outputs d_L");
    s.add_option("--dropout", o.dropout, "edge removal probability");
    s.add_option("--kernel", o.kernel, "conv1d kernel size (odd)");
    s.add_option("--input-len", o.input_len, "conv1d input length");
    s.add_option("--kappa", o.kappa, "random-dag in-degree spread");
    s.add_option("--skip-policy", o.skip_policy,
                 "previous-layer-same-index | random-earlier");
    s.add_option("--bottleneck", o.bottleneck, "number of bottleneck neurons to inject");
    s.add_option("--bottleneck-indegree", o.bottleneck_indegree, "in-degree of each");
  }
  if (set & kProbe) {
    s.add_option("--radius", o.radius, "ball radius R");
    s.add_option("--probes", o.probes, "sphere probes per ball");
  }
  if (set & kSpectral) {
    s.add_option("--tol", o.tol, "power iteration relative tolerance");
    s.add_option("--max-iter", o.max_iter, "power iteration cap");
  }
  if (set & kData) {
    s.add_option("--data", o.data, "CSV dataset: features then label per row");
    s.add_option("--n", o.n, "synthetic dataset size");
    s.add_option("--data-seed", o.data_seed, "synthetic dataset seed");
  }
  if (set & kTrain) {
    s.add_option("--lr", o.lr, "learning rate (0: 1 / lambda_max(K_0))");
    s.add_option("--steps", o.steps, "maximum GD steps");
    s.add_option("--stride", o.stride, "NTK snapshot stride");
    s.add_option("--loss-ratio", o.loss_ratio, "stop when loss <= ratio * initial loss");
  }
  if (set & kTarget) s.add_option("--target", o.target, "output:K or preact:L:K");
}

std::vector<std::string> config_arguments(CLI::App& sub, const std::string& path) {
  std::vector<std::string> args;
  for (const auto& [key, value] : read_config_text(load_text_file(path))) {
    const std::string flag = "--" + key;
    if (key == "config" || sub.get_option_no_throw(flag) == nullptr) {
      throw CLI::ValidationError(fmt::format("{}: unknown config key '{}'", path, key));
    }
    args.push_back(flag + "=" + value);
  }
  return args;
}

}  // namespace

std::vector<std::size_t> parse_width_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto w = parse_u64(trim(item));
    if (w == 0) throw Error("widths must be positive");
    out.push_back(w);
  }
  if (out.empty()) throw Error("empty width list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  const std::string t = trim(text);
  std::vector<std::uint64_t> out;
  if (t.find(',') == std::string::npos) {
    const auto n = parse_u64(t);
    if (n == 0) throw Error("seed count must be positive");
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  std::istringstream in(t);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_u64(item));
  }
  if (out.empty()) throw Error("empty seed list");
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Feedforward networks on DAGs: derivatives, Hessian norms, NTK drift", "dagnet"};
  app.set_version_flag("--version", DAGNET_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.option_defaults()->always_capture_default();

  struct Sub {
    const char* name;
    const char* help;
    unsigned set;
    int (Runner::*fn)();
  };
  const Sub subs[] = {
      {"validate", "check a network file for DAG violations", kDag, &Runner::validate},
      {"layers", "print layers, degree profile and width", kDag, &Runner::layers},
      {"build", "write a family network as dagnet-v1", kFamily | kSeed, &Runner::build},
      {"eval", "evaluate outputs at the seeded initialization", kNet | kData,
       &Runner::eval},
      {"grad-check", "compare gradient and hvp with finite differences",
       kNet | kTarget, &Runner::grad_check},
      {"hessnorm", "Hessian spectral norm over a ball (target 'all': multi-output bound)",
       kNet | kProbe | kSpectral | kTarget, &Runner::hessnorm},
      {"lincheck", "linearization residual against the segment Hessian bound",
       kNet | kProbe | kSpectral | kTarget, &Runner::lincheck},
      {"ntk", "NTK Gram matrix and PL* check", kNet | kData | kTarget,
       &Runner::ntk},
      {"train", "full-batch GD with NTK drift tracking",
       kNet | kData | kTrain | kTarget, &Runner::train},
      {"sweep", "width sweep to CSV", kFamily | kProbe | kSpectral | kData | kTrain,
       &Runner::sweep},
      {"report", "plot a CSV column against another as SVG", 0, &Runner::report},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> apps;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_options(*sub, o, s.set);
    if (std::string(s.name) == "sweep") {
      sub->add_option("--widths", o.widths, "comma list of widths");
      sub->add_option("--seeds", o.seeds, "seed count or comma list");
      sub->add_option("--metric", o.metric, "hessnorm | lin_residual | ntk_drift | preact_hessian");
      sub->add_option("--preact-layer", o.preact_layer, "layer for preact_hessian (0: L-1)");
      sub->add_option("--jobs", o.jobs, "parallel sweep cells");
      sub->add_flag("--timing", o.timing, "record wall_ms (breaks byte-identical output)");
    }
    if (std::string(s.name) == "eval") sub->add_option("--input", o.input, "comma list");
    if (std::string(s.name) == "grad-check") sub->add_option("--eps", o.eps, "FD step");
    if (std::string(s.name) == "lincheck") {
      sub->add_option("--segment-points", o.segment_points, "Hessian probes per segment");
    }
    if (std::string(s.name) == "report") {
      sub->add_option("--csv", o.csv, "input CSV")->required();
      sub->add_option("--x", o.x, "x column");
      sub->add_option("--y", o.y, "y column");
    }
    apps.emplace_back(sub, &s);
  }

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  CLI::App* active = nullptr;
  try {
    app.parse(std::vector<std::string>(args));
    for (auto& [sub, s] : apps) {
      if (sub->parsed()) active = sub;
    }
    if (active && !o.config.empty()) {
      // Re-parse with the file's entries placed before the command line so
      // that flags win under the take-last policy.
      const std::string config = o.config;
      std::vector<std::string> merged{argv + 1, argv + argc};
      const auto extra = config_arguments(*active, config);
      merged.insert(merged.begin() + 1, extra.begin(), extra.end());
      o = Options{};
      app.clear();
      app.parse(std::vector<std::string>(merged.rbegin(), merged.rend()));
    }
  } catch (const CLI::CallForHelp&) {
    out << (active ? active->help() : app.help());
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << DAGNET_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    CLI::App* shown = &app;
    for (auto& [sub, s] : apps) {
      if (sub->parsed()) shown = sub;
    }
    err << shown->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  for (auto& [sub, s] : apps) {
    if (!sub->parsed()) continue;
    const bool needs_dag = (s->set & kDag) && !(s->set & kFamily);
    if (needs_dag && o.dag.empty()) {
      err << "usage error: --dag is required\n" << sub->help();
      return 2;
    }
    Runner runner(*sub, o, out, err);
    try {
      return (runner.*(s->fn))();
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace dagnet
