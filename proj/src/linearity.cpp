#include "dagnet/linearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/random.hpp"

namespace dagnet {

namespace {

// Spectral seed stream of the principal-direction search; disjoint from the
// per-probe indices.
constexpr std::uint64_t kPrincipalStream = ~std::uint64_t{0};

std::vector<double> random_unit(SeededStream& rng, std::size_t dim) {
  std::vector<double> u(dim);
  double n = 0.0;
  do {
    for (double& x : u) x = rng.normal();
    n = norm2(u);
  } while (n == 0.0);
  scale_in_place(1.0 / n, u);
  return u;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

Ball::Ball(std::vector<double> c, double r) : center(std::move(c)), radius(r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error("ball radius must be finite and positive");
}

double LinearModel::predict(std::span<const double> w) const {
  double s = base_;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - center_[i]) * gradient_[i];
  return s;
}

LinearModel linearize(const NetworkSpec& spec, std::span<const double> params,
                      std::span<const double> input, const Target& target) {
  const VertexId v = target_vertex(spec, target);
  DerivativeEngine engine(spec);
  std::vector<double> g(spec.param_count());
  const double base = engine.gradient(params, input, v, target.kind, g);
  return LinearModel(base, std::move(g), std::vector<double>(params.begin(), params.end()));
}

std::vector<std::vector<double>> sample_ball(const Ball& ball, std::size_t count,
                                             std::uint64_t seed, SampleMode mode) {
  if (count == 0) throw Error("sample count must be at least 1");
  const std::size_t dim = ball.center.size();
  SeededStream rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  if (mode == SampleMode::segment) {
    const auto u = random_unit(rng, dim);
    for (std::size_t k = 0; k < count; ++k) {
      const double t = count == 1 ? 0.0 : ball.radius * static_cast<double>(k) /
                                              static_cast<double>(count - 1);
      std::vector<double> w = ball.center;
      axpy(t, u, w);
      out.push_back(std::move(w));
    }
    return out;
  }
  for (std::size_t k = 0; k < count; ++k) {
    const auto u = random_unit(rng, dim);
    double r = ball.radius;
    if (mode == SampleMode::uniform) {
      r *= std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    }
    std::vector<double> w = ball.center;
    axpy(r, u, w);
    out.push_back(std::move(w));
  }
  return out;
}

SpectralEstimate hessian_norm_at(const NetworkSpec& spec, std::span<const double> w,
                                 std::span<const double> input, const Target& target,
                                 const SpectralOptions& options) {
  auto op = std::make_shared<HessianOperator>(
      spec, std::vector<double>(w.begin(), w.end()),
      std::vector<double>(input.begin(), input.end()), target);
  const SymOperator sym = make_sym_operator(
      op->dimension(),
      [op](std::span<const double> x, std::span<double> y) { op->apply(x, y); }, false);
  return spectral_norm_matfree(sym, options);
}

BallScan ball_hessian_norm(const NetworkSpec& spec, const Ball& ball,
                           std::span<const double> input, const Target& target,
                           const ProbeOptions& options) {
  if (options.probes == 0) throw Error("need at least one probe");
  BallScan scan;
  std::vector<std::vector<double>> points{ball.center};
  auto sphere = sample_ball(ball, options.probes, options.seed, SampleMode::sphere);
  points.insert(points.end(), std::make_move_iterator(sphere.begin()),
                std::make_move_iterator(sphere.end()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    SpectralOptions spectral = options.spectral;
    spectral.seed = derive_seed(options.spectral.seed, i);
    const SpectralEstimate est = hessian_norm_at(spec, points[i], input, target, spectral);
    scan.probes.push_back(
        {distance(points[i], ball.center), est.value, est.converged, est.iterations});
    scan.sup = std::max(scan.sup, est.value);
    scan.all_converged = scan.all_converged && est.converged;
  }
  return scan;
}

std::vector<std::vector<double>> residual_probe_points(const NetworkSpec& spec, const Ball& ball,
                                                       std::span<const double> input,
                                                       const Target& target,
                                                       const ProbeOptions& options) {
  if (options.probes == 0) throw Error("need at least one probe");
  auto points = sample_ball(ball, options.probes, options.seed, SampleMode::sphere);
  if (!options.principal) return points;
  SpectralOptions spectral = options.spectral;
  spectral.seed = derive_seed(options.spectral.seed, kPrincipalStream);
  const SpectralEstimate est = hessian_norm_at(spec, ball.center, input, target, spectral);
  const double n = norm2(est.vector);
  if (est.value == 0.0 || !(n > 0.0)) return points;
  for (double sign : {1.0, -1.0}) {
    std::vector<double> w = ball.center;
    axpy(sign * ball.radius / n, est.vector, w);
    points.push_back(std::move(w));
  }
  return points;
}

BallScan lin_residual(const NetworkSpec& spec, const Ball& ball, std::span<const double> input,
                      const Target& target, const ProbeOptions& options) {
  if (options.probes == 0) throw Error("need at least one probe");
  const VertexId v = target_vertex(spec, target);
  const LinearModel lin = linearize(spec, ball.center, input, target);
  DerivativeEngine engine(spec);
  BallScan scan;
  for (const auto& w : residual_probe_points(spec, ball, input, target, options)) {
    const double residual = std::abs(engine.value(w, input, v, target.kind) - lin.predict(w));
    scan.probes.push_back({distance(w, ball.center), residual, true, 0});
    scan.sup = std::max(scan.sup, residual);
  }
  return scan;
}

BallScan preactivation_hessian_norm(const NetworkSpec& spec, const Ball& ball,
                                    std::span<const double> input, std::size_t layer,
                                    std::size_t index, const ProbeOptions& options) {
  return ball_hessian_norm(spec, ball, input, Target::pre_activation(layer, index), options);
}

RemainderCheck check_remainder_bound(const NetworkSpec& spec, const Ball& ball,
                                     std::span<const double> input, const Target& target,
                                     const ProbeOptions& options, std::size_t segment_points,
                                     double slack) {
  if (segment_points < 2) throw Error("segment scan needs at least two points");
  const VertexId v = target_vertex(spec, target);
  const LinearModel lin = linearize(spec, ball.center, input, target);
  DerivativeEngine engine(spec);
  RemainderCheck check;
  const auto probes = residual_probe_points(spec, ball, input, target, options);
  std::vector<double> point(ball.center.size());
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& w = probes[p];
    RemainderProbe rec;
    rec.residual = std::abs(engine.value(w, input, v, target.kind) - lin.predict(w));
    for (std::size_t s = 0; s < segment_points; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(segment_points - 1);
      for (std::size_t i = 0; i < point.size(); ++i) {
        point[i] = ball.center[i] + t * (w[i] - ball.center[i]);
      }
      SpectralOptions spectral = options.spectral;
      spectral.seed = derive_seed(options.spectral.seed, p * segment_points + s);
      rec.hessian = std::max(rec.hessian,
                             hessian_norm_at(spec, point, input, target, spectral).value);
    }
    const double d = distance(w, ball.center);
    rec.bound = 0.5 * rec.hessian * d * d * slack;
    rec.holds = rec.residual <= rec.bound;
    if (!rec.holds) ++check.violations;
    check.probes.push_back(rec);
  }
  return check;
}

std::vector<std::vector<double>> jacobian_rows(const NetworkSpec& spec,
                                               std::span<const double> params,
                                               const InputBatch& inputs, std::size_t output,
                                               std::vector<double>* values) {
  const Target target = Target::output(output);
  const VertexId v = target_vertex(spec, target);
  DerivativeEngine engine(spec);
  std::vector<std::vector<double>> rows(inputs.size(),
                                        std::vector<double>(spec.param_count()));
  if (values) values->assign(inputs.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double f = engine.gradient(params, inputs.row(i), v, target.kind, rows[i]);
    if (values) (*values)[i] = f;
  }
  return rows;
}

NtkGram gram_from_rows(const std::vector<std::vector<double>>& rows) {
  NtkGram k{DenseMatrix(rows.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i; j < rows.size(); ++j) {
      k.matrix(i, j) = k.matrix(j, i) = dot(rows[i], rows[j]);
    }
  }
  return k;
}

NtkGram ntk_gram(const NetworkSpec& spec, std::span<const double> params,
                 const InputBatch& inputs, std::size_t output) {
  if (inputs.size() == 0) throw Error("NTK needs at least one input");
  return gram_from_rows(jacobian_rows(spec, params, inputs, output));
}

double ntk_rel_change(const DenseMatrix& k0, const DenseMatrix& kt) {
  if (k0.size() != kt.size()) throw Error("kernel matrices differ in dimension");
  const double base = dense_spectral_norm(k0);
  if (base == 0.0) throw Error("initial kernel has zero norm");
  DenseMatrix diff(k0.size());
  for (std::size_t i = 0; i < k0.size(); ++i) {
    for (std::size_t j = 0; j < k0.size(); ++j) diff(i, j) = kt(i, j) - k0(i, j);
  }
  return dense_spectral_norm(diff) / base;
}

PlStarReport pl_star_check(const NetworkSpec& spec, std::span<const double> params,
                           const Dataset& data, std::size_t output) {
  if (data.size() == 0 || data.inputs.size() != data.size()) {
    throw Error("dataset must be non-empty with one label per input");
  }
  std::vector<double> values;
  const auto rows = jacobian_rows(spec, params, data.inputs, output, &values);
  PlStarReport r;
  std::vector<double> grad(spec.param_count(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double res = values[i] - data.labels[i];
    r.loss += 0.5 * res * res;
    axpy(res, rows[i], grad);
  }
  r.grad_norm_sq = dot(grad, grad);
  r.lambda_min = min_eig_psd(gram_from_rows(rows).matrix);
  r.bound = 2.0 * r.lambda_min * r.loss;
  r.satisfied = r.grad_norm_sq >= r.bound - 1e-8 * (1.0 + r.grad_norm_sq);
  r.mu = r.lambda_min;
  return r;
}

std::vector<double> gaussian_input(std::size_t dim, std::uint64_t seed) {
  SeededStream rng(seed);
  std::vector<double> x(dim);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<GradNormStats> grad_norm_init_stats(const SpecFamily& family,
                                                std::span<const std::size_t> widths,
                                                std::span<const std::uint64_t> seeds,
                                                const InputSampler& sampler,
                                                std::size_t output) {
  if (seeds.empty()) throw Error("need at least one seed");
  std::vector<GradNormStats> out;
  for (std::size_t width : widths) {
    GradNormStats s;
    s.width = width;
    s.min = std::numeric_limits<double>::infinity();
    s.max = 0.0;
    double sum = 0.0;
    for (std::uint64_t seed : seeds) {
      const NetworkSpec spec = family(width, derive_seed(seed, 1));
      const auto w0 = init_params(spec, derive_seed(seed, 2));
      const auto x = sampler(spec.input_count(), derive_seed(seed, 3));
      const double g = norm2(gradient(spec, w0.values, x, Target::output(output)));
      sum += g;
      s.min = std::min(s.min, g);
      s.max = std::max(s.max, g);
      ++s.count;
    }
    s.mean = sum / static_cast<double>(s.count);
    out.push_back(s);
  }
  return out;
}

MultiOutputBound multi_output_hessian_bound(const NetworkSpec& spec, const Ball& ball,
                                            std::span<const double> input,
                                            const ProbeOptions& options) {
  if (spec.output_count() == 0) throw Error("network has no outputs");
  MultiOutputBound r;
  double worst = 0.0;
  for (std::size_t k = 0; k < spec.output_count(); ++k) {
    const BallScan scan = ball_hessian_norm(spec, ball, input, Target::output(k), options);
    r.per_output.push_back(scan.sup);
    r.all_converged = r.all_converged && scan.all_converged;
    worst = std::max(worst, scan.sup);
  }
  r.bound = static_cast<double>(spec.output_count()) * worst;
  return r;
}

}  // namespace dagnet
