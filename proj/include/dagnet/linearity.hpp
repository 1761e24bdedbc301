#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dagnet/autodiff.hpp"
#include "dagnet/evaluator.hpp"
#include "dagnet/linalg.hpp"
#include "dagnet/network.hpp"
#include "dagnet/spectral.hpp"

namespace dagnet {

/// Euclidean ball B(center, radius) in parameter space.
struct Ball {
  std::vector<double> center;
  double radius = 1.0;

  /// Throws Error unless radius is finite and positive.
  Ball(std::vector<double> center, double radius);
};

/// First-order Taylor model f(w0) + (w - w0)' grad f(w0).
class LinearModel {
 public:
  LinearModel(double base, std::vector<double> gradient, std::vector<double> center)
      : base_(base), gradient_(std::move(gradient)), center_(std::move(center)) {}

  double base() const noexcept { return base_; }
  const std::vector<double>& gradient() const noexcept { return gradient_; }
  const std::vector<double>& center() const noexcept { return center_; }
  double predict(std::span<const double> w) const;

 private:
  double base_;
  std::vector<double> gradient_;
  std::vector<double> center_;
};

LinearModel linearize(const NetworkSpec& spec, std::span<const double> params,
                      std::span<const double> input, const Target& target);

enum class SampleMode { sphere, uniform, segment };

/// sphere: points at distance exactly R along normalized Gaussian
/// directions. uniform: inside the ball, radius R U^(1/dim). segment: count
/// equispaced points from the center to center + R u for one random unit u.
std::vector<std::vector<double>> sample_ball(const Ball& ball, std::size_t count,
                                             std::uint64_t seed, SampleMode mode);

struct ProbeOptions {
  std::size_t probes = 8;
  std::uint64_t seed = 0;
  SpectralOptions spectral;
  // Residual scans also probe w0 +- R u, u the dominant Hessian eigenvector
  // at w0. Random sphere points almost miss that direction in high dimension.
  bool principal = true;
};

struct ProbeRecord {
  double distance = 0.0;  // |w - w0|
  double value = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
};

struct BallScan {
  double sup = 0.0;
  bool all_converged = true;
  std::vector<ProbeRecord> probes;  // center first (when probed), then sphere points
};

/// Spectral norm of the target's Hessian at w (matrix-free).
SpectralEstimate hessian_norm_at(const NetworkSpec& spec, std::span<const double> w,
                                 std::span<const double> input, const Target& target,
                                 const SpectralOptions& options);

/// max over the center and `probes` sphere points of the Hessian spectral norm.
BallScan ball_hessian_norm(const NetworkSpec& spec, const Ball& ball,
                           std::span<const double> input, const Target& target,
                           const ProbeOptions& options = {});

/// Sphere points of a residual scan: `probes` random ones, then w0 +- R u
/// when options.principal is set and the Hessian at w0 is nonzero.
std::vector<std::vector<double>> residual_probe_points(const NetworkSpec& spec, const Ball& ball,
                                                       std::span<const double> input,
                                                       const Target& target,
                                                       const ProbeOptions& options);

/// max over residual_probe_points of |f(w) - f_lin(w)|.
BallScan lin_residual(const NetworkSpec& spec, const Ball& ball, std::span<const double> input,
                      const Target& target, const ProbeOptions& options = {});

BallScan preactivation_hessian_norm(const NetworkSpec& spec, const Ball& ball,
                                    std::span<const double> input, std::size_t layer,
                                    std::size_t index, const ProbeOptions& options = {});

struct RemainderProbe {
  double residual = 0.0;   // |f(w) - f_lin(w)|
  double hessian = 0.0;    // max Hessian norm over the segment points
  double bound = 0.0;      // 0.5 * hessian * |w - w0|^2 * slack
  bool holds = true;
};

struct RemainderCheck {
  std::vector<RemainderProbe> probes;
  std::size_t violations = 0;
  double violation_rate() const {
    return probes.empty() ? 0.0 : static_cast<double>(violations) / static_cast<double>(probes.size());
  }
};

/// For each sphere probe w, compares the linearization residual with
/// 0.5 * H * |w - w0|^2 * slack where H is the largest Hessian norm over
/// `segment_points` equispaced points on [w0, w].
RemainderCheck check_remainder_bound(const NetworkSpec& spec, const Ball& ball,
                                     std::span<const double> input, const Target& target,
                                     const ProbeOptions& options, std::size_t segment_points = 16,
                                     double slack = 1.25);

/// K_ij = grad f(x_i)' grad f(x_j) for one output.
struct NtkGram {
  DenseMatrix matrix;

  std::size_t size() const noexcept { return matrix.size(); }
  double min_eigenvalue() const { return min_eig_psd(matrix); }
};

/// Rows of the Jacobian: grad f(w; x_i) for each input.
std::vector<std::vector<double>> jacobian_rows(const NetworkSpec& spec,
                                               std::span<const double> params,
                                               const InputBatch& inputs, std::size_t output = 0,
                                               std::vector<double>* values = nullptr);

NtkGram gram_from_rows(const std::vector<std::vector<double>>& rows);

NtkGram ntk_gram(const NetworkSpec& spec, std::span<const double> params,
                 const InputBatch& inputs, std::size_t output = 0);

/// |K_t - K_0| / |K_0| in spectral norm. Throws Error on dimension mismatch
/// or |K_0| = 0.
double ntk_rel_change(const DenseMatrix& k0, const DenseMatrix& kt);

struct Dataset {
  InputBatch inputs;
  std::vector<double> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct PlStarReport {
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  double lambda_min = 0.0;
  double bound = 0.0;     // 2 lambda_min loss
  bool satisfied = false;
  double mu = 0.0;        // lambda_min(K): PL* constant certified by the NTK
};

PlStarReport pl_star_check(const NetworkSpec& spec, std::span<const double> params,
                           const Dataset& data, std::size_t output = 0);

struct GradNormStats {
  std::size_t width = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

using SpecFamily = std::function<NetworkSpec(std::size_t width, std::uint64_t seed)>;
using InputSampler = std::function<std::vector<double>(std::size_t dim, std::uint64_t seed)>;

/// Per width: |grad_w f_k(w0)| over seeds, with w0 ~ N(0, I) and x from the sampler.
std::vector<GradNormStats> grad_norm_init_stats(const SpecFamily& family,
                                                std::span<const std::size_t> widths,
                                                std::span<const std::uint64_t> seeds,
                                                const InputSampler& sampler,
                                                std::size_t output = 0);

/// Standard normal sampler (no truncation).
std::vector<double> gaussian_input(std::size_t dim, std::uint64_t seed);

struct MultiOutputBound {
  double bound = 0.0;  // d_L * max_k
  std::vector<double> per_output;
  bool all_converged = true;
};

MultiOutputBound multi_output_hessian_bound(const NetworkSpec& spec, const Ball& ball,
                                            std::span<const double> input,
                                            const ProbeOptions& options = {});

}  // namespace dagnet
