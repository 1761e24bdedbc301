#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dagnet/linalg.hpp"
#include "dagnet/network.hpp"

namespace dagnet {

/// Scalar function of the weights to differentiate: an output f_k or a
/// pre-activation of the k-th vertex of layer l.
struct Target {
  enum class Kind { output, pre_activation };
  Kind kind = Kind::output;
  std::size_t layer = 0;
  std::size_t index = 0;

  static Target output(std::size_t k) { return {Kind::output, 0, k}; }
  static Target pre_activation(std::size_t layer, std::size_t k) {
    return {Kind::pre_activation, layer, k};
  }
};

/// Vertex a target refers to; throws Error when out of range.
VertexId target_vertex(const NetworkSpec& spec, const Target& target);

/// Reusable buffers for derivative passes over one network. The tape is the
/// per-vertex value/tangent record of a pass in topological order. Not safe
/// for concurrent use; give each thread its own engine.
class DerivativeEngine {
 public:
  explicit DerivativeEngine(const NetworkSpec& spec);

  const NetworkSpec& spec() const noexcept { return *spec_; }

  /// Forward pass; returns the value of the target (act for outputs,
  /// pre-activation otherwise).
  double value(std::span<const double> params, std::span<const double> input,
               VertexId vertex, Target::Kind kind);
  /// Forward pass; copies all outputs.
  void outputs(std::span<const double> params, std::span<const double> input,
               std::span<double> out);

  /// grad must have length param_count; overwritten. Returns target value.
  double gradient(std::span<const double> params, std::span<const double> input,
                  VertexId vertex, Target::Kind kind, std::span<double> grad);

  /// Directional derivative of every output along tangent.
  void jvp(std::span<const double> params, std::span<const double> input,
           std::span<const double> tangent, std::span<double> out_values,
           std::span<double> out_tangents);

  /// Forward-over-reverse Hessian-vector product. hv overwritten; grad, when
  /// non-empty, receives the gradient as a by-product.
  void hvp(std::span<const double> params, std::span<const double> input, VertexId vertex,
           Target::Kind kind, std::span<const double> v, std::span<double> hv,
           std::span<double> grad = {});

 private:
  void run_forward(std::span<const double> params, std::span<const double> input,
                   std::span<const double> tangent);
  std::size_t last_position(VertexId vertex) const { return position_[vertex]; }

  const NetworkSpec* spec_;
  std::vector<std::size_t> position_;
  std::vector<double> z_, a_, d1_, d2_, dz_, da_, abar_, dabar_;
};

std::vector<double> gradient(const NetworkSpec& spec, std::span<const double> params,
                             std::span<const double> input, const Target& target);

/// d/de f(w + e * tangent) at e = 0 for every output.
std::vector<double> jvp(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input, std::span<const double> tangent);

std::vector<double> hvp(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input, const Target& target,
                        std::span<const double> v);

inline constexpr std::size_t kDenseHessianCap = 400;

/// Column-by-column assembly from hvp on basis vectors; throws Error when
/// param_count exceeds cap.
DenseMatrix dense_hessian(const NetworkSpec& spec, std::span<const double> params,
                          std::span<const double> input, const Target& target,
                          std::size_t cap = kDenseHessianCap);

/// Hessian of a target at fixed (params, input) as a reusable operator.
class HessianOperator {
 public:
  HessianOperator(const NetworkSpec& spec, std::vector<double> params,
                  std::vector<double> input, const Target& target);

  std::size_t dimension() const noexcept { return params_.size(); }
  void apply(std::span<const double> v, std::span<double> hv);

 private:
  DerivativeEngine engine_;
  std::vector<double> params_;
  std::vector<double> input_;
  VertexId vertex_;
  Target::Kind kind_;
};

}  // namespace dagnet
