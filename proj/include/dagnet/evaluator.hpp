#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dagnet/network.hpp"

namespace dagnet {

/// Flat trainable weights, indexed by parameter index. Edge e reads
/// values[spec.edge_param(rank(e))].
struct ParamVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  operator std::span<const double>() const noexcept { return values; }
  operator std::span<double>() noexcept { return values; }
};

/// i.i.d. N(0, 1) weights drawn in parameter-index order from the seeded stream.
ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Per-vertex values of one forward pass. For inputs pre_act == act == x.
struct EvalTrace {
  std::vector<double> pre_act;
  std::vector<double> act;
  std::vector<double> outputs;  // output vertices, ascending id
};

/// Rows of inputs plus the sup-norm bound they respect.
struct InputBatch {
  std::size_t dim = 0;
  std::vector<double> data;  // row-major n x dim
  double sup_norm_bound = 0.0;

  std::size_t size() const noexcept { return dim ? data.size() / dim : 0; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  void push_back(std::span<const double> x);
};

/// N(0, I) rows, each coordinate truncated to [-bound, bound] by rejection.
InputBatch gaussian_inputs(std::size_t n, std::size_t dim, std::uint64_t seed,
                           double bound = 4.0);

/// Throws Error on dimension mismatch or a non-finite intermediate value.
std::vector<double> forward(const NetworkSpec& spec, std::span<const double> params,
                            std::span<const double> input);
EvalTrace forward_trace(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input);

void check_dimensions(const NetworkSpec& spec, std::span<const double> params,
                      std::span<const double> input);

}  // namespace dagnet
