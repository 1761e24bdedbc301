#include "dagnet/evaluator.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/random.hpp"

namespace dagnet {

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  SeededStream rng(seed);
  ParamVector p;
  p.values.resize(spec.param_count());
  for (double& w : p.values) w = rng.normal();
  return p;
}

void InputBatch::push_back(std::span<const double> x) {
  if (dim == 0 && data.empty()) dim = x.size();
  if (x.size() != dim) throw Error("input row has the wrong dimension");
  data.insert(data.end(), x.begin(), x.end());
}

InputBatch gaussian_inputs(std::size_t n, std::size_t dim, std::uint64_t seed, double bound) {
  SeededStream rng(seed);
  InputBatch batch;
  batch.dim = dim;
  batch.sup_norm_bound = bound;
  batch.data.resize(n * dim);
  for (double& x : batch.data) {
    do {
      x = rng.normal();
    } while (std::abs(x) > bound);
  }
  return batch;
}

void check_dimensions(const NetworkSpec& spec, std::span<const double> params,
                      std::span<const double> input) {
  if (params.size() != spec.param_count()) {
    throw Error(fmt::format("parameter vector has length {}, network needs {}", params.size(),
                            spec.param_count()));
  }
  if (input.size() != spec.input_count()) {
    throw Error(fmt::format("input has length {}, network has {} inputs", input.size(),
                            spec.input_count()));
  }
}

EvalTrace forward_trace(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input) {
  check_dimensions(spec, params, input);
  const std::size_t n = spec.vertex_count();
  EvalTrace t;
  t.pre_act.assign(n, 0.0);
  t.act.assign(n, 0.0);
  const auto src = spec.in_src();
  const auto par = spec.in_param();
  for (VertexId v : spec.order()) {
    if (const std::size_t slot = spec.input_slot(v); slot != NetworkSpec::npos) {
      t.pre_act[v] = t.act[v] = input[slot];
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = spec.in_begin(v); k < spec.in_end(v); ++k) {
      sum += params[par[k]] * t.act[src[k]];
    }
    const double z = spec.scale(v) * sum;
    double a = eval_activation_all(spec.activation(v), z).value;
    if (const auto s = spec.skip_from(v)) a += t.act[*s];
    if (!std::isfinite(z) || !std::isfinite(a)) {
      throw Error(fmt::format("non-finite value at vertex {}", v));
    }
    t.pre_act[v] = z;
    t.act[v] = a;
  }
  t.outputs.reserve(spec.output_count());
  for (VertexId v : spec.outputs()) t.outputs.push_back(t.act[v]);
  return t;
}

std::vector<double> forward(const NetworkSpec& spec, std::span<const double> params,
                            std::span<const double> input) {
  return forward_trace(spec, params, input).outputs;
}

}  // namespace dagnet
