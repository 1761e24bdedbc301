#include "dagnet/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/evaluator.hpp"

namespace dagnet {

VertexId target_vertex(const NetworkSpec& spec, const Target& target) {
  if (target.kind == Target::Kind::output) {
    if (target.index >= spec.output_count()) {
      throw Error(fmt::format("output index {} out of range ({} outputs)", target.index,
                              spec.output_count()));
    }
    return spec.outputs()[target.index];
  }
  if (target.layer < 1 || target.layer > spec.depth()) {
    throw Error(fmt::format("pre-activation layer {} out of range [1, {}]", target.layer,
                            spec.depth()));
  }
  const auto& members = spec.layers().layer_members[target.layer];
  if (target.index >= members.size()) {
    throw Error(fmt::format("pre-activation index {} out of range for layer {} (size {})",
                            target.index, target.layer, members.size()));
  }
  return members[target.index];
}

DerivativeEngine::DerivativeEngine(const NetworkSpec& spec) : spec_(&spec) {
  const std::size_t n = spec.vertex_count();
  position_.resize(n);
  for (std::size_t i = 0; i < spec.order().size(); ++i) position_[spec.order()[i]] = i;
  for (auto* buf : {&z_, &a_, &d1_, &d2_, &dz_, &da_, &abar_, &dabar_}) buf->assign(n, 0.0);
}

void DerivativeEngine::run_forward(std::span<const double> w, std::span<const double> x,
                                   std::span<const double> t) {
  const NetworkSpec& spec = *spec_;
  check_dimensions(spec, w, x);
  const bool tangent = !t.empty();
  if (tangent && t.size() != spec.param_count()) {
    throw Error(fmt::format("tangent has length {}, network has {} parameters", t.size(),
                            spec.param_count()));
  }
  const auto src = spec.in_src();
  const auto par = spec.in_param();
  for (VertexId v : spec.order()) {
    if (const std::size_t slot = spec.input_slot(v); slot != NetworkSpec::npos) {
      z_[v] = a_[v] = x[slot];
      d1_[v] = 1.0;
      d2_[v] = dz_[v] = da_[v] = 0.0;
      continue;
    }
    const std::size_t begin = spec.in_begin(v);
    const std::size_t end = spec.in_end(v);
    const double s = spec.scale(v);
    double sum = 0.0;
    double dsum = 0.0;
    if (tangent) {
      for (std::size_t k = begin; k < end; ++k) {
        const VertexId u = src[k];
        const std::size_t p = par[k];
        sum += w[p] * a_[u];
        dsum += t[p] * a_[u] + w[p] * da_[u];
      }
    } else {
      for (std::size_t k = begin; k < end; ++k) sum += w[par[k]] * a_[src[k]];
    }
    const double z = s * sum;
    const ActivationValue act = eval_activation_all(spec.activation(v), z);
    double a = act.value;
    const auto skip = spec.skip_from(v);
    if (skip) a += a_[*skip];
    if (!std::isfinite(a)) throw Error(fmt::format("non-finite value at vertex {}", v));
    z_[v] = z;
    a_[v] = a;
    d1_[v] = act.d1;
    d2_[v] = act.d2;
    if (tangent) {
      dz_[v] = s * dsum;
      da_[v] = act.d1 * dz_[v] + (skip ? da_[*skip] : 0.0);
    }
  }
}

double DerivativeEngine::value(std::span<const double> params, std::span<const double> input,
                               VertexId vertex, Target::Kind kind) {
  run_forward(params, input, {});
  return kind == Target::Kind::output ? a_[vertex] : z_[vertex];
}

void DerivativeEngine::outputs(std::span<const double> params, std::span<const double> input,
                               std::span<double> out) {
  run_forward(params, input, {});
  const auto& outs = spec_->outputs();
  for (std::size_t k = 0; k < outs.size(); ++k) out[k] = a_[outs[k]];
}

double DerivativeEngine::gradient(std::span<const double> w, std::span<const double> x,
                                  VertexId target, Target::Kind kind, std::span<double> grad) {
  const NetworkSpec& spec = *spec_;
  run_forward(w, x, {});
  std::fill(grad.begin(), grad.end(), 0.0);
  std::fill(abar_.begin(), abar_.end(), 0.0);
  const bool preact = kind == Target::Kind::pre_activation;
  if (!preact) abar_[target] = 1.0;
  const auto src = spec.in_src();
  const auto par = spec.in_param();
  const auto& order = spec.order();
  for (std::size_t i = position_[target] + 1; i-- > 0;) {
    const VertexId v = order[i];
    if (spec.input_slot(v) != NetworkSpec::npos) continue;
    double zbar = abar_[v] * d1_[v];
    if (preact && v == target) zbar += 1.0;
    if (const auto skip = spec.skip_from(v)) abar_[*skip] += abar_[v];
    if (zbar == 0.0) continue;
    const double c = spec.scale(v) * zbar;
    for (std::size_t k = spec.in_begin(v); k < spec.in_end(v); ++k) {
      const VertexId u = src[k];
      const std::size_t p = par[k];
      grad[p] += c * a_[u];
      abar_[u] += c * w[p];
    }
  }
  return preact ? z_[target] : a_[target];
}

void DerivativeEngine::jvp(std::span<const double> params, std::span<const double> input,
                           std::span<const double> tangent, std::span<double> out_values,
                           std::span<double> out_tangents) {
  run_forward(params, input, tangent);
  const auto& outs = spec_->outputs();
  for (std::size_t k = 0; k < outs.size(); ++k) {
    if (!out_values.empty()) out_values[k] = a_[outs[k]];
    out_tangents[k] = da_[outs[k]];
  }
}

void DerivativeEngine::hvp(std::span<const double> w, std::span<const double> x,
                           VertexId target, Target::Kind kind, std::span<const double> t,
                           std::span<double> hv, std::span<double> grad) {
  const NetworkSpec& spec = *spec_;
  if (t.size() != spec.param_count()) {
    throw Error(fmt::format("vector has length {}, network has {} parameters", t.size(),
                            spec.param_count()));
  }
  run_forward(w, x, t);
  std::fill(hv.begin(), hv.end(), 0.0);
  std::fill(grad.begin(), grad.end(), 0.0);
  std::fill(abar_.begin(), abar_.end(), 0.0);
  std::fill(dabar_.begin(), dabar_.end(), 0.0);
  const bool preact = kind == Target::Kind::pre_activation;
  const bool want_grad = !grad.empty();
  if (!preact) abar_[target] = 1.0;
  const auto src = spec.in_src();
  const auto par = spec.in_param();
  const auto& order = spec.order();
  for (std::size_t i = position_[target] + 1; i-- > 0;) {
    const VertexId v = order[i];
    if (spec.input_slot(v) != NetworkSpec::npos) continue;
    double zbar = abar_[v] * d1_[v];
    if (preact && v == target) zbar += 1.0;
    // Tangent of zbar: d(abar * sigma'(z)).
    const double dzbar = dabar_[v] * d1_[v] + abar_[v] * d2_[v] * dz_[v];
    if (const auto skip = spec.skip_from(v)) {
      abar_[*skip] += abar_[v];
      dabar_[*skip] += dabar_[v];
    }
    if (zbar == 0.0 && dzbar == 0.0) continue;
    const double s = spec.scale(v);
    const double c = s * zbar;
    const double dc = s * dzbar;
    for (std::size_t k = spec.in_begin(v); k < spec.in_end(v); ++k) {
      const VertexId u = src[k];
      const std::size_t p = par[k];
      hv[p] += dc * a_[u] + c * da_[u];
      abar_[u] += c * w[p];
      dabar_[u] += dc * w[p] + c * t[p];
      if (want_grad) grad[p] += c * a_[u];
    }
  }
}

std::vector<double> gradient(const NetworkSpec& spec, std::span<const double> params,
                             std::span<const double> input, const Target& target) {
  const VertexId v = target_vertex(spec, target);
  DerivativeEngine engine(spec);
  std::vector<double> g(spec.param_count());
  engine.gradient(params, input, v, target.kind, g);
  return g;
}

std::vector<double> jvp(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input, std::span<const double> tangent) {
  DerivativeEngine engine(spec);
  std::vector<double> out(spec.output_count());
  engine.jvp(params, input, tangent, {}, out);
  return out;
}

std::vector<double> hvp(const NetworkSpec& spec, std::span<const double> params,
                        std::span<const double> input, const Target& target,
                        std::span<const double> v) {
  const VertexId vertex = target_vertex(spec, target);
  DerivativeEngine engine(spec);
  std::vector<double> out(spec.param_count());
  engine.hvp(params, input, vertex, target.kind, v, out);
  return out;
}

DenseMatrix dense_hessian(const NetworkSpec& spec, std::span<const double> params,
                          std::span<const double> input, const Target& target,
                          std::size_t cap) {
  const std::size_t n = spec.param_count();
  if (n > cap) {
    throw Error(fmt::format("dense Hessian needs {} parameters, cap is {}", n, cap));
  }
  const VertexId vertex = target_vertex(spec, target);
  DerivativeEngine engine(spec);
  DenseMatrix h(n);
  std::vector<double> basis(n, 0.0);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0;
    engine.hvp(params, input, vertex, target.kind, basis, column);
    basis[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) h(i, j) = column[i];
  }
  return h;
}

HessianOperator::HessianOperator(const NetworkSpec& spec, std::vector<double> params,
                                 std::vector<double> input, const Target& target)
    : engine_(spec),
      params_(std::move(params)),
      input_(std::move(input)),
      vertex_(target_vertex(spec, target)),
      kind_(target.kind) {
  check_dimensions(spec, params_, input_);
}

void HessianOperator::apply(std::span<const double> v, std::span<double> hv) {
  engine_.hvp(params_, input_, vertex_, kind_, v, hv);
}

}  // namespace dagnet
