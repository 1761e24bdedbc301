#include "dagnet/activation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "dagnet/error.hpp"

namespace dagnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// gamma1 = sup|sigma''|, gamma2 = sup|sigma'''|.
constexpr std::array<ActivationInfo, 6> kInfo{{
    {"identity", 0.0, 0.0, 0.0, true},
    {"tanh", 0.0, 0.76980035891950105, 2.0, true},
    {"sigmoid", 0.5, 0.096225044864937631, 0.125, true},
    {"softplus", std::numbers::ln2, 0.25, 0.096225044864937631, true},
    {"swish", 0.0, 0.5, 0.30818151579563374, true},
    {"relu", 0.0, kNaN, kNaN, false},
}};

constexpr std::array<Activation, 6> kAll{Activation::identity, Activation::tanh,
                                         Activation::sigmoid,  Activation::softplus,
                                         Activation::swish,    Activation::relu};

double logistic(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const ActivationInfo& activation_info(Activation kind) {
  return kInfo[static_cast<std::size_t>(kind)];
}

std::span<const Activation> all_activations() { return kAll; }

Activation parse_activation(std::string_view name) {
  if (name == "id") return Activation::identity;
  for (Activation a : kAll) {
    if (activation_info(a).name == name) return a;
  }
  throw Error("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation kind) { return std::string(activation_info(kind).name); }

ActivationValue eval_activation_all(Activation kind, double z) noexcept {
  switch (kind) {
    case Activation::identity:
      return {z, 1.0, 0.0};
    case Activation::tanh: {
      const double t = std::tanh(z);
      const double d1 = 1.0 - t * t;
      return {t, d1, -2.0 * t * d1};
    }
    case Activation::sigmoid: {
      const double s = logistic(z);
      const double d1 = s * (1.0 - s);
      return {s, d1, d1 * (1.0 - 2.0 * s)};
    }
    case Activation::softplus: {
      const double s = logistic(z);
      const double v = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
      return {v, s, s * (1.0 - s)};
    }
    case Activation::swish: {
      const double s = logistic(z);
      const double ds = s * (1.0 - s);
      return {z * s, s + z * ds, 2.0 * ds + z * ds * (1.0 - 2.0 * s)};
    }
    case Activation::relu:
      return {z > 0 ? z : 0.0, z > 0 ? 1.0 : 0.0, 0.0};
  }
  return {kNaN, kNaN, kNaN};
}

double eval_activation(Activation kind, double z, int order) {
  const ActivationValue a = eval_activation_all(kind, z);
  switch (order) {
    case 0: return a.value;
    case 1: return a.d1;
    case 2: return a.d2;
    default: throw Error("activation derivative order must be 0, 1 or 2");
  }
}

}  // namespace dagnet
