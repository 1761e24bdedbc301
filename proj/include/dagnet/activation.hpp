#pragma once

#include <span>
#include <string>
#include <string_view>

namespace dagnet {

enum class Activation { identity, tanh, sigmoid, softplus, swish, relu };

/// Stored smoothness constants of an activation.
struct ActivationInfo {
  std::string_view name;
  double gamma0;  // bound on |sigma(0)|
  double gamma1;  // Lipschitz constant of sigma'
  double gamma2;  // Lipschitz constant of sigma''
  bool smooth;    // twice differentiable with Lipschitz sigma''
};

const ActivationInfo& activation_info(Activation kind);
std::span<const Activation> all_activations();

/// Throws Error for an unknown name.
Activation parse_activation(std::string_view name);
std::string to_string(Activation kind);

/// sigma, sigma' and sigma'' evaluated together.
struct ActivationValue {
  double value;
  double d1;
  double d2;
};

ActivationValue eval_activation_all(Activation kind, double z) noexcept;

/// order 0, 1 or 2. Throws Error for other orders.
double eval_activation(Activation kind, double z, int order);

}  // namespace dagnet
