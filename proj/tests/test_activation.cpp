#include "dagnet/activation.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dagnet/error.hpp"

namespace dagnet {
namespace {

TEST(Activation, SpotValues) {
  EXPECT_EQ(eval_activation(Activation::tanh, 0.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(eval_activation(Activation::softplus, 0.0, 0), std::log(2.0));
  EXPECT_DOUBLE_EQ(eval_activation(Activation::sigmoid, 0.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(eval_activation(Activation::swish, 0.0, 1), 0.5);
  EXPECT_EQ(eval_activation(Activation::identity, 3.5, 0), 3.5);
  EXPECT_EQ(eval_activation(Activation::identity, 3.5, 1), 1.0);
  EXPECT_EQ(eval_activation(Activation::identity, 3.5, 2), 0.0);
  EXPECT_EQ(eval_activation(Activation::relu, -1.0, 0), 0.0);
  EXPECT_EQ(eval_activation(Activation::relu, 2.0, 1), 1.0);
}

TEST(Activation, BadOrderAndName) {
  EXPECT_THROW(eval_activation(Activation::tanh, 0.0, 3), Error);
  EXPECT_THROW(parse_activation("gelu"), Error);
  EXPECT_EQ(parse_activation("id"), Activation::identity);
  for (Activation a : all_activations()) EXPECT_EQ(parse_activation(to_string(a)), a);
}

TEST(Activation, DerivativesMatchFiniteDifferences) {
  const double h = 1e-5;
  for (Activation a : all_activations()) {
    if (!activation_info(a).smooth) continue;
    for (double z = -4.0; z <= 4.0; z += 0.125) {
      const double d1 = (eval_activation(a, z + h, 0) - eval_activation(a, z - h, 0)) / (2 * h);
      const double d2 = (eval_activation(a, z + h, 1) - eval_activation(a, z - h, 1)) / (2 * h);
      const double e1 = eval_activation(a, z, 1);
      const double e2 = eval_activation(a, z, 2);
      EXPECT_LE(std::abs(d1 - e1), 1e-6 * std::max(1.0, std::abs(e1))) << to_string(a) << " " << z;
      EXPECT_LE(std::abs(d2 - e2), 1e-6 * std::max(1.0, std::abs(e2))) << to_string(a) << " " << z;
    }
  }
}

TEST(Activation, ConstantsBoundTheFunctions) {
  for (Activation a : all_activations()) {
    const auto& info = activation_info(a);
    EXPECT_LE(std::abs(eval_activation(a, 0.0, 0)), info.gamma0 + 1e-15) << info.name;
    if (!info.smooth) continue;
    // gamma1 bounds |sigma''| and gamma2 bounds |sigma'''| (estimated by differences).
    for (double z = -8.0; z <= 8.0; z += 0.01) {
      EXPECT_LE(std::abs(eval_activation(a, z, 2)), info.gamma1 + 1e-12) << info.name << " " << z;
      const double d3 = (eval_activation(a, z + 1e-5, 2) - eval_activation(a, z - 1e-5, 2)) / 2e-5;
      EXPECT_LE(std::abs(d3), info.gamma2 + 1e-6) << info.name << " " << z;
    }
  }
}

TEST(Activation, StableAtExtremes) {
  for (Activation a : all_activations()) {
    for (double z : {-800.0, -40.0, 40.0, 800.0}) {
      const auto v = eval_activation_all(a, z);
      EXPECT_TRUE(std::isfinite(v.value) && std::isfinite(v.d1) && std::isfinite(v.d2))
          << to_string(a) << " " << z;
    }
  }
  EXPECT_DOUBLE_EQ(eval_activation(Activation::softplus, 800.0, 0), 800.0);
}

TEST(Activation, ReluIsNotSmooth) {
  EXPECT_FALSE(activation_info(Activation::relu).smooth);
  EXPECT_TRUE(activation_info(Activation::tanh).smooth);
}

}  // namespace
}  // namespace dagnet
