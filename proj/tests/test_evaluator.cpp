#include "dagnet/evaluator.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dagnet/builders.hpp"
#include "dagnet/error.hpp"
#include "oracles.hpp"

namespace dagnet {
namespace {

const char* kFamilies[] = {"fcn", "densenet", "random-dag", "conv1d", "skip"};

TEST(InitParams, SameSeedSameVector) {
  const std::vector<std::size_t> sizes{3, 5, 1};
  const auto s = build_fcn(sizes);
  EXPECT_EQ(init_params(s, 4).values, init_params(s, 4).values);
  EXPECT_NE(init_params(s, 4).values, init_params(s, 5).values);
  EXPECT_EQ(init_params(s, 4).size(), s.param_count());
}

TEST(InitParams, Moments) {
  const std::vector<std::size_t> sizes{100, 1000, 1};
  const auto s = build_fcn(sizes);
  const auto w = init_params(s, 99);
  ASSERT_GE(w.size(), 100000u);
  double mean = 0.0;
  for (double v : w.values) mean += v;
  mean /= static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w.size() - 1);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(w.size())));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Forward, HandArithmetic) {
  const std::vector<std::size_t> sizes{4, 1};
  const auto s = build_fcn(sizes);
  const std::vector<double> w{1, 1, 1, 1}, x{1, 2, 3, 4};
  const auto tr = forward_trace(s, w, x);
  EXPECT_EQ(tr.pre_act[s.outputs()[0]], 5.0);
  EXPECT_EQ(tr.outputs[0], 5.0);
}

TEST(Forward, ZeroWeights) {
  const std::vector<std::size_t> sizes{3, 6, 6, 2};
  const auto s = build_fcn(sizes, Activation::tanh);
  const std::vector<double> w(s.param_count(), 0.0);
  const auto x = oracle::normal_vector(3, 1);
  const auto tr = forward_trace(s, w, x);
  for (VertexId v = 0; v < s.vertex_count(); ++v) {
    if (s.layers().layer_of[v] == 0) continue;
    EXPECT_EQ(tr.pre_act[v], 0.0);
    EXPECT_EQ(tr.act[v], 0.0);
  }
}

TEST(Forward, DimensionMismatch) {
  const std::vector<std::size_t> sizes{3, 2};
  const auto s = build_fcn(sizes);
  const std::vector<double> w(6, 1.0), x3(3, 1.0), x2(2, 1.0), w5(5, 1.0);
  EXPECT_NO_THROW(forward(s, w, x3));
  EXPECT_THROW(forward(s, w, x2), Error);
  EXPECT_THROW(forward(s, w5, x3), Error);
}

TEST(Forward, NonFiniteReportsVertex) {
  const std::vector<std::size_t> sizes{1, 1};
  const auto s = build_fcn(sizes);
  const std::vector<double> w{1e308}, x{1e308};
  try {
    forward(s, w, x);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("vertex 1"), std::string::npos) << e.what();
  }
}

TEST(Forward, MatchesNaiveEvaluator) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = oracle::random_family_spec(kFamilies[seed % 5], seed);
    if (seed % 4 == 1) s = drop_edges(s, 0.4, seed);
    const auto w = init_params(s, seed);
    const auto x = oracle::normal_vector(s.input_count(), seed + 1000);
    const auto got = forward(s, w.values, x);
    const auto want = oracle::naive_forward(s, w.values, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << seed;
  }
}

TEST(Forward, MatchesDenseMatrixFcn) {
  SeededStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> sizes{oracle::uniform_int(rng, 1, 6)};
    const std::size_t depth = oracle::uniform_int(rng, 1, 4);
    for (std::size_t l = 0; l < depth; ++l) sizes.push_back(oracle::uniform_int(rng, 1, 8));
    const auto s = build_fcn(sizes, Activation::tanh);
    const auto w = init_params(s, trial);
    const auto x = oracle::normal_vector(sizes[0], 50 + trial);
    // Matrix form: W_l[i][j] is the weight of edge (neuron j of layer l-1, neuron i of layer l).
    std::vector<double> h = x;
    const auto& members = s.layers().layer_members;
    const auto& edges = s.dag().edges();
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      std::vector<double> z(sizes[l], 0.0);
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (s.layers().layer_of[edges[e].dst] != l) continue;
        const auto i = static_cast<std::size_t>(
            std::find(members[l].begin(), members[l].end(), edges[e].dst) - members[l].begin());
        const auto j = static_cast<std::size_t>(
            std::find(members[l - 1].begin(), members[l - 1].end(), edges[e].src) -
            members[l - 1].begin());
        z[i] += w[s.edge_param(e)] * h[j];
      }
      for (double& v : z) {
        v /= std::sqrt(static_cast<double>(sizes[l - 1]));
        if (l + 1 < sizes.size()) v = std::tanh(v);
      }
      h = z;
    }
    const auto got = forward(s, w.values, x);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(got[i], h[i], 1e-12);
  }
}

TEST(Forward, LinearInLastLayerWeights) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto s = oracle::random_family_spec(kFamilies[seed % 5], seed);
    if (s.output_count() == 0) continue;
    const auto w = init_params(s, seed);
    const auto x = oracle::normal_vector(s.input_count(), seed + 7);
    const auto base = forward(s, w.values, x);
    // Scale the incoming weights of output 0 by alpha (skip shared ones).
    const VertexId out = s.outputs()[0];
    std::vector<double> scaled = w.values;
    bool exclusive = true;
    for (std::size_t r = s.in_begin(out); r < s.in_end(out); ++r) {
      if (s.param_multiplicity()[s.in_param()[r]] != 1) exclusive = false;
      scaled[s.in_param()[r]] *= 2.5;
    }
    if (!exclusive) continue;
    EXPECT_NEAR(forward(s, scaled, x)[0], 2.5 * base[0], 1e-12 * (1 + std::abs(base[0])));
  }
}

TEST(Forward, DepthOneIdentityIsScaledDotProduct) {
  const std::vector<std::size_t> sizes{7, 1};
  const auto s = build_fcn(sizes, Activation::identity);
  const auto w = oracle::normal_vector(7, 3);
  const auto x = oracle::normal_vector(7, 4);
  EXPECT_NEAR(forward(s, w, x)[0], dot(w, x) / std::sqrt(7.0), 1e-15);
}

TEST(Forward, TraceInvariant) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = oracle::random_family_spec(kFamilies[seed % 5], seed + 300);
    const auto w = init_params(s, seed);
    const auto x = oracle::normal_vector(s.input_count(), seed);
    const auto tr = forward_trace(s, w.values, x);
    for (VertexId v = 0; v < s.vertex_count(); ++v) {
      if (s.layers().layer_of[v] == 0) {
        EXPECT_EQ(tr.act[v], tr.pre_act[v]);
        continue;
      }
      double want = eval_activation(s.activation(v), tr.pre_act[v], 0);
      if (auto src = s.skip_from(v)) want += tr.act[*src];
      EXPECT_EQ(tr.act[v], want);
    }
  }
}

TEST(Forward, SharedEdgesReadSameParameter) {
  const std::vector<std::size_t> channels{1, 2, 1};
  const auto s = build_conv1d(channels, 3, 6);
  const auto& edges = s.dag().edges();
  std::size_t tied = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (s.param_multiplicity()[s.edge_param(e)] > 1) ++tied;
  }
  EXPECT_GT(tied, 0u);
  // Perturbing one parameter moves every tied edge: compare with the naive evaluator.
  auto w = init_params(s, 3);
  w[0] += 0.5;
  const auto x = oracle::normal_vector(6, 8);
  EXPECT_NEAR(forward(s, w.values, x)[0], oracle::naive_forward(s, w.values, x)[0], 1e-12);
}

TEST(Inputs, GaussianTruncated) {
  const auto b = gaussian_inputs(200, 16, 3, 4.0);
  EXPECT_EQ(b.size(), 200u);
  EXPECT_EQ(b.sup_norm_bound, 4.0);
  for (double v : b.data) EXPECT_LE(std::abs(v), 4.0);
  const auto tight = gaussian_inputs(50, 4, 3, 0.5);
  for (double v : tight.data) EXPECT_LE(std::abs(v), 0.5);
  EXPECT_EQ(gaussian_inputs(5, 3, 9).data, gaussian_inputs(5, 3, 9).data);
}

}  // namespace
}  // namespace dagnet
