#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dagnet/activation.hpp"
#include "dagnet/network.hpp"

namespace dagnet {

/// Layer sizes (d_0, ..., d_L); complete bipartite edges between
/// consecutive layers.
NetworkSpec build_fcn(std::span<const std::size_t> layer_sizes,
                      Activation activation = Activation::tanh);

/// Each layer-l neuron receives every neuron of layers 0..l-1.
NetworkSpec build_densenet(std::span<const std::size_t> layer_sizes,
                           Activation activation = Activation::tanh);

/// Removes each trainable edge independently with probability p. A
/// non-input vertex left without incoming edges gets one uniformly chosen
/// removed incoming edge back; likewise a formerly non-output vertex left
/// without outgoing edges gets one removed outgoing edge back.
NetworkSpec drop_edges(const NetworkSpec& spec, double p, std::uint64_t seed);

struct RandomDagConfig {
  std::vector<std::size_t> layer_sizes;  // (d_0, ..., d_L), L >= 2
  std::size_t width = 4;                 // minimum in-degree m for layers >= 2
  double kappa = 2.0;                    // in-degree drawn from [m, floor(kappa m)]
  Activation activation = Activation::tanh;
};

/// Layer 1 is fully connected to the inputs. Every neuron of layer l >= 2
/// draws its in-degree uniformly from [m, floor(kappa m)] and its
/// in-neighbours from layers < l, with at least one in layer l-1. Neurons of
/// layer l-1 not yet feeding anything are preferred for that slot so that
/// only the last layer has out-degree 0; when the last layer's in-degrees
/// cannot cover layer L-1 the uncovered neurons get one extra edge.
/// Throws Error when m exceeds the number of earlier neurons.
NetworkSpec build_random_dag(const RandomDagConfig& config, std::uint64_t seed);

enum class SkipPolicy { previous_layer_same_index, random_earlier };

/// Adds a non-trainable identity skip to hidden neurons (outputs are left
/// alone). previous-layer-same-index links v_i^(l) to v_i^(l-1) where that
/// neuron exists; random-earlier picks a uniform vertex of an earlier layer.
/// Throws Error when no skip could be placed.
NetworkSpec add_skip_connections(const NetworkSpec& spec, SkipPolicy policy,
                                 std::uint64_t seed = 0);
SkipPolicy parse_skip_policy(const std::string& name);

enum class Padding { same, valid };

struct Conv1dOptions {
  Padding padding = Padding::same;
  /// Replace the last convolution by a full inner product over all
  /// channels and positions (one output neuron per final channel).
  bool dense_head = false;
  Activation activation = Activation::tanh;
};

/// Stride-1 1-D convolution unrolled into a DAG. channels = (c_0, ..., c_L).
/// Every (layer, out-channel, in-channel, tap) owns one shared parameter.
/// Zero padding is realized by omitting taps while keeping the divisor at
/// the full window c_{l-1} * kernel. Throws Error for an even kernel.
NetworkSpec build_conv1d(std::span<const std::size_t> channels, std::size_t kernel,
                         std::size_t input_len, const Conv1dOptions& options = {});

/// Inserts `count` neurons of in-degree `indegree` into the interior layers
/// 2..L-1 (round robin), fed by layer l-1 and feeding every neuron of layer
/// l+1. Throws Error when count or indegree is 0 or no interior layer exists.
NetworkSpec inject_bottleneck(const NetworkSpec& spec, std::size_t count, std::size_t indegree);

struct BuilderConfig {
  std::string family = "fcn";  // fcn | densenet | random-dag | conv1d
  std::vector<std::size_t> layer_sizes;  // conv1d: channels
  double dropout_p = 0.0;
  std::size_t kernel = 3;
  std::size_t input_len = 8;
  std::size_t width = 4;  // random-dag
  double kappa = 2.0;     // random-dag
  bool dense_head = true;  // conv1d
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;
};

/// Throws Error when an invariant of the config is violated.
void validate_config(const BuilderConfig& config);
NetworkSpec build_network(const BuilderConfig& config);

}  // namespace dagnet
