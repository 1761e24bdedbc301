#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dagnet/activation.hpp"
#include "dagnet/dag.hpp"

namespace dagnet {

/// Editable, unvalidated description of a network: what a dagnet-v1 file
/// holds and what builders manipulate before compiling a NetworkSpec.
struct NetworkDescription {
  std::size_t vertex_count = 0;
  std::vector<Activation> activation;                  // per vertex
  std::vector<std::optional<double>> fan;              // divisor override per vertex
  std::vector<Edge> edges;                             // trainable edges
  std::vector<std::optional<std::uint64_t>> edge_group;  // parallel to edges; tied weights
  std::vector<Edge> skips;                             // identity skips (src -> dst)

  explicit NetworkDescription(std::size_t n = 0)
      : vertex_count(n), activation(n, Activation::identity), fan(n) {}

  VertexId add_vertex(Activation act, std::optional<double> fan_override = std::nullopt);
  void add_edge(VertexId src, VertexId dst, std::optional<std::uint64_t> group = std::nullopt);
  Dag dag() const { return Dag(vertex_count, edges); }
};

/// Validated, immutable network: graph, layering, activations, identity skips
/// and the edge -> parameter map (weight sharing). Edges are held in
/// canonical (src, dst) order; an edge's rank is its index in that order.
class NetworkSpec {
 public:
  /// Throws Error if the description is invalid (cyclic graph, backward
  /// skip, bad fan override, ...). Input and output activations are forced
  /// to identity.
  explicit NetworkSpec(const NetworkDescription& description);

  const Dag& dag() const noexcept { return dag_; }
  const LayerAssignment& layers() const noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.depth; }
  std::size_t vertex_count() const noexcept { return dag_.vertex_count(); }
  std::size_t edge_count() const noexcept { return dag_.edges().size(); }
  std::size_t param_count() const noexcept { return param_count_; }

  Activation activation(VertexId v) const { return activation_[v]; }
  std::optional<VertexId> skip_from(VertexId v) const;
  /// Normalizing divisor of the pre-activation (in-degree unless overridden).
  double fan_in(VertexId v) const { return fan_[v]; }
  bool fan_overridden(VertexId v) const { return fan_overridden_[v]; }
  double scale(VertexId v) const { return scale_[v]; }

  std::size_t edge_param(std::size_t edge_rank) const { return edge_param_[edge_rank]; }
  std::span<const std::size_t> share_map() const noexcept { return edge_param_; }
  /// Number of edges tied to each parameter.
  std::span<const std::size_t> param_multiplicity() const noexcept { return multiplicity_; }

  const std::vector<VertexId>& inputs() const noexcept { return inputs_; }
  const std::vector<VertexId>& outputs() const noexcept { return outputs_; }
  std::size_t input_count() const noexcept { return inputs_.size(); }
  std::size_t output_count() const noexcept { return outputs_.size(); }
  /// Position of an input vertex in the input vector, or npos.
  std::size_t input_slot(VertexId v) const { return input_slot_[v]; }
  /// Vertices sorted by (layer, id).
  const std::vector<VertexId>& order() const noexcept { return order_; }

  // Incoming edges of v occupy [in_begin(v), in_end(v)) in the CSR arrays.
  std::size_t in_begin(VertexId v) const { return in_offset_[v]; }
  std::size_t in_end(VertexId v) const { return in_offset_[v + 1]; }
  std::span<const VertexId> in_src() const noexcept { return in_src_; }
  std::span<const std::size_t> in_param() const noexcept { return in_param_; }
  std::span<const std::size_t> in_rank() const noexcept { return in_rank_; }

  /// Parameters on edges into vertices of the given layer.
  std::vector<std::size_t> params_of_layer(std::size_t layer) const;

  /// Canonical description; NetworkSpec(description()) reproduces *this.
  NetworkDescription description() const;

  static constexpr std::size_t npos = ~std::size_t{0};

 private:
  Dag dag_;
  LayerAssignment layers_;
  std::vector<Activation> activation_;
  std::vector<VertexId> skip_;  // npos-like sentinel when absent
  std::vector<double> fan_;
  std::vector<char> fan_overridden_;
  std::vector<double> scale_;
  std::vector<std::size_t> edge_param_;
  std::vector<std::size_t> multiplicity_;
  std::size_t param_count_ = 0;
  std::vector<VertexId> inputs_;
  std::vector<VertexId> outputs_;
  std::vector<std::size_t> input_slot_;
  std::vector<VertexId> order_;
  std::vector<std::size_t> in_offset_;
  std::vector<VertexId> in_src_;
  std::vector<std::size_t> in_param_;
  std::vector<std::size_t> in_rank_;
};

}  // namespace dagnet
