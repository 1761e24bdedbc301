#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dagnet {

using VertexId = std::uint32_t;

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Directed graph on dense vertex ids 0..vertex_count-1. Acyclicity is not
/// enforced on construction; use validate() before layering.
class Dag {
 public:
  Dag() = default;
  Dag(std::size_t vertex_count, std::vector<Edge> edges)
      : vertex_count_(vertex_count), edges_(std::move(edges)) {}

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// In-degree per vertex; out-of-range endpoints are ignored.
  std::vector<std::size_t> in_degrees() const;
  std::vector<std::size_t> out_degrees() const;
  /// Vertices with in-degree 0, ascending.
  std::vector<VertexId> input_set() const;
  /// Vertices with out-degree 0, ascending.
  std::vector<VertexId> output_set() const;

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  std::size_t vertex_count_ = 0;
  std::vector<Edge> edges_;
};

enum class ViolationKind { cycle, duplicate_edge, dangling_vertex, empty_input_set,
                           empty_output_set, orphan };

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
  /// Cycle witness v0 -> v1 -> ... -> v0, or the offending vertices otherwise.
  std::vector<VertexId> witness;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

ValidationReport validate(const Dag& dag);

struct LayerAssignment {
  /// p(v): longest path length from the input set to v.
  std::vector<std::size_t> layer_of;
  std::size_t depth = 0;
  /// Members of each layer, ascending vertex id.
  std::vector<std::vector<VertexId>> layer_members;

  std::size_t layer_size(std::size_t layer) const { return layer_members.at(layer).size(); }
  friend bool operator==(const LayerAssignment&, const LayerAssignment&) = default;
};

/// Longest-path layering over a topological order. Throws Error if the graph
/// does not validate.
LayerAssignment assign_layers(const Dag& dag);

/// Vertices sorted by (layer, id); a valid evaluation order.
std::vector<VertexId> layered_order(const LayerAssignment& layers);

struct DegreeProfile {
  /// Minimum in-degree over layers 2..L; empty when depth < 2.
  std::optional<std::size_t> width;
  /// Indexed by layer; layer 0 entries are 0.
  std::vector<std::size_t> per_layer_min;
  std::vector<std::size_t> per_layer_max;
  /// log(max in-degree over layers 2..L) / log(width); empty when width <= 1.
  std::optional<double> poly_exponent;
};

DegreeProfile degree_profile(const Dag& dag, const LayerAssignment& layers);

}  // namespace dagnet
