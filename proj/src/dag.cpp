#include "dagnet/dag.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "dagnet/error.hpp"

namespace dagnet {

namespace {

bool in_range(const Dag& dag, const Edge& e) {
  return e.src < dag.vertex_count() && e.dst < dag.vertex_count();
}

// Successor lists restricted to in-range edges, duplicates collapsed.
std::vector<std::vector<VertexId>> successors(const Dag& dag) {
  std::vector<std::vector<VertexId>> succ(dag.vertex_count());
  for (const Edge& e : dag.edges()) {
    if (in_range(dag, e)) succ[e.src].push_back(e.dst);
  }
  for (auto& s : succ) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return succ;
}

std::optional<std::vector<VertexId>> find_cycle(const std::vector<std::vector<VertexId>>& succ) {
  enum class Color { white, gray, black };
  const std::size_t n = succ.size();
  std::vector<Color> color(n, Color::white);
  // Explicit stack of (vertex, next successor index).
  std::vector<std::pair<VertexId, std::size_t>> stack;
  for (VertexId root = 0; root < n; ++root) {
    if (color[root] != Color::white) continue;
    stack.emplace_back(root, 0);
    color[root] = Color::gray;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < succ[v].size()) {
        const VertexId w = succ[v][next++];
        if (color[w] == Color::gray) {
          std::vector<VertexId> witness;
          auto it = std::find_if(stack.begin(), stack.end(),
                                 [w](const auto& frame) { return frame.first == w; });
          for (; it != stack.end(); ++it) witness.push_back(it->first);
          witness.push_back(w);
          return witness;
        }
        if (color[w] == Color::white) {
          color[w] = Color::gray;
          stack.emplace_back(w, 0);
        }
      } else {
        color[v] = Color::black;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::size_t> Dag::in_degrees() const {
  std::vector<std::size_t> deg(vertex_count_, 0);
  for (const Edge& e : edges_) {
    if (e.dst < vertex_count_ && e.src < vertex_count_) ++deg[e.dst];
  }
  return deg;
}

std::vector<std::size_t> Dag::out_degrees() const {
  std::vector<std::size_t> deg(vertex_count_, 0);
  for (const Edge& e : edges_) {
    if (e.dst < vertex_count_ && e.src < vertex_count_) ++deg[e.src];
  }
  return deg;
}

std::vector<VertexId> Dag::input_set() const {
  const auto deg = in_degrees();
  std::vector<VertexId> out;
  for (VertexId v = 0; v < vertex_count_; ++v) {
    if (deg[v] == 0) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> Dag::output_set() const {
  const auto deg = out_degrees();
  std::vector<VertexId> out;
  for (VertexId v = 0; v < vertex_count_; ++v) {
    if (deg[v] == 0) out.push_back(v);
  }
  return out;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::cycle: return "cycle";
    case ViolationKind::duplicate_edge: return "duplicate-edge";
    case ViolationKind::dangling_vertex: return "dangling-vertex";
    case ViolationKind::empty_input_set: return "empty-input-set";
    case ViolationKind::empty_output_set: return "empty-output-set";
    case ViolationKind::orphan: return "orphan";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate(const Dag& dag) {
  ValidationReport report;
  auto& out = report.violations;

  std::set<Edge> seen;
  for (const Edge& e : dag.edges()) {
    if (!in_range(dag, e)) {
      out.push_back({ViolationKind::dangling_vertex,
                     fmt::format("edge ({}, {}) references a vertex >= {}", e.src, e.dst,
                                 dag.vertex_count()),
                     {e.src, e.dst}});
      continue;
    }
    if (!seen.insert(e).second) {
      out.push_back({ViolationKind::duplicate_edge,
                     fmt::format("edge ({}, {}) appears more than once", e.src, e.dst),
                     {e.src, e.dst}});
    }
  }

  const auto succ = successors(dag);
  if (auto cycle = find_cycle(succ)) {
    std::string path;
    for (std::size_t i = 0; i < cycle->size(); ++i) {
      path += (i ? " -> " : "") + std::to_string((*cycle)[i]);
    }
    out.push_back({ViolationKind::cycle, "cycle " + path, std::move(*cycle)});
  }

  const auto inputs = dag.input_set();
  if (inputs.empty()) out.push_back({ViolationKind::empty_input_set, "no input vertex", {}});
  if (dag.output_set().empty()) {
    out.push_back({ViolationKind::empty_output_set, "no output vertex", {}});
  }

  // Every non-input vertex must be derivable from the inputs.
  std::vector<char> reached(dag.vertex_count(), 0);
  std::vector<VertexId> frontier(inputs.begin(), inputs.end());
  for (VertexId v : inputs) reached[v] = 1;
  while (!frontier.empty()) {
    const VertexId v = frontier.back();
    frontier.pop_back();
    for (VertexId w : succ[v]) {
      if (!reached[w]) {
        reached[w] = 1;
        frontier.push_back(w);
      }
    }
  }
  std::vector<VertexId> orphans;
  for (VertexId v = 0; v < dag.vertex_count(); ++v) {
    if (!reached[v]) orphans.push_back(v);
  }
  if (!orphans.empty()) {
    out.push_back({ViolationKind::orphan,
                   fmt::format("{} vertex(es) unreachable from the inputs, first {}",
                               orphans.size(), orphans.front()),
                   std::move(orphans)});
  }
  return report;
}

LayerAssignment assign_layers(const Dag& dag) {
  const auto report = validate(dag);
  if (!report.ok()) {
    throw Error("cannot layer an invalid graph: " + report.violations.front().message);
  }
  const std::size_t n = dag.vertex_count();
  const auto succ = successors(dag);
  auto indeg = dag.in_degrees();

  // Kahn's algorithm; ids ascending among ready vertices for determinism.
  std::vector<VertexId> ready;
  for (VertexId v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push_back(v);
  }
  std::vector<std::size_t> layer(n, 0);
  std::size_t head = 0;
  while (head < ready.size()) {
    const VertexId v = ready[head++];
    for (VertexId w : succ[v]) {
      layer[w] = std::max(layer[w], layer[v] + 1);
      if (--indeg[w] == 0) ready.push_back(w);
    }
  }

  LayerAssignment out;
  out.layer_of = std::move(layer);
  out.depth = n ? *std::max_element(out.layer_of.begin(), out.layer_of.end()) : 0;
  out.layer_members.resize(out.depth + 1);
  for (VertexId v = 0; v < n; ++v) out.layer_members[out.layer_of[v]].push_back(v);
  return out;
}

std::vector<VertexId> layered_order(const LayerAssignment& layers) {
  std::vector<VertexId> order;
  order.reserve(layers.layer_of.size());
  for (const auto& members : layers.layer_members) {
    order.insert(order.end(), members.begin(), members.end());
  }
  return order;
}

DegreeProfile degree_profile(const Dag& dag, const LayerAssignment& layers) {
  DegreeProfile profile;
  const auto indeg = dag.in_degrees();
  const std::size_t depth = layers.depth;
  profile.per_layer_min.assign(depth + 1, 0);
  profile.per_layer_max.assign(depth + 1, 0);
  for (std::size_t l = 1; l <= depth; ++l) {
    std::size_t lo = ~std::size_t{0};
    std::size_t hi = 0;
    for (VertexId v : layers.layer_members[l]) {
      lo = std::min(lo, indeg[v]);
      hi = std::max(hi, indeg[v]);
    }
    profile.per_layer_min[l] = layers.layer_members[l].empty() ? 0 : lo;
    profile.per_layer_max[l] = hi;
  }
  if (depth < 2) return profile;

  std::size_t width = ~std::size_t{0};
  std::size_t sup = 0;
  for (std::size_t l = 2; l <= depth; ++l) {
    width = std::min(width, profile.per_layer_min[l]);
    sup = std::max(sup, profile.per_layer_max[l]);
  }
  profile.width = width;
  if (width > 1) {
    profile.poly_exponent = std::log(static_cast<double>(sup)) / std::log(static_cast<double>(width));
  }
  return profile;
}

}  // namespace dagnet
