#include "dagnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "dagnet/error.hpp"

namespace dagnet {

namespace {
constexpr VertexId kNoSkip = ~VertexId{0};
}

VertexId NetworkDescription::add_vertex(Activation act, std::optional<double> fan_override) {
  activation.push_back(act);
  fan.push_back(fan_override);
  return static_cast<VertexId>(vertex_count++);
}

void NetworkDescription::add_edge(VertexId src, VertexId dst,
                                  std::optional<std::uint64_t> group) {
  edges.push_back({src, dst});
  edge_group.push_back(group);
}

NetworkSpec::NetworkSpec(const NetworkDescription& d) {
  const std::size_t n = d.vertex_count;
  if (d.activation.size() != n || d.fan.size() != n) {
    throw Error("network description: per-vertex arrays do not match vertex count");
  }
  if (d.edge_group.size() != d.edges.size()) {
    throw Error("network description: edge group list does not match edge list");
  }

  // Canonical edge order with groups carried along.
  std::vector<std::size_t> perm(d.edges.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(),
            [&](std::size_t a, std::size_t b) { return d.edges[a] < d.edges[b]; });
  std::vector<Edge> edges;
  edges.reserve(perm.size());
  for (std::size_t i : perm) edges.push_back(d.edges[i]);
  dag_ = Dag(n, std::move(edges));

  const auto report = validate(dag_);
  if (!report.ok()) throw Error("invalid network graph: " + report.violations.front().message);
  layers_ = assign_layers(dag_);
  inputs_ = dag_.input_set();
  outputs_ = dag_.output_set();
  order_ = layered_order(layers_);

  activation_ = d.activation;
  for (VertexId v : inputs_) activation_[v] = Activation::identity;
  for (VertexId v : outputs_) activation_[v] = Activation::identity;

  input_slot_.assign(n, npos);
  for (std::size_t i = 0; i < inputs_.size(); ++i) input_slot_[inputs_[i]] = i;

  // Parameters: numbered by first appearance in canonical edge order.
  edge_param_.resize(dag_.edges().size());
  std::map<std::uint64_t, std::size_t> group_param;
  for (std::size_t rank = 0; rank < perm.size(); ++rank) {
    const auto& group = d.edge_group[perm[rank]];
    if (group) {
      auto [it, inserted] = group_param.try_emplace(*group, param_count_);
      if (inserted) ++param_count_;
      edge_param_[rank] = it->second;
    } else {
      edge_param_[rank] = param_count_++;
    }
  }
  multiplicity_.assign(param_count_, 0);
  for (std::size_t p : edge_param_) ++multiplicity_[p];

  // Incoming CSR sorted by (dst, src).
  const auto indeg = dag_.in_degrees();
  in_offset_.assign(n + 1, 0);
  for (VertexId v = 0; v < n; ++v) in_offset_[v + 1] = in_offset_[v] + indeg[v];
  in_src_.resize(dag_.edges().size());
  in_param_.resize(dag_.edges().size());
  in_rank_.resize(dag_.edges().size());
  std::vector<std::size_t> cursor(in_offset_.begin(), in_offset_.end() - 1);
  for (std::size_t rank = 0; rank < dag_.edges().size(); ++rank) {
    const Edge& e = dag_.edges()[rank];
    const std::size_t slot = cursor[e.dst]++;
    in_src_[slot] = e.src;
    in_param_[slot] = edge_param_[rank];
    in_rank_[slot] = rank;
  }

  fan_.assign(n, 0.0);
  fan_overridden_.assign(n, 0);
  scale_.assign(n, 0.0);
  for (VertexId v = 0; v < n; ++v) {
    if (d.fan[v]) {
      const double f = *d.fan[v];
      if (!(f >= 1.0) || !std::isfinite(f)) {
        throw Error(fmt::format("vertex {}: fan override must be finite and >= 1", v));
      }
      if (indeg[v] == 0) throw Error(fmt::format("vertex {}: fan override on an input", v));
      fan_[v] = f;
      fan_overridden_[v] = 1;
    } else {
      fan_[v] = static_cast<double>(indeg[v]);
    }
    if (fan_[v] > 0) scale_[v] = 1.0 / std::sqrt(fan_[v]);
  }

  skip_.assign(n, kNoSkip);
  for (const Edge& s : d.skips) {
    if (s.src >= n || s.dst >= n) {
      throw Error(fmt::format("skip ({}, {}) references a missing vertex", s.src, s.dst));
    }
    if (layers_.layer_of[s.src] >= layers_.layer_of[s.dst]) {
      throw Error(fmt::format("skip ({}, {}) does not point to a later layer", s.src, s.dst));
    }
    if (skip_[s.dst] != kNoSkip) {
      throw Error(fmt::format("vertex {} has more than one skip connection", s.dst));
    }
    skip_[s.dst] = s.src;
  }
}

std::optional<VertexId> NetworkSpec::skip_from(VertexId v) const {
  if (skip_[v] == kNoSkip) return std::nullopt;
  return skip_[v];
}

std::vector<std::size_t> NetworkSpec::params_of_layer(std::size_t layer) const {
  std::vector<std::size_t> out;
  if (layer >= layers_.layer_members.size()) return out;
  for (VertexId v : layers_.layer_members[layer]) {
    for (std::size_t k = in_begin(v); k < in_end(v); ++k) out.push_back(in_param_[k]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

NetworkDescription NetworkSpec::description() const {
  NetworkDescription d(vertex_count());
  d.activation = activation_;
  for (VertexId v = 0; v < vertex_count(); ++v) {
    if (fan_overridden_[v]) d.fan[v] = fan_[v];
  }
  d.edges = dag_.edges();
  d.edge_group.resize(d.edges.size());
  for (std::size_t rank = 0; rank < d.edges.size(); ++rank) {
    const std::size_t p = edge_param_[rank];
    if (multiplicity_[p] > 1) d.edge_group[rank] = p;
  }
  for (VertexId v = 0; v < vertex_count(); ++v) {
    if (skip_[v] != kNoSkip) d.skips.push_back({skip_[v], v});
  }
  return d;
}

}  // namespace dagnet
