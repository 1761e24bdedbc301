#include "dagnet/builders.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/random.hpp"

namespace dagnet {

namespace {

void require_layers(std::span<const std::size_t> sizes, const char* who) {
  if (sizes.size() < 2) throw Error(fmt::format("{}: need at least two layer sizes", who));
  for (std::size_t s : sizes) {
    if (s == 0) throw Error(fmt::format("{}: layer sizes must be positive", who));
  }
}

// Allocates layer-major vertices; returns ids per layer.
std::vector<std::vector<VertexId>> add_layers(NetworkDescription& d,
                                              std::span<const std::size_t> sizes,
                                              Activation hidden) {
  std::vector<std::vector<VertexId>> ids(sizes.size());
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const bool hidden_layer = l > 0 && l + 1 < sizes.size();
    for (std::size_t i = 0; i < sizes[l]; ++i) {
      ids[l].push_back(d.add_vertex(hidden_layer ? hidden : Activation::identity));
    }
  }
  return ids;
}

}  // namespace

NetworkSpec build_fcn(std::span<const std::size_t> sizes, Activation activation) {
  require_layers(sizes, "fcn");
  NetworkDescription d;
  const auto ids = add_layers(d, sizes, activation);
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    for (VertexId u : ids[l - 1]) {
      for (VertexId v : ids[l]) d.add_edge(u, v);
    }
  }
  return NetworkSpec(d);
}

NetworkSpec build_densenet(std::span<const std::size_t> sizes, Activation activation) {
  require_layers(sizes, "densenet");
  NetworkDescription d;
  const auto ids = add_layers(d, sizes, activation);
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    for (std::size_t prev = 0; prev < l; ++prev) {
      for (VertexId u : ids[prev]) {
        for (VertexId v : ids[l]) d.add_edge(u, v);
      }
    }
  }
  return NetworkSpec(d);
}

NetworkSpec drop_edges(const NetworkSpec& spec, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("drop probability must lie in [0, 1)");
  const NetworkDescription full = spec.description();
  if (p == 0.0) return spec;

  SeededStream rng(seed);
  const std::size_t m = full.edges.size();
  std::vector<char> keep(m, 1);
  for (std::size_t i = 0; i < m; ++i) keep[i] = rng.uniform() >= p;

  const std::size_t n = full.vertex_count;
  std::vector<std::size_t> indeg(n, 0), outdeg(n, 0);
  auto recount = [&] {
    std::fill(indeg.begin(), indeg.end(), 0);
    std::fill(outdeg.begin(), outdeg.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (keep[i]) {
        ++indeg[full.edges[i].dst];
        ++outdeg[full.edges[i].src];
      }
    }
  };
  recount();
  const auto original_in = spec.dag().in_degrees();
  const auto original_out = spec.dag().out_degrees();
  for (VertexId v = 0; v < n; ++v) {
    if (original_in[v] == 0 || indeg[v] > 0) continue;
    std::vector<std::size_t> removed;
    for (std::size_t i = 0; i < m; ++i) {
      if (!keep[i] && full.edges[i].dst == v) removed.push_back(i);
    }
    const std::size_t pick = removed[rng.below(removed.size())];
    keep[pick] = 1;
    ++indeg[v];
    ++outdeg[full.edges[pick].src];
  }
  for (VertexId v = 0; v < n; ++v) {
    if (original_out[v] == 0 || outdeg[v] > 0) continue;
    std::vector<std::size_t> removed;
    for (std::size_t i = 0; i < m; ++i) {
      if (!keep[i] && full.edges[i].src == v) removed.push_back(i);
    }
    const std::size_t pick = removed[rng.below(removed.size())];
    keep[pick] = 1;
    ++outdeg[v];
  }

  NetworkDescription d(n);
  d.activation = full.activation;
  d.fan = full.fan;
  d.skips = full.skips;
  for (std::size_t i = 0; i < m; ++i) {
    if (keep[i]) d.add_edge(full.edges[i].src, full.edges[i].dst, full.edge_group[i]);
  }
  return NetworkSpec(d);
}

NetworkSpec build_random_dag(const RandomDagConfig& config, std::uint64_t seed) {
  const auto& sizes = config.layer_sizes;
  require_layers(sizes, "random-dag");
  if (sizes.size() < 3) throw Error("random-dag: depth must be at least 2");
  if (config.width < 1) throw Error("random-dag: width must be at least 1");
  if (!(config.kappa >= 1.0)) throw Error("random-dag: kappa must be >= 1");

  SeededStream rng(seed);
  NetworkDescription d;
  const auto ids = add_layers(d, sizes, config.activation);
  for (VertexId u : ids[0]) {
    for (VertexId v : ids[1]) d.add_edge(u, v);
  }
  const std::size_t lo = config.width;
  const auto hi_raw = static_cast<std::size_t>(std::floor(config.kappa * static_cast<double>(lo)));
  const std::size_t hi = std::max(lo, hi_raw);

  std::vector<VertexId> pool(ids[0]);  // all vertices of layers < l
  pool.insert(pool.end(), ids[1].begin(), ids[1].end());
  for (std::size_t l = 2; l < sizes.size(); ++l) {
    if (lo > pool.size()) {
      throw Error(fmt::format(
          "random-dag: in-degree {} requested but layer {} has only {} earlier neurons", lo, l,
          pool.size()));
    }
    std::vector<VertexId> uncovered(ids[l - 1]);  // layer l-1 neurons without an out-edge yet
    std::vector<std::vector<VertexId>> chosen(ids[l].size());
    for (std::size_t j = 0; j < ids[l].size(); ++j) {
      const std::size_t k = std::min(pool.size(), lo + static_cast<std::size_t>(rng.below(hi - lo + 1)));
      const std::size_t remaining_vertices = ids[l].size() - j;
      std::size_t forced = (uncovered.size() + remaining_vertices - 1) / remaining_vertices;
      forced = std::clamp<std::size_t>(forced, 1, k);
      std::set<VertexId> picked;
      for (std::size_t f = 0; f < forced; ++f) {
        if (!uncovered.empty()) {
          const std::size_t at = rng.below(uncovered.size());
          picked.insert(uncovered[at]);
          uncovered.erase(uncovered.begin() + static_cast<std::ptrdiff_t>(at));
        } else {
          picked.insert(ids[l - 1][rng.below(ids[l - 1].size())]);
        }
      }
      while (picked.size() < k) picked.insert(pool[rng.below(pool.size())]);
      chosen[j].assign(picked.begin(), picked.end());
    }
    for (VertexId u : uncovered) {
      chosen[rng.below(chosen.size())].push_back(u);
    }
    for (std::size_t j = 0; j < ids[l].size(); ++j) {
      for (VertexId u : chosen[j]) d.add_edge(u, ids[l][j]);
    }
    pool.insert(pool.end(), ids[l].begin(), ids[l].end());
  }
  return NetworkSpec(d);
}

SkipPolicy parse_skip_policy(const std::string& name) {
  if (name == "previous-layer-same-index") return SkipPolicy::previous_layer_same_index;
  if (name == "random-earlier") return SkipPolicy::random_earlier;
  throw Error("unknown skip policy '" + name + "'");
}

NetworkSpec add_skip_connections(const NetworkSpec& spec, SkipPolicy policy,
                                 std::uint64_t seed) {
  NetworkDescription d = spec.description();
  const auto& layers = spec.layers();
  const auto outputs = spec.outputs();
  SeededStream rng(seed);
  std::vector<VertexId> earlier(layers.layer_members[0]);
  std::size_t added = 0;
  for (std::size_t l = 1; l <= layers.depth; ++l) {
    const auto& members = layers.layer_members[l];
    for (std::size_t i = 0; i < members.size(); ++i) {
      const VertexId v = members[i];
      if (std::binary_search(outputs.begin(), outputs.end(), v) || spec.skip_from(v)) continue;
      if (policy == SkipPolicy::previous_layer_same_index) {
        const auto& prev = layers.layer_members[l - 1];
        if (i >= prev.size()) continue;
        d.skips.push_back({prev[i], v});
      } else {
        d.skips.push_back({earlier[rng.below(earlier.size())], v});
      }
      ++added;
    }
    earlier.insert(earlier.end(), members.begin(), members.end());
  }
  if (added == 0) throw Error("skip policy found no hidden neuron with a valid earlier vertex");
  return NetworkSpec(d);
}

NetworkSpec build_conv1d(std::span<const std::size_t> channels, std::size_t kernel,
                         std::size_t input_len, const Conv1dOptions& options) {
  require_layers(channels, "conv1d");
  if (kernel == 0 || kernel % 2 == 0) throw Error("conv1d: kernel must be odd");
  if (input_len == 0) throw Error("conv1d: input length must be positive");

  const std::size_t depth = channels.size() - 1;
  NetworkDescription d;
  // ids[l][c][j]
  std::vector<std::vector<std::vector<VertexId>>> ids(channels.size());
  std::vector<std::size_t> len(channels.size());
  len[0] = input_len;
  for (std::size_t l = 0; l <= depth; ++l) {
    const bool head = options.dense_head && l == depth;
    if (l > 0) {
      if (head) {
        len[l] = 1;
      } else if (options.padding == Padding::same) {
        len[l] = len[l - 1];
      } else {
        if (kernel > len[l - 1]) {
          throw Error(fmt::format("conv1d: kernel {} exceeds length {} at layer {}", kernel,
                                  len[l - 1], l));
        }
        len[l] = len[l - 1] - kernel + 1;
      }
    }
    const bool hidden = l > 0 && l < depth;
    ids[l].resize(channels[l]);
    for (std::size_t c = 0; c < channels[l]; ++c) {
      for (std::size_t j = 0; j < len[l]; ++j) {
        ids[l][c].push_back(d.add_vertex(hidden ? options.activation : Activation::identity));
      }
    }
  }

  std::uint64_t group = 0;
  const std::ptrdiff_t half = options.padding == Padding::same
                                  ? static_cast<std::ptrdiff_t>((kernel - 1) / 2)
                                  : 0;
  for (std::size_t l = 1; l <= depth; ++l) {
    const std::size_t cin = channels[l - 1];
    if (options.dense_head && l == depth) {
      for (std::size_t i = 0; i < channels[l]; ++i) {
        for (std::size_t c = 0; c < cin; ++c) {
          for (VertexId u : ids[l - 1][c]) d.add_edge(u, ids[l][i][0]);
        }
      }
      continue;
    }
    const double window = static_cast<double>(cin * kernel);
    for (std::size_t i = 0; i < channels[l]; ++i) {
      const std::uint64_t base = group;
      for (std::size_t j = 0; j < len[l]; ++j) {
        const VertexId v = ids[l][i][j];
        std::size_t taps = 0;
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t t = 0; t < kernel; ++t) {
            const std::ptrdiff_t pos =
                static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(t) - half;
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len[l - 1])) continue;
            d.add_edge(ids[l - 1][c][static_cast<std::size_t>(pos)], v, base + c * kernel + t);
            ++taps;
          }
        }
        if (static_cast<double>(taps) != window) d.fan[v] = window;
      }
      group = base + cin * kernel;
    }
  }
  return NetworkSpec(d);
}

NetworkSpec inject_bottleneck(const NetworkSpec& spec, std::size_t count, std::size_t indegree) {
  if (count == 0) throw Error("bottleneck count must be at least 1");
  if (indegree == 0) throw Error("bottleneck in-degree must be at least 1");
  const auto& layers = spec.layers();
  if (layers.depth < 3) throw Error("no interior layer (2..L-1) to hold bottleneck neurons");

  NetworkDescription d = spec.description();
  const std::size_t interior = layers.depth - 2;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t l = 2 + j % interior;
    const auto& feeders = layers.layer_members[l - 1];
    if (indegree > feeders.size()) {
      throw Error(fmt::format("bottleneck in-degree {} exceeds layer {} size {}", indegree, l - 1,
                              feeders.size()));
    }
    const VertexId b = d.add_vertex(spec.activation(layers.layer_members[l].front()));
    for (std::size_t r = 0; r < indegree; ++r) {
      d.add_edge(feeders[(j * indegree + r) % feeders.size()], b);
    }
    for (VertexId v : layers.layer_members[l + 1]) d.add_edge(b, v);
  }
  return NetworkSpec(d);
}

void validate_config(const BuilderConfig& c) {
  static const std::set<std::string> families{"fcn", "densenet", "random-dag", "conv1d"};
  if (!families.contains(c.family)) throw Error("unknown family '" + c.family + "'");
  if (c.layer_sizes.empty()) throw Error("layer sizes must not be empty");
  if (!(c.dropout_p >= 0.0 && c.dropout_p < 1.0)) throw Error("dropout_p must lie in [0, 1)");
  if (c.kernel == 0 || c.kernel % 2 == 0) throw Error("kernel must be odd and >= 1");
}

NetworkSpec build_network(const BuilderConfig& c) {
  validate_config(c);
  NetworkSpec spec = [&] {
    if (c.family == "fcn") return build_fcn(c.layer_sizes, c.activation);
    if (c.family == "densenet") return build_densenet(c.layer_sizes, c.activation);
    if (c.family == "random-dag") {
      return build_random_dag({c.layer_sizes, c.width, c.kappa, c.activation},
                              derive_seed(c.seed, 1));
    }
    Conv1dOptions opt;
    opt.dense_head = c.dense_head;
    opt.activation = c.activation;
    return build_conv1d(c.layer_sizes, c.kernel, c.input_len, opt);
  }();
  if (c.dropout_p > 0.0) spec = drop_edges(spec, c.dropout_p, derive_seed(c.seed, 2));
  return spec;
}

}  // namespace dagnet
