#include "dagnet/format.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "dagnet/error.hpp"

namespace dagnet {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line, std::string_view what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(line, fmt::format("{} '{}' is not a non-negative integer", what, s));
  }
  return value;
}

double parse_real(std::string_view s, std::size_t line, std::string_view what) {
  // std::from_chars for double is unavailable on some toolchains; strtod on a copy.
  const std::string copy(s);
  char* end = nullptr;
  const double value = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) {
    throw ParseError(line, fmt::format("{} '{}' is not a number", what, s));
  }
  return value;
}

struct PendingEdge {
  std::uint64_t src;
  std::uint64_t dst;
  std::optional<std::uint64_t> group;
  std::size_t line;
};

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace

NetworkDescription read_network(std::string_view text) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) {
        if (start < text.size()) lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  if (lines.empty() || strip(lines[0]) != kDagnetHeader) {
    throw ParseError(1, fmt::format("expected header '{}'", kDagnetHeader));
  }

  struct PendingVertex {
    std::uint64_t id;
    Activation act;
    std::optional<double> fan;
    std::size_t line;
  };
  std::vector<PendingVertex> vertices;
  std::vector<PendingEdge> edges;
  std::vector<PendingEdge> skips;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string_view line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = strip(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f[0] == "V") {
      if (f.size() < 3 || f.size() > 4) {
        throw ParseError(lineno, "vertex record needs 'V <id> <activation> [fan=<n>]'");
      }
      PendingVertex v{parse_uint(f[1], lineno, "vertex id"), Activation::identity,
                      std::nullopt, lineno};
      try {
        v.act = parse_activation(f[2]);
      } catch (const Error& e) {
        throw ParseError(lineno, e.what());
      }
      if (f.size() == 4) {
        if (!f[3].starts_with("fan=")) {
          throw ParseError(lineno, fmt::format("unknown vertex attribute '{}'", f[3]));
        }
        v.fan = parse_real(f[3].substr(4), lineno, "fan");
      }
      vertices.push_back(v);
    } else if (f[0] == "E" || f[0] == "S") {
      const bool is_edge = f[0] == "E";
      if (f.size() < 3 || f.size() > (is_edge ? 4u : 3u)) {
        throw ParseError(lineno, is_edge ? "edge record needs 'E <src> <dst> [g=<group>]'"
                                         : "skip record needs 'S <src> <dst>'");
      }
      PendingEdge e{parse_uint(f[1], lineno, "source id"),
                    parse_uint(f[2], lineno, "destination id"), std::nullopt, lineno};
      if (f.size() == 4) {
        if (!f[3].starts_with("g=")) {
          throw ParseError(lineno, fmt::format("unknown edge attribute '{}'", f[3]));
        }
        e.group = parse_uint(f[3].substr(2), lineno, "share group");
      }
      (is_edge ? edges : skips).push_back(e);
    } else {
      throw ParseError(lineno, fmt::format("unknown record tag '{}'", f[0]));
    }
  }

  const std::size_t n = vertices.size();
  NetworkDescription d(n);
  std::vector<char> declared(n, 0);
  for (const auto& v : vertices) {
    if (v.id >= n) {
      throw ParseError(v.line, fmt::format("vertex id {} out of range: ids must be dense in [0, {})",
                                           v.id, n));
    }
    if (declared[v.id]) throw ParseError(v.line, fmt::format("vertex {} declared twice", v.id));
    declared[v.id] = 1;
    d.activation[v.id] = v.act;
    d.fan[v.id] = v.fan;
  }
  auto check = [n](const PendingEdge& e) {
    if (e.src >= n || e.dst >= n) {
      throw ParseError(e.line, fmt::format("id out of range in ({}, {}): {} vertices declared",
                                           e.src, e.dst, n));
    }
  };
  for (const auto& e : edges) {
    check(e);
    d.add_edge(static_cast<VertexId>(e.src), static_cast<VertexId>(e.dst), e.group);
  }
  for (const auto& s : skips) {
    check(s);
    d.skips.push_back({static_cast<VertexId>(s.src), static_cast<VertexId>(s.dst)});
  }
  return d;
}

Dag read_dag(std::string_view text) { return read_network(text).dag(); }

std::string write_network(const NetworkDescription& d) {
  std::string out(kDagnetHeader);
  out += '\n';
  for (std::size_t v = 0; v < d.vertex_count; ++v) {
    out += fmt::format("V {} {}", v, to_string(d.activation[v]));
    if (d.fan[v]) out += fmt::format(" fan={}", *d.fan[v]);
    out += '\n';
  }
  std::vector<std::size_t> perm(d.edges.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return d.edges[a] < d.edges[b]; });
  for (std::size_t i : perm) {
    out += fmt::format("E {} {}", d.edges[i].src, d.edges[i].dst);
    if (i < d.edge_group.size() && d.edge_group[i]) out += fmt::format(" g={}", *d.edge_group[i]);
    out += '\n';
  }
  std::vector<Edge> skips = d.skips;
  std::sort(skips.begin(), skips.end());
  for (const Edge& s : skips) out += fmt::format("S {} {}\n", s.src, s.dst);
  return out;
}

std::string write_network(const NetworkSpec& spec) { return write_network(spec.description()); }

std::string write_dag(const Dag& dag) {
  NetworkDescription d(dag.vertex_count());
  for (const Edge& e : dag.edges()) d.add_edge(e.src, e.dst);
  return write_network(d);
}

std::string load_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NetworkDescription load_network_file(const std::string& path) {
  return read_network(load_text_file(path));
}

void save_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace dagnet
