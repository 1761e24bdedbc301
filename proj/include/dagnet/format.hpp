#pragma once

#include <string>
#include <string_view>

#include "dagnet/dag.hpp"
#include "dagnet/network.hpp"

namespace dagnet {

// dagnet-v1 text format:
//
//   # dagnet-v1
//   V <id> <activation> [fan=<divisor>]
//   E <src> <dst> [g=<share-group>]
//   S <src> <dst>
//
// Lines starting with '#' after the header are comments. Writers emit V
// records by ascending id, then E and S records in (src, dst) order.

inline constexpr std::string_view kDagnetHeader = "# dagnet-v1";

/// Throws ParseError with the line of the first malformed record. The result
/// is not validated as a DAG.
NetworkDescription read_network(std::string_view text);
Dag read_dag(std::string_view text);

std::string write_network(const NetworkDescription& description);
std::string write_network(const NetworkSpec& spec);
/// Bare graph with identity activations.
std::string write_dag(const Dag& dag);

std::string load_text_file(const std::string& path);
NetworkDescription load_network_file(const std::string& path);
void save_text_file(const std::string& path, std::string_view text);

}  // namespace dagnet
