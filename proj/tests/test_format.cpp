#include "dagnet/format.hpp"

#include <gtest/gtest.h>

#include "dagnet/builders.hpp"
#include "dagnet/error.hpp"
#include "oracles.hpp"

namespace dagnet {
namespace {

int parse_error_line(std::string_view text) {
  try {
    read_network(text);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

TEST(ReadDag, Minimal) {
  const Dag dag = read_dag("# dagnet-v1\nV 0 id\nV 1 id\nE 0 1");
  EXPECT_EQ(dag.vertex_count(), 2u);
  ASSERT_EQ(dag.edges().size(), 1u);
  EXPECT_EQ(dag.edges()[0], (Edge{0, 1}));
}

TEST(ReadDag, OutOfRangeReportsEdgeLine) {
  EXPECT_EQ(parse_error_line("# dagnet-v1\nE 0 9\nV 0 id\nV 1 id\n"), 2);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 id\nV 1 id\nE 0 9\n"), 4);
}

TEST(ReadDag, MalformedRecords) {
  EXPECT_EQ(parse_error_line("dagnet\nV 0 id\n"), 1);
  EXPECT_EQ(parse_error_line(""), 1);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 id\nX 1 2\n"), 3);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV a id\n"), 2);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 id\nV 1 id\nE 0 -1\n"), 4);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 id\nV 0 id\n"), 3);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 nosuchact\n"), 2);
  EXPECT_EQ(parse_error_line("# dagnet-v1\nV 0 id\nV 1 id\nE 0 1 h=2\n"), 4);
}

TEST(ReadDag, CommentsAndBlankLines) {
  const auto d = read_network("# dagnet-v1\r\n# note\n\nV 0 identity # input\nV 1 tanh\nV 2 id\n"
                              "E 0 1 g=7\nE 1 2\n");
  EXPECT_EQ(d.vertex_count, 3u);
  EXPECT_EQ(d.activation[1], Activation::tanh);
  ASSERT_EQ(d.edges.size(), 2u);
  EXPECT_EQ(d.edge_group[0], std::optional<std::uint64_t>(7));
  EXPECT_FALSE(d.edge_group[1]);
}

TEST(ReadDag, FanAndSkipRecords) {
  const auto d = read_network(
      "# dagnet-v1\nV 0 id\nV 1 tanh fan=3\nV 2 id\nE 0 1\nE 1 2\nS 0 2\n");
  EXPECT_EQ(d.fan[1], std::optional<double>(3.0));
  ASSERT_EQ(d.skips.size(), 1u);
  EXPECT_EQ(d.skips[0], (Edge{0, 2}));
}

TEST(WriteDag, CanonicalOrder) {
  const Dag dag(3, {{1, 2}, {0, 2}, {0, 1}});
  EXPECT_EQ(write_dag(dag),
            "# dagnet-v1\nV 0 identity\nV 1 identity\nV 2 identity\nE 0 1\nE 0 2\nE 1 2\n");
  const Dag back = read_dag(write_dag(dag));
  EXPECT_EQ(back.vertex_count(), 3u);
  EXPECT_EQ(write_dag(back), write_dag(dag));
}

TEST(RoundTrip, DenseNetIsByteIdentical) {
  const std::vector<std::size_t> sizes{3, 4, 4, 1};
  const auto spec = build_densenet(sizes);
  const std::string text = write_network(spec);
  EXPECT_EQ(write_network(NetworkSpec(read_network(text))), text);
}

TEST(RoundTrip, SharedWeightsSkipsAndFans) {
  const std::vector<std::size_t> channels{1, 2, 1};
  Conv1dOptions opt;
  const auto conv = build_conv1d(channels, 3, 5, opt);
  const std::string text = write_network(conv);
  const NetworkSpec back(read_network(text));
  EXPECT_EQ(back.param_count(), conv.param_count());
  EXPECT_EQ(write_network(back), text);

  const std::vector<std::size_t> sizes{2, 3, 3, 1};
  const auto skip = add_skip_connections(build_fcn(sizes), SkipPolicy::previous_layer_same_index);
  const std::string t2 = write_network(skip);
  EXPECT_NE(t2.find("\nS "), std::string::npos);
  EXPECT_EQ(write_network(NetworkSpec(read_network(t2))), t2);
}

TEST(RoundTrip, RandomSpecs) {
  const char* families[] = {"fcn", "densenet", "random-dag", "conv1d", "skip"};
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto spec = oracle::random_family_spec(families[s % 5], s);
    if (s % 3 == 0) spec = drop_edges(spec, 0.3, s);
    const std::string text = write_network(spec);
    const NetworkSpec back(read_network(text));
    EXPECT_EQ(write_network(back), text) << "seed " << s;
    EXPECT_EQ(back.param_count(), spec.param_count());
  }
}

}  // namespace
}  // namespace dagnet
