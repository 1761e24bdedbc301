#include "dagnet/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/experiments.hpp"
#include "dagnet/format.hpp"
#include "dagnet/plot.hpp"

namespace dagnet {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dagnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dagnet_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& text = {}) {
    const std::string path = (dir_ / name).string();
    if (!text.empty()) std::ofstream(path) << text;
    return path;
  }
  fs::path dir_;
};

constexpr const char* kAcyclic = "# dagnet-v1\nV 0 id\nV 1 id\nV 2 tanh\nV 3 id\nE 0 2\nE 1 2\nE 2 3\n";
constexpr const char* kCyclic = "# dagnet-v1\nV 0 id\nV 1 tanh\nV 2 tanh\nV 3 id\nE 0 1\nE 1 2\nE 2 1\nE 2 3\n";

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

TEST_F(CliTest, ValidateAcyclic) {
  const auto r = run({"validate", "--dag", file("net.dagnet", kAcyclic)});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "ok\n");
}

TEST_F(CliTest, LayersOnCycleFails) {
  const auto r = run({"layers", "--dag", file("cyclic.dagnet", kCyclic)});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("1 -> 2 -> 1"), std::string::npos) << r.err;
  EXPECT_EQ(run({"validate", "--dag", file("cyclic.dagnet")}).code, 1);
}

TEST_F(CliTest, LayersReport) {
  const auto r = run({"layers", "--dag", file("net.dagnet", kAcyclic)});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("depth 2\n", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("width 1\n"), std::string::npos);
}

TEST_F(CliTest, SweepRowCount) {
  const std::string out = file("s.csv");
  const auto r = run({"sweep", "--family", "densenet", "--widths", "8,16,32,64", "--seeds", "5",
                      "--metric", "hessnorm", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = load_text_file(out);
  EXPECT_EQ(data_rows(csv), 20u);
  EXPECT_NE(csv.find(std::string(kSweepCsvHeader) + "\n"), std::string::npos);
  EXPECT_EQ(csv.rfind("# dagnet ", 0), 0u);
  EXPECT_NE(csv.find("# seeds: 0,1,2,3,4"), std::string::npos) << csv.substr(0, 600);
  EXPECT_EQ(read_sweep_csv(csv).size(), 20u);
}

TEST_F(CliTest, SweepIsByteIdentical) {
  const std::vector<std::string> args{"sweep", "--family", "fcn", "--widths", "4,8", "--seeds",
                                      "3,7", "--metric", "lin_residual", "--probes", "2",
                                      "--input-dim", "4", "--jobs", "2"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", file("a.csv")});
  b.insert(b.end(), {"--out", file("b.csv")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(load_text_file(file("a.csv")), load_text_file(file("b.csv")));
  EXPECT_EQ(run(args).out, run(args).out);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"sweep", "--bogus", "1"}).code, 2);
  EXPECT_EQ(run({"sweep", "--widths", "8", "--probes", "many"}).code, 2);
  const auto r = run({"validate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--dag"), std::string::npos);
  EXPECT_EQ(run({"report"}).code, 2);
}

TEST_F(CliTest, DomainErrorsExitOne) {
  auto r = run({"validate", "--dag", file("missing.dagnet")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(run({"sweep", "--widths", "abc"}).code, 1);
  EXPECT_EQ(run({"sweep", "--widths", "8", "--family", "resnet"}).code, 1);
  EXPECT_EQ(run({"layers", "--dag", file("bad.dagnet", "# dagnet-v1\nV 0 id\nE 0 5\n")}).code, 1);
}

TEST_F(CliTest, ConfigFileAndOverride) {
  const std::string cfg = file("run.cfg",
                               "# sweep settings\nfamily = fcn\nwidths = 4,8\nseeds = 2\n"
                               "metric = lin_residual\nprobes = 2\ninput_dim = 4\n");
  const auto a = run({"sweep", "--config", cfg});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(data_rows(a.out), 4u);
  EXPECT_NE(a.out.find("# widths = 4,8"), std::string::npos) << a.out.substr(0, 800);
  const auto b = run({"sweep", "--config", cfg, "--widths", "16"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(data_rows(b.out), 2u);
  for (const auto& rec : read_sweep_csv(b.out)) EXPECT_EQ(rec.width, 16u);
  const std::string bad = file("bad.cfg", "family = fcn\ncolour = blue\n");
  EXPECT_EQ(run({"sweep", "--config", bad, "--widths", "4"}).code, 2);
  EXPECT_EQ(run({"sweep", "--config", file("nope.cfg")}).code, 1);
}

TEST_F(CliTest, ReadConfigText) {
  const auto kv = read_config_text("# c\n a = 1 \n\nmax_iter=30 # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"max-iter", "30"}));
  EXPECT_THROW(read_config_text("just words\n"), ParseError);
  EXPECT_THROW(read_config_text(" = 3\n"), ParseError);
}

TEST_F(CliTest, ListParsing) {
  EXPECT_EQ(parse_width_list("8,16,32"), (std::vector<std::size_t>{8, 16, 32}));
  EXPECT_THROW(parse_width_list(""), Error);
  EXPECT_THROW(parse_width_list("8,,16"), Error);
  EXPECT_THROW(parse_width_list("-8"), Error);
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(parse_seed_list("3,7"), (std::vector<std::uint64_t>{3, 7}));
  EXPECT_EQ(parse_seed_list("5,"), (std::vector<std::uint64_t>{5}));
  EXPECT_THROW(parse_seed_list("0"), Error);
  EXPECT_THROW(parse_seed_list("x"), Error);
}

TEST_F(CliTest, BuildRoundTripsThroughValidate) {
  const std::string net = file("b.dagnet");
  const auto r = run({"build", "--family", "densenet", "--width", "4", "--input-dim", "3",
                      "--out", net});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = load_text_file(net);
  EXPECT_EQ(text.rfind("# dagnet-v1\n# dagnet ", 0), 0u) << text.substr(0, 200);
  EXPECT_NO_THROW(read_network(text));
  EXPECT_EQ(run({"validate", "--dag", net}).code, 0);
  const auto e = run({"eval", "--dag", net, "--input", "0.5,-1,2"});
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(run({"eval", "--dag", net, "--input", "0.5"}).code, 1);
}

TEST_F(CliTest, DerivativeCommands) {
  const std::string net = file("net.dagnet", kAcyclic);
  auto r = run({"grad-check", "--dag", net});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
  r = run({"hessnorm", "--family", "fcn", "--width", "8", "--input-dim", "4", "--probes", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  r = run({"lincheck", "--family", "fcn", "--width", "8", "--input-dim", "4", "--probes", "4"});
  EXPECT_EQ(r.code, 0) << r.err;
  r = run({"ntk", "--family", "fcn", "--width", "8", "--input-dim", "4", "--n", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# dagnet ", 0), 0u);
  r = run({"train", "--family", "fcn", "--width", "8", "--input-dim", "4", "--n", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, HessnormMatchesSweepCell) {
  const auto single = run({"hessnorm", "--family", "fcn", "--width", "8", "--input-dim", "4",
                           "--probes", "2", "--seed", "3"});
  const auto sweep = run({"sweep", "--family", "fcn", "--widths", "8", "--input-dim", "4",
                          "--probes", "2", "--seeds", "3,"});
  ASSERT_EQ(single.code, 0);
  ASSERT_EQ(sweep.code, 0);
  const auto recs = read_sweep_csv(sweep.out);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NE(single.out.find(fmt::format("{:.17g}", recs[0].value)), std::string::npos) << single.out;
}

constexpr const char* kSweepCsv =
    "# comment\nfamily,width,depth,seed,metric,value,converged,wall_ms\n"
    "fcn,4,3,0,hessnorm,0.5,1,0\nfcn,4,3,1,hessnorm,0.7,1,0\n"
    "fcn,16,3,0,hessnorm,0.3,1,0\nfcn,64,3,0,hessnorm,0.15,1,0\n";

TEST(Plot, MeansAndFit) {
  const auto d = load_plot_data(kSweepCsv, "width", "value");
  ASSERT_EQ(d.x.size(), 3u);
  EXPECT_DOUBLE_EQ(d.mean[0], 0.6);
  ASSERT_TRUE(d.fit.has_value());
  const std::string svg = render_svg(d, "width", "value");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find("-1/2"), std::string::npos);
  EXPECT_EQ(svg, render_svg(d, "width", "value"));
}

TEST(Plot, SinglePointHasNoFitLine) {
  const auto d = load_plot_data("width,value\n8,0.5\n8,0.25\n", "width", "value");
  ASSERT_EQ(d.x.size(), 1u);
  EXPECT_FALSE(d.fit.has_value());
  const std::string svg = render_svg(d, "width", "value");
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg.find("stroke-dasharray"), std::string::npos);
}

TEST(Plot, Errors) {
  EXPECT_THROW(load_plot_data(kSweepCsv, "width", "nosuch"), Error);
  EXPECT_THROW(load_plot_data("width,value\n", "width", "value"), Error);
  try {
    load_plot_data("width,value\n8,0.5\n16,0\n", "width", "value");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("value"), std::string::npos);
  }
}

TEST_F(CliTest, ReportWritesSvg) {
  const std::string csv = file("s.csv", kSweepCsv);
  const std::string svg = file("p.svg");
  const auto r = run({"report", "--csv", csv, "--out", svg});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_text_file(svg).rfind("<svg", 0), 0u);
  const auto bad = run({"report", "--csv", csv, "--y", "nosuch", "--out", svg});
  EXPECT_EQ(bad.code, 1);
}

}  // namespace
}  // namespace dagnet
