#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include "nodeinj/nodeinj.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace nodeinj;
using namespace nodeinj::testing;

namespace {

class TuDir {
 public:
  explicit TuDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("nodeinj_tu_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TuDir() { fs::remove_all(path_); }

  void write(const std::string& file, const std::string& text) const { std::ofstream(path_ / file) << text; }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

}  // namespace

TEST(GraphInvariants, RejectsSelfLoopsAndOutOfRange) {
  EXPECT_THROW(make_graph(2, {{0, 0}}), InvalidArgument);
  EXPECT_THROW(make_graph(2, {{0, 2}}), InvalidArgument);
  EXPECT_THROW(Graph(0, {}, Matrix(0, 1)), InvalidArgument);
  EXPECT_THROW(Graph(2, {}, Matrix(3, 1)), ShapeError);
}

TEST(GraphInvariants, CollapsesDuplicateAndReversedEdges) {
  const Graph g = make_graph(3, {{1, 0}, {0, 1}, {2, 1}});
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.edges()[0], Edge(0, 1));
  EXPECT_EQ(g.edges()[1], Edge(1, 2));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(Degree, Examples) {
  EXPECT_EQ(degree(path_graph(3), 1), 2u);
  EXPECT_EQ(degree(make_graph(3, {{0, 1}}), 2), 0u);
  EXPECT_EQ(degree(star_graph(4), 0), 4u);
  EXPECT_THROW(degree(path_graph(3), 3), InvalidArgument);
}

TEST(TuFormat, MinimalFixture) {
  TuDir dir("min");
  dir.write("T_A.txt", "1, 2\n2, 1\n");
  dir.write("T_graph_indicator.txt", "1\n1\n");
  dir.write("T_graph_labels.txt", "1\n");
  const Dataset ds = parse_tu_dataset(dir.path(), "T");
  ASSERT_EQ(ds.graphs.size(), 1u);
  const Graph& g = ds.graphs[0];
  EXPECT_EQ(g.num_nodes(), 2u);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges()[0], Edge(0, 1));
  EXPECT_EQ(g.label(), 0);
  EXPECT_EQ(ds.feature_kind, FeatureKind::constant_one);
}

TEST(TuFormat, ConstantOneFeaturesWithoutNodeFiles) {
  TuDir dir("imdb");
  dir.write("I_A.txt", "1,2\n2,1\n2,3\n3,2\n4,5\n5,4\n");
  dir.write("I_graph_indicator.txt", "1\n1\n1\n2\n2\n");
  dir.write("I_graph_labels.txt", "0\n1\n");
  const Dataset ds = parse_tu_dataset(dir.path(), "I");
  for (const auto& g : ds.graphs) {
    ASSERT_EQ(g.feature_dim(), 1u);
    for (double x : g.features().flat()) EXPECT_EQ(x, 1.0);
  }
}

TEST(TuFormat, LabelsRemapInSortedOrderAndNodeLabelsBecomeOneHot) {
  TuDir dir("nl");
  dir.write("N_A.txt", " 1 , 2 \n2, 1\n3,4\n4,3\n\n\n");
  dir.write("N_graph_indicator.txt", "1\n1\n2\n2\n");
  dir.write("N_graph_labels.txt", "1\n-1\n");
  dir.write("N_node_labels.txt", "0\n3\n1\n1\n");
  const Dataset ds = parse_tu_dataset(dir.path(), "N");
  EXPECT_EQ(ds.num_classes, 2u);
  EXPECT_EQ(ds.graphs[0].label(), 1);
  EXPECT_EQ(ds.graphs[1].label(), 0);
  EXPECT_EQ(ds.feature_kind, FeatureKind::one_hot);
  ASSERT_EQ(ds.feature_dim(), 4u);
  EXPECT_EQ(ds.graphs[0].features().row(1)[3], 1.0);
  EXPECT_EQ(ds.graphs[1].features().row(0)[1], 1.0);
}

TEST(TuFormat, NodeAttributesIntegerVectors) {
  TuDir dir("attr");
  dir.write("C_A.txt", "1,2\n");
  dir.write("C_graph_indicator.txt", "1\n1\n");
  dir.write("C_graph_labels.txt", "3\n");
  dir.write("C_node_attributes.txt", "4, 7\n10,2\n");
  const Dataset ds = parse_tu_dataset(dir.path(), "C");
  EXPECT_EQ(ds.feature_kind, FeatureKind::integer_vector);
  EXPECT_EQ(ds.graphs[0].features().row(0)[1], 7.0);
  dir.write("C_node_attributes.txt", "4.5, 7\n10,2\n");
  EXPECT_EQ(parse_tu_dataset(dir.path(), "C").feature_kind, FeatureKind::real_vector);
}

TEST(TuFormat, Errors) {
  TuDir dir("err");
  EXPECT_THROW(parse_tu_dataset(dir.path(), "E"), ParseError);  // missing files
  dir.write("E_A.txt", "1, 3\n");
  dir.write("E_graph_indicator.txt", "1\n1\n2\n");
  dir.write("E_graph_labels.txt", "0\n1\n");
  EXPECT_THROW(parse_tu_dataset(dir.path(), "E"), ParseError);  // cross-graph edge
  dir.write("E_A.txt", "1, x\n");
  EXPECT_THROW(parse_tu_dataset(dir.path(), "E"), ParseError);  // non-integer
  dir.write("E_A.txt", "1, 2\n");
  dir.write("E_graph_indicator.txt", "1\n1\n3\n");
  dir.write("E_graph_labels.txt", "0\n1\n0\n");
  EXPECT_THROW(parse_tu_dataset(dir.path(), "E"), ParseError);  // graph 2 empty
}

TEST(TuFormat, RandomDatasetsSatisfyInvariantsAndLineCounts) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    TuDir dir("prop" + std::to_string(trial));
    std::uniform_int_distribution<int> graphs_d(1, 6), nodes_d(1, 9);
    std::bernoulli_distribution coin(0.35), both(0.5);
    std::ofstream a(dir.path() / "P_A.txt"), gi(dir.path() / "P_graph_indicator.txt"),
        gl(dir.path() / "P_graph_labels.txt");
    const int ng = graphs_d(rng);
    std::size_t offset = 0, undirected = 0;
    for (int g = 1; g <= ng; ++g) {
      const int n = nodes_d(rng);
      for (int v = 0; v < n; ++v) gi << g << "\n";
      for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
          if (!coin(rng)) continue;
          ++undirected;
          a << offset + u + 1 << ", " << offset + v + 1 << "\n";
          if (both(rng)) a << offset + v + 1 << ", " << offset + u + 1 << "\n";
        }
      }
      gl << (g % 3) * 2 + 1 << "\n";
      offset += static_cast<std::size_t>(n);
    }
    a.close();
    gi.close();
    gl.close();
    const Dataset ds = parse_tu_dataset(dir.path(), "P");
    ASSERT_NO_THROW(ds.validate());
    std::size_t nodes = 0, edges = 0;
    for (const auto& g : ds.graphs) {
      nodes += g.num_nodes();
      edges += g.num_edges();
      for (const auto& e : g.edges()) {
        EXPECT_LT(e.u, e.v);
        EXPECT_LT(e.v, g.num_nodes());
      }
    }
    EXPECT_EQ(nodes, count_lines(dir.path() / "P_graph_indicator.txt"));
    EXPECT_EQ(edges, undirected);
  }
}

TEST(Export, DotSingleNode) {
  const auto dot = export_graph(empty_graph(1), {}, ExportFormat::dot);
  EXPECT_EQ(dot, "graph G {\n  node [shape=circle];\n  0;\n}\n");
}

TEST(Export, DotMarkedNodeFixture) {
  const auto dot = export_graph(make_graph(2, {{0, 1}}), {1}, ExportFormat::dot);
  EXPECT_EQ(dot,
            "graph G {\n"
            "  node [shape=circle];\n"
            "  0;\n"
            "  1 [style=filled, fillcolor=\"#e4572e\"];\n"
            "  0 -- 1;\n"
            "}\n");
  EXPECT_THROW(export_graph(empty_graph(1), {3}, ExportFormat::dot), InvalidArgument);
}

TEST(Export, JsonSchemaAndRoundTrip) {
  const Graph g = make_graph(3, {{2, 0}, {1, 0}}, std::nullopt, 2, 0.5);
  const auto text = export_graph(g, {}, ExportFormat::json);
  EXPECT_EQ(text, "{\"edges\":[[0,1],[0,2]],\"label\":null,\"node_features\":[[0.5,0.5],[0.5,0.5],[0.5,0.5]],"
                  "\"num_nodes\":3}\n");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    Graph r = random_graph(rng, 1 + i % 9, 0.4, i % 3, 1 + i % 3);
    EXPECT_EQ(graph_from_json(nlohmann::json::parse(export_graph(r, {}, ExportFormat::json))), r);
  }
}
