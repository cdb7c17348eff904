#pragma once

// Reader for the TU graph-classification exchange format:
//   <name>_A.txt                 "row, col" edge lines, 1-indexed global node ids
//   <name>_graph_indicator.txt   graph id (1-indexed) of every node
//   <name>_graph_labels.txt      one label per graph
//   <name>_node_attributes.txt   optional, comma-separated reals per node
//   <name>_node_labels.txt       optional, categorical label per node

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"

namespace nodeinj {

namespace tu_detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct Line {
  std::size_t number = 0;  // 1-based line number in the file
  std::string text;
};

/// Non-blank lines of a file, trimmed.
inline std::vector<Line> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<Line> out;
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    auto t = trim(raw);
    if (!t.empty()) out.push_back({n, std::string(t)});
  }
  return out;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::int64_t parse_int(std::string_view s, const std::filesystem::path& file, std::size_t line) {
  std::int64_t v = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(file.filename().string() + ":" + std::to_string(line) + ": expected integer, got '" +
                     std::string(s) + "'");
  }
  return v;
}

inline double parse_real(std::string_view s, const std::filesystem::path& file, std::size_t line) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(file.filename().string() + ":" + std::to_string(line) + ": expected number, got '" +
                     std::string(s) + "'");
  }
  return v;
}

}  // namespace tu_detail

/// Parses `<root>/<name>_*.txt` into a Dataset.
///
/// Nodes are renumbered 0-based within each graph. Both directions of an edge
/// collapse to one undirected edge; self-loop lines are dropped. Raw graph
/// labels map to 0..C-1 in sorted order. Node attributes take precedence over
/// node labels when both files are present; node labels become one-hot rows of
/// width max(label)+1; with neither file every node gets the feature [1.0].
inline Dataset parse_tu_dataset(const std::filesystem::path& root, const std::string& name) {
  using namespace tu_detail;
  namespace fs = std::filesystem;
  const auto file = [&](std::string_view suffix) { return root / (name + std::string(suffix)); };

  const fs::path a_path = file("_A.txt");
  const fs::path gi_path = file("_graph_indicator.txt");
  const fs::path gl_path = file("_graph_labels.txt");
  for (const auto& p : {a_path, gi_path, gl_path}) {
    if (!fs::exists(p)) throw ParseError("missing mandatory file " + p.string());
  }

  // Graph membership.
  const auto gi_lines = read_lines(gi_path);
  const std::size_t total_nodes = gi_lines.size();
  std::vector<std::size_t> node_graph(total_nodes);
  std::vector<NodeId> node_local(total_nodes);
  std::int64_t max_gid = 0;
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const auto gid = parse_int(gi_lines[i].text, gi_path, gi_lines[i].number);
    if (gid < 1) throw ParseError(gi_path.filename().string() + ": graph ids must be >= 1");
    max_gid = std::max(max_gid, gid);
  }
  const auto num_graphs = static_cast<std::size_t>(max_gid);
  std::vector<std::size_t> graph_sizes(num_graphs, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const auto g = static_cast<std::size_t>(parse_int(gi_lines[i].text, gi_path, gi_lines[i].number) - 1);
    node_graph[i] = g;
    node_local[i] = static_cast<NodeId>(graph_sizes[g]++);
  }
  for (std::size_t g = 0; g < num_graphs; ++g) {
    if (graph_sizes[g] == 0) throw ParseError("graph " + std::to_string(g + 1) + " has no nodes");
  }

  // Graph labels.
  const auto gl_lines = read_lines(gl_path);
  if (gl_lines.size() != num_graphs) {
    throw ParseError(gl_path.filename().string() + ": " + std::to_string(gl_lines.size()) +
                     " labels for " + std::to_string(num_graphs) + " graphs");
  }
  std::vector<std::int64_t> raw_labels;
  raw_labels.reserve(num_graphs);
  for (const auto& l : gl_lines) raw_labels.push_back(parse_int(l.text, gl_path, l.number));
  std::vector<std::int64_t> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  // Edges.
  std::vector<std::vector<Edge>> edges(num_graphs);
  for (const auto& l : read_lines(a_path)) {
    const auto parts = split_commas(l.text);
    if (parts.size() != 2) {
      throw ParseError(a_path.filename().string() + ":" + std::to_string(l.number) +
                       ": expected 'row, col'");
    }
    const auto r = parse_int(parts[0], a_path, l.number);
    const auto c = parse_int(parts[1], a_path, l.number);
    if (r < 1 || c < 1 || static_cast<std::size_t>(r) > total_nodes ||
        static_cast<std::size_t>(c) > total_nodes) {
      throw ParseError(a_path.filename().string() + ":" + std::to_string(l.number) +
                       ": node id out of range");
    }
    const auto ri = static_cast<std::size_t>(r - 1);
    const auto ci = static_cast<std::size_t>(c - 1);
    if (node_graph[ri] != node_graph[ci]) {
      throw ParseError(a_path.filename().string() + ":" + std::to_string(l.number) +
                       ": edge joins nodes of different graphs");
    }
    if (ri == ci) continue;
    edges[node_graph[ri]].emplace_back(node_local[ri], node_local[ci]);
  }

  // Node features.
  Matrix all_features;
  FeatureKind kind = FeatureKind::constant_one;
  const fs::path attr_path = file("_node_attributes.txt");
  const fs::path nl_path = file("_node_labels.txt");
  if (fs::exists(attr_path)) {
    const auto lines = read_lines(attr_path);
    if (lines.size() != total_nodes) {
      throw ParseError(attr_path.filename().string() + ": " + std::to_string(lines.size()) +
                       " rows for " + std::to_string(total_nodes) + " nodes");
    }
    std::vector<double> row;
    for (const auto& l : lines) {
      row.clear();
      for (auto part : split_commas(l.text)) row.push_back(parse_real(part, attr_path, l.number));
      if (!all_features.empty() && row.size() != all_features.cols()) {
        throw ParseError(attr_path.filename().string() + ":" + std::to_string(l.number) +
                         ": inconsistent attribute width");
      }
      all_features.append_row(row);
    }
    kind = infer_feature_kind(all_features) == FeatureKind::real_vector ? FeatureKind::real_vector
                                                                        : FeatureKind::integer_vector;
  } else if (fs::exists(nl_path)) {
    const auto lines = read_lines(nl_path);
    if (lines.size() != total_nodes) {
      throw ParseError(nl_path.filename().string() + ": " + std::to_string(lines.size()) +
                       " rows for " + std::to_string(total_nodes) + " nodes");
    }
    std::vector<std::int64_t> cats;
    cats.reserve(total_nodes);
    for (const auto& l : lines) {
      const auto parts = split_commas(l.text);
      const auto v = parse_int(parts.front(), nl_path, l.number);
      if (v < 0) throw ParseError(nl_path.filename().string() + ": negative node label");
      cats.push_back(v);
    }
    const auto width = static_cast<std::size_t>(*std::max_element(cats.begin(), cats.end()) + 1);
    all_features = Matrix(total_nodes, width, 0.0);
    for (std::size_t i = 0; i < total_nodes; ++i) all_features(i, static_cast<std::size_t>(cats[i])) = 1.0;
    kind = FeatureKind::one_hot;
  } else {
    all_features = Matrix(total_nodes, 1, 1.0);
  }

  std::vector<Matrix> per_graph(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) per_graph[g] = Matrix(graph_sizes[g], all_features.cols());
  for (std::size_t i = 0; i < total_nodes; ++i) {
    auto dst = per_graph[node_graph[i]].row(node_local[i]);
    auto src = all_features.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }

  Dataset ds;
  ds.name = name;
  ds.feature_kind = kind;
  ds.num_classes = std::max<std::size_t>(2, distinct.size());
  ds.graphs.reserve(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    const auto label = static_cast<Label>(
        std::lower_bound(distinct.begin(), distinct.end(), raw_labels[g]) - distinct.begin());
    ds.graphs.emplace_back(graph_sizes[g], std::move(edges[g]), std::move(per_graph[g]), label);
  }
  ds.validate();
  return ds;
}

/// Keeps the graphs at `indices`, in the given order.
inline Dataset select_graphs(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out = ds;
  out.graphs.clear();
  for (auto i : indices) {
    if (i >= ds.graphs.size()) throw InvalidArgument("graph index " + std::to_string(i) + " out of range");
    out.graphs.push_back(ds.graphs[i]);
  }
  return out;
}

}  // namespace nodeinj
