#pragma once

#include <cstddef>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"

namespace nodeinj {

enum class ExportFormat { dot, json };

inline constexpr std::string_view kInjectedFillColor = "#e4572e";

/// {"num_nodes", "edges" (u < v, sorted), "node_features", "label" | null}
inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes();
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
  j["node_features"] = g.features().to_rows();
  j["label"] = g.label() ? nlohmann::json(*g.label()) : nlohmann::json(nullptr);
  return j;
}

inline Graph graph_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("num_nodes").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [u, v] pair");
      edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    auto rows = j.at("node_features").get<std::vector<std::vector<double>>>();
    std::optional<Label> label;
    if (j.contains("label") && !j["label"].is_null()) label = j["label"].get<Label>();
    return Graph(n, std::move(edges), Matrix::from_rows(rows), label);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("invalid graph json: ") + ex.what());
  }
}

/// Graphviz rendering; nodes in `marked` are filled with kInjectedFillColor.
inline std::string graph_to_dot(const Graph& g, const std::set<NodeId>& marked) {
  std::ostringstream o;
  o << "graph G {\n";
  o << "  node [shape=circle];\n";
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    o << "  " << v;
    if (marked.count(v)) o << " [style=filled, fillcolor=\"" << kInjectedFillColor << "\"]";
    o << ";\n";
  }
  for (const auto& e : g.edges()) o << "  " << e.u << " -- " << e.v << ";\n";
  o << "}\n";
  return o.str();
}

inline std::string export_graph(const Graph& g, const std::set<NodeId>& marked, ExportFormat format) {
  for (auto v : marked) {
    if (v >= g.num_nodes()) throw InvalidArgument("marked node " + std::to_string(v) + " out of range");
  }
  if (format == ExportFormat::dot) return graph_to_dot(g, marked);
  return graph_to_json(g).dump() + "\n";
}

}  // namespace nodeinj
