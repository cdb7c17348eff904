#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nodeinj/error.hpp"
#include "nodeinj/matrix.hpp"

namespace nodeinj {

using NodeId = std::uint32_t;
using Label = int;

/// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  constexpr Edge() = default;
  constexpr Edge(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected attributed graph. Immutable once built; every constructor path
/// validates the invariants (no self-loops, no duplicate edges, endpoints in
/// range, one feature row per node).
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t num_nodes, std::vector<Edge> edges, Matrix features,
        std::optional<Label> label = std::nullopt)
      : num_nodes_(num_nodes), edges_(std::move(edges)), features_(std::move(features)),
        label_(label) {
    if (num_nodes_ == 0) throw InvalidArgument("graph must have at least one node");
    if (features_.rows() != num_nodes_) {
      throw ShapeError("feature rows (" + std::to_string(features_.rows()) +
                       ") != num_nodes (" + std::to_string(num_nodes_) + ")");
    }
    if (features_.cols() == 0) throw ShapeError("feature width must be >= 1");
    if (label_ && *label_ < 0) throw InvalidArgument("graph label must be >= 0");
    for (auto& e : edges_) {
      e = Edge(e.u, e.v);
      if (e.u == e.v) throw InvalidArgument("self-loop on node " + std::to_string(e.u));
      if (e.v >= num_nodes_) {
        throw InvalidArgument("edge endpoint " + std::to_string(e.v) + " out of range");
      }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  [[nodiscard]] std::size_t num_nodes() const noexcept { return num_nodes_; }
  [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return features_.cols(); }

  /// Edges sorted lexicographically with u < v.
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const Matrix& features() const noexcept { return features_; }
  [[nodiscard]] std::optional<Label> label() const noexcept { return label_; }

  [[nodiscard]] bool has_edge(NodeId a, NodeId b) const {
    if (a == b) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
  }

  [[nodiscard]] std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(num_nodes_, 0);
    for (const auto& e : edges_) {
      ++deg[e.u];
      ++deg[e.v];
    }
    return deg;
  }

  [[nodiscard]] std::vector<std::vector<NodeId>> adjacency_lists() const {
    std::vector<std::vector<NodeId>> adj(num_nodes_);
    for (const auto& e : edges_) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
    return adj;
  }

  [[nodiscard]] Graph with_label(std::optional<Label> label) const {
    Graph g = *this;
    if (label && *label < 0) throw InvalidArgument("graph label must be >= 0");
    g.label_ = label;
    return g;
  }

  [[nodiscard]] Graph with_edges(std::vector<Edge> edges) const {
    return Graph(num_nodes_, std::move(edges), features_, label_);
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::optional<Label> label_;
};

/// Number of edges incident to `v`.
inline std::size_t degree(const Graph& g, NodeId v) {
  if (v >= g.num_nodes()) {
    throw InvalidArgument("node " + std::to_string(v) + " out of range for graph with " +
                          std::to_string(g.num_nodes()) + " nodes");
  }
  std::size_t d = 0;
  for (const auto& e : g.edges()) d += (e.u == v) + (e.v == v);
  return d;
}

enum class FeatureKind { integer_vector, real_vector, one_hot, constant_one };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::integer_vector: return "integer_vector";
    case FeatureKind::real_vector: return "real_vector";
    case FeatureKind::one_hot: return "one_hot";
    case FeatureKind::constant_one: return "constant_one";
  }
  return "unknown";
}

/// Classifies a feature matrix. Checks run most-specific first, so a single
/// column of ones is constant_one rather than one_hot.
inline FeatureKind infer_feature_kind(const Matrix& features) {
  const auto flat = features.flat();
  const bool all_ones = std::all_of(flat.begin(), flat.end(), [](double x) { return x == 1.0; });
  if (all_ones && features.cols() == 1) return FeatureKind::constant_one;
  bool one_hot = features.rows() > 0;
  for (std::size_t r = 0; r < features.rows() && one_hot; ++r) {
    std::size_t ones = 0;
    for (double x : features.row(r)) {
      if (x == 1.0) {
        ++ones;
      } else if (x != 0.0) {
        one_hot = false;
        break;
      }
    }
    one_hot = one_hot && ones == 1;
  }
  if (one_hot && features.cols() > 1) return FeatureKind::one_hot;
  const bool integral =
      std::all_of(flat.begin(), flat.end(), [](double x) { return std::isfinite(x) && std::trunc(x) == x; });
  return integral ? FeatureKind::integer_vector : FeatureKind::real_vector;
}

/// A labelled collection of graphs sharing one feature width.
struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t num_classes = 2;
  FeatureKind feature_kind = FeatureKind::constant_one;

  [[nodiscard]] std::size_t feature_dim() const {
    return graphs.empty() ? 0 : graphs.front().feature_dim();
  }

  /// Throws if any Dataset invariant is violated.
  void validate() const {
    if (num_classes < 2) throw InvalidArgument("dataset needs at least two classes");
    const std::size_t d = feature_dim();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const auto& g = graphs[i];
      if (g.feature_dim() != d) {
        throw ShapeError("graph " + std::to_string(i) + " has feature width " +
                         std::to_string(g.feature_dim()) + ", expected " + std::to_string(d));
      }
      if (g.label() && static_cast<std::size_t>(*g.label()) >= num_classes) {
        throw InvalidArgument("graph " + std::to_string(i) + " label out of range");
      }
      if (feature_kind == FeatureKind::one_hot) {
        for (std::size_t r = 0; r < g.num_nodes(); ++r) {
          std::size_t ones = 0, zeros = 0;
          for (double x : g.features().row(r)) {
            ones += x == 1.0;
            zeros += x == 0.0;
          }
          if (ones != 1 || ones + zeros != d) {
            throw InvalidArgument("graph " + std::to_string(i) + " node " + std::to_string(r) +
                                  " is not one-hot");
          }
        }
      }
    }
  }
};

}  // namespace nodeinj
