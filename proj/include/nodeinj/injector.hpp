#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/seed.hpp"

namespace nodeinj {

enum class FeatureInit {
  zero,
  one,
  random_uniform,
  node_mean,
  gaussian_coordinate,
  empirical_one_hot,
  pivot_perturbed,
};

enum class ConnectionInit { no_connection, random, mode, pivot_all };

inline std::string_view to_string(FeatureInit f) {
  switch (f) {
    case FeatureInit::zero: return "zero";
    case FeatureInit::one: return "one";
    case FeatureInit::random_uniform: return "random";
    case FeatureInit::node_mean: return "node_mean";
    case FeatureInit::gaussian_coordinate: return "gaussian_coordinate";
    case FeatureInit::empirical_one_hot: return "empirical_one_hot";
    case FeatureInit::pivot_perturbed: return "pivot_perturbed";
  }
  return "unknown";
}

inline std::string_view to_string(ConnectionInit c) {
  switch (c) {
    case ConnectionInit::no_connection: return "no_connection";
    case ConnectionInit::random: return "random";
    case ConnectionInit::mode: return "mode";
    case ConnectionInit::pivot_all: return "pivot_all";
  }
  return "unknown";
}

inline FeatureInit parse_feature_init(std::string_view s) {
  for (auto f : {FeatureInit::zero, FeatureInit::one, FeatureInit::random_uniform, FeatureInit::node_mean,
                 FeatureInit::gaussian_coordinate, FeatureInit::empirical_one_hot, FeatureInit::pivot_perturbed}) {
    if (to_string(f) == s) return f;
  }
  throw InvalidArgument("unknown feature initializer '" + std::string(s) + "'");
}

inline ConnectionInit parse_connection_init(std::string_view s) {
  for (auto c : {ConnectionInit::no_connection, ConnectionInit::random, ConnectionInit::mode,
                 ConnectionInit::pivot_all}) {
    if (to_string(c) == s) return c;
  }
  throw InvalidArgument("unknown connection initializer '" + std::string(s) + "'");
}

struct InjectionPlan {
  std::size_t k = 1;
  FeatureInit feature_init = FeatureInit::node_mean;
  ConnectionInit connection_init = ConnectionInit::mode;
  std::uint64_t seed = 0;
};

/// The victim graph enlarged by k injected nodes at indices N..N+k-1. The
/// edges of `base` are the post-initialization adjacency A.
struct AugmentedGraph {
  Graph base;
  std::size_t original_nodes = 0;

  [[nodiscard]] std::size_t injected() const noexcept { return base.num_nodes() - original_nodes; }
  [[nodiscard]] const std::vector<Edge>& initial_adjacency() const noexcept { return base.edges(); }
  [[nodiscard]] std::vector<NodeId> injected_indices() const {
    std::vector<NodeId> out;
    for (auto v = original_nodes; v < base.num_nodes(); ++v) out.push_back(static_cast<NodeId>(v));
    return out;
  }
};

/// Highest-degree node; ties go to the smallest index.
inline NodeId pivot_node(const Graph& g) {
  const auto deg = g.degrees();
  return static_cast<NodeId>(std::max_element(deg.begin(), deg.end()) - deg.begin());
}

inline void validate_plan(const InjectionPlan& plan, FeatureKind kind) {
  if (plan.k < 1) throw InvalidArgument("injection plan needs k >= 1");
  switch (plan.feature_init) {
    case FeatureInit::empirical_one_hot:
      if (kind != FeatureKind::one_hot) throw InvalidArgument("empirical_one_hot requires one-hot node features");
      break;
    case FeatureInit::gaussian_coordinate:
    case FeatureInit::pivot_perturbed:
      if (kind != FeatureKind::integer_vector) {
        throw InvalidArgument(std::string(to_string(plan.feature_init)) + " requires integer-vector node features");
      }
      break;
    default:
      break;
  }
}

inline constexpr int kMaxPerturbRedraws = 1000;

/// Feature rows for the k injected nodes, drawn from `rng`.
inline Matrix init_features(const Graph& g, FeatureKind kind, const InjectionPlan& plan, Rng& rng) {
  validate_plan(plan, kind);
  const std::size_t n = g.num_nodes();
  const std::size_t d = g.feature_dim();
  const Matrix& x = g.features();
  Matrix out(plan.k, d, 0.0);

  const auto column_mean = [&](std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += x(r, c);
    return s / static_cast<double>(n);
  };

  switch (plan.feature_init) {
    case FeatureInit::zero:
      break;
    case FeatureInit::one:
      out = Matrix(plan.k, d, 1.0);
      break;
    case FeatureInit::random_uniform: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (double& v : out.flat()) v = u(rng);
      break;
    }
    case FeatureInit::node_mean:
      for (std::size_t c = 0; c < d; ++c) {
        const double m = column_mean(c);
        for (std::size_t i = 0; i < plan.k; ++i) out(i, c) = m;
      }
      break;
    case FeatureInit::gaussian_coordinate: {
      // Population standard deviation; std::round rounds halves away from zero.
      std::vector<double> mean(d), sd(d);
      for (std::size_t c = 0; c < d; ++c) {
        mean[c] = column_mean(c);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) ss += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
        sd[c] = std::sqrt(ss / static_cast<double>(n));
      }
      for (std::size_t i = 0; i < plan.k; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          double v = mean[c];
          if (sd[c] > 0.0) v = std::normal_distribution<double>(mean[c], sd[c])(rng);
          out(i, c) = std::round(v);
        }
      }
      break;
    }
    case FeatureInit::empirical_one_hot: {
      std::vector<double> counts(d, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        counts[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())] += 1.0;
      }
      std::discrete_distribution<std::size_t> cat(counts.begin(), counts.end());
      for (std::size_t i = 0; i < plan.k; ++i) out(i, cat(rng)) = 1.0;
      break;
    }
    case FeatureInit::pivot_perturbed: {
      std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
      std::uniform_int_distribution<std::size_t> pick_coord(0, d - 1);
      std::bernoulli_distribution up(0.5);
      const auto equals_any = [](std::span<const double> cand, const Matrix& m, std::size_t rows) {
        for (std::size_t r = 0; r < rows; ++r) {
          if (std::equal(cand.begin(), cand.end(), m.row(r).begin())) return true;
        }
        return false;
      };
      std::vector<double> cand(d);
      for (std::size_t i = 0; i < plan.k; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPerturbRedraws && !placed; ++attempt) {
          const auto src = x.row(pick_node(rng));
          std::copy(src.begin(), src.end(), cand.begin());
          cand[pick_coord(rng)] += up(rng) ? 1.0 : -1.0;
          if (!equals_any(cand, x, n) && !equals_any(cand, out, i)) {
            std::copy(cand.begin(), cand.end(), out.row(i).begin());
            placed = true;
          }
        }
        if (!placed) {
          throw InvalidArgument("pivot_perturbed could not find a unique feature row after " +
                                std::to_string(kMaxPerturbRedraws) + " redraws");
        }
      }
      break;
    }
  }
  return out;
}

/// Convenience overload: infers the feature kind and seeds from plan.seed.
inline Matrix init_features(const Graph& g, const InjectionPlan& plan) {
  Rng rng(derive_seed(plan.seed, 0));
  return init_features(g, infer_feature_kind(g.features()), plan, rng);
}

/// Appends k nodes with initialized features and initial connections. The
/// original nodes keep their indices and their edges.
inline AugmentedGraph inject(const Graph& g, FeatureKind kind, const InjectionPlan& plan) {
  Rng feature_rng(derive_seed(plan.seed, 0));
  Rng connect_rng(derive_seed(plan.seed, 1));
  const Matrix injected = init_features(g, kind, plan, feature_rng);

  const std::size_t n = g.num_nodes();
  Matrix features = g.features();
  for (std::size_t i = 0; i < plan.k; ++i) features.append_row(injected.row(i));

  std::vector<Edge> edges = g.edges();
  switch (plan.connection_init) {
    case ConnectionInit::no_connection:
      break;
    case ConnectionInit::random: {
      std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
      for (std::size_t i = 0; i < plan.k; ++i) edges.emplace_back(static_cast<NodeId>(n + i), pick(connect_rng));
      break;
    }
    case ConnectionInit::mode:
    case ConnectionInit::pivot_all: {
      const NodeId pivot = pivot_node(g);
      for (std::size_t i = 0; i < plan.k; ++i) edges.emplace_back(static_cast<NodeId>(n + i), pivot);
      break;
    }
  }
  return {Graph(n + plan.k, std::move(edges), std::move(features), g.label()), n};
}

inline AugmentedGraph inject(const Graph& g, const InjectionPlan& plan) {
  return inject(g, infer_feature_kind(g.features()), plan);
}

/// Number of nodes to inject: `fixed` when given, else max(1, floor(percent * N)).
/// Exactly one of the two must be nonzero.
inline std::size_t injection_count(const Graph& g, double percent, std::size_t fixed) {
  const bool has_percent = percent != 0.0;
  if (has_percent == (fixed != 0)) {
    throw InvalidArgument("exactly one of inject-percent and inject-number must be nonzero");
  }
  if (fixed != 0) return fixed;
  if (!(percent > 0.0 && percent <= 1.0)) throw InvalidArgument("inject-percent must lie in (0, 1]");
  // The epsilon absorbs representation error such as 0.15 * 20 = 2.9999...
  const auto k = static_cast<std::size_t>(std::floor(percent * static_cast<double>(g.num_nodes()) + 1e-9));
  return std::max<std::size_t>(1, k);
}

}  // namespace nodeinj
