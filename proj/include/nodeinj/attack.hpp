#pragma once

// Hard-label node-injection attack restricted to the k x N block of
// (injected, original) node pairs.
//
// Theta in [0,1]^{k x N} is a relaxed flip indicator: the edge status of slot
// (i, j) is toggled relative to the initial adjacency A iff theta(i, j) >= 0.5.
// For a unit direction theta_norm, g(theta) is the smallest scale lambda at
// which the thresholded graph h(A, lambda * theta_norm) leaves class y0; it is
// located by bisection on [0, lambda_max]. The surrogate objective is
//   p(theta) = sum_ij clip(g(theta) * theta_norm(i, j) - 0.5, 0, 1)
// and is minimized with a sign-based zeroth-order gradient estimate. The
// edit budget r = flips / (kN) <= b is enforced by keeping the fewest-flip
// adversarial graph seen and accepting it only if it fits the budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/injector.hpp"
#include "nodeinj/matrix.hpp"
#include "nodeinj/seed.hpp"
#include "nodeinj/victim.hpp"

namespace nodeinj {

struct AttackConfig {
  double edge_budget = 0.1;
  std::optional<double> lambda_max;  ///< defaults to sqrt(kN)
  double lambda_tol = 1e-3;
  std::size_t num_directions = 50;
  std::size_t grad_samples = 20;
  double sigma = 0.1;
  double step_size = 0.2;
  std::size_t max_iters = 50;
  std::uint64_t query_limit = 0;  ///< 0 = unlimited
  std::uint64_t seed = 0;
  bool use_cache = false;

  [[nodiscard]] double lambda_ceiling(std::size_t k, std::size_t n) const {
    return lambda_max ? *lambda_max : std::sqrt(static_cast<double>(k * n));
  }

  void validate() const {
    if (!(edge_budget > 0.0 && edge_budget <= 1.0)) throw InvalidArgument("edge budget must lie in (0, 1]");
    if (lambda_max && !(*lambda_max > 0.0)) throw InvalidArgument("lambda_max must be > 0");
    if (!(lambda_tol > 0.0)) throw InvalidArgument("lambda_tol must be > 0");
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
    if (!(step_size > 0.0)) throw InvalidArgument("step size must be > 0");
    if (num_directions == 0) throw InvalidArgument("num_directions must be >= 1");
    if (grad_samples == 0) throw InvalidArgument("grad_samples must be >= 1");
  }
};

struct PerturbationState {
  Matrix theta;
  Matrix theta_norm;
  std::optional<double> g_value;  ///< nullopt = unresolved
};

enum class AttackStatus { no_need, pred_change, success, failure };

inline std::string_view to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::no_need: return "no_need";
    case AttackStatus::pred_change: return "pred_change";
    case AttackStatus::success: return "success";
    case AttackStatus::failure: return "failure";
  }
  return "unknown";
}

inline AttackStatus parse_attack_status(std::string_view s) {
  for (auto st : {AttackStatus::no_need, AttackStatus::pred_change, AttackStatus::success, AttackStatus::failure}) {
    if (to_string(st) == s) return st;
  }
  throw InvalidArgument("unknown attack status '" + std::string(s) + "'");
}

struct AttackOutcome {
  AttackStatus status = AttackStatus::failure;
  Graph final_graph;
  std::size_t original_nodes = 0;
  std::size_t injected = 0;  ///< k actually used (0 for no_need)
  std::size_t flipped_edges = 0;
  double rate = 0.0;
  std::uint64_t queries_used = 0;
  std::uint64_t cache_hits = 0;
  double wall_time = 0.0;
  bool injected_still_connected = false;
};

/// Precomputed view of the k x N slot block of an augmented graph.
class PerturbationSpace {
 public:
  explicit PerturbationSpace(const AugmentedGraph& aug)
      : aug_(&aug), k_(aug.injected()), n_(aug.original_nodes), initial_(k_ * n_, 0) {
    for (const auto& e : aug.initial_adjacency()) {
      // e.u < e.v, so an (original, injected) pair has u original.
      if (e.u < n_ && e.v >= n_) {
        initial_[(e.v - n_) * n_ + e.u] = 1;
      } else {
        fixed_edges_.push_back(e);
      }
    }
  }

  [[nodiscard]] std::size_t rows() const noexcept { return k_; }
  [[nodiscard]] std::size_t cols() const noexcept { return n_; }
  [[nodiscard]] std::size_t slots() const noexcept { return k_ * n_; }
  [[nodiscard]] bool initially_connected(std::size_t slot) const { return initial_[slot] != 0; }

  /// Graph whose slot s has its A-status toggled iff flip(s).
  template <class FlipPredicate>
  [[nodiscard]] Graph build(FlipPredicate&& flip) const {
    std::vector<Edge> edges = fixed_edges_;
    for (std::size_t s = 0; s < slots(); ++s) {
      const bool present = (initial_[s] != 0) != static_cast<bool>(flip(s));
      if (present) {
        edges.emplace_back(static_cast<NodeId>(n_ + s / n_), static_cast<NodeId>(s % n_));
      }
    }
    return aug_->base.with_edges(std::move(edges));
  }

 private:
  const AugmentedGraph* aug_;
  std::size_t k_;
  std::size_t n_;
  std::vector<char> initial_;
  std::vector<Edge> fixed_edges_;
};

inline void check_theta_shape(const AugmentedGraph& aug, const Matrix& theta) {
  if (theta.rows() != aug.injected() || theta.cols() != aug.original_nodes) {
    throw ShapeError("theta must be " + std::to_string(aug.injected()) + "x" + std::to_string(aug.original_nodes) +
                     ", got " + std::to_string(theta.rows()) + "x" + std::to_string(theta.cols()));
  }
}

/// h(A, theta): toggles slot (i, j) relative to A wherever theta(i, j) >= 0.5.
inline Graph apply_perturbation(const AugmentedGraph& aug, const Matrix& theta) {
  check_theta_shape(aug, theta);
  const auto flat = theta.flat();
  for (double v : flat) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("theta entries must be finite and >= 0");
  }
  return PerturbationSpace(aug).build([&](std::size_t s) { return flat[s] >= 0.5; });
}

/// Number of (injected, original) slots whose edge status differs from A.
inline std::size_t count_flips(const AugmentedGraph& aug, const Graph& g_final) {
  const std::size_t n = aug.original_nodes;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < aug.injected(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto a = static_cast<NodeId>(n + i);
      const auto b = static_cast<NodeId>(j);
      flips += aug.base.has_edge(a, b) != g_final.has_edge(a, b);
    }
  }
  return flips;
}

/// r = ||A' - A||_0 / (kN) over the slot block.
inline double perturbation_rate(const AugmentedGraph& aug, const Graph& g_final) {
  const auto slots = aug.injected() * aug.original_nodes;
  return slots == 0 ? 0.0 : static_cast<double>(count_flips(aug, g_final)) / static_cast<double>(slots);
}

/// theta / ||theta||_2.
inline Matrix normalized(const Matrix& theta) {
  const double norm = theta.frobenius_norm();
  if (!(norm > 0.0)) throw InvalidArgument("cannot normalize a zero perturbation");
  Matrix out = theta;
  for (double& v : out.flat()) v /= norm;
  return out;
}

/// sum_ij clip(g_hat(i, j) - 0.5, 0, 1).
inline double clipped_excess(std::span<const double> g_hat) {
  double p = 0.0;
  for (double v : g_hat) p += std::clamp(v - 0.5, 0.0, 1.0);
  return p;
}

inline constexpr double kUnresolved = std::numeric_limits<double>::infinity();

/// Result of one boundary search along a unit direction.
struct BoundaryResult {
  std::optional<double> lambda;  ///< high endpoint of the final bracket
  std::size_t flips = 0;         ///< slots toggled at lambda
  std::optional<Graph> adversarial;  ///< h(A, lambda * theta_norm), label != y0
};

/// Bisection for g along `theta_norm`. The ceiling lambda_max is probed first;
/// if it does not leave y0 the direction is unresolved. Otherwise the bracket
/// [lo, hi] keeps label(hi) != y0 and, once lo has been probed, label(lo) == y0,
/// until hi - lo <= lambda_tol. The flip set grows monotonically in lambda, so
/// a midpoint whose flip count equals that of a probed endpoint yields the same
/// graph and its label is reused instead of re-queried.
inline BoundaryResult search_boundary(const PerturbationSpace& space, std::span<const double> theta_norm,
                                      VictimOracle& oracle, Label y0, const AttackConfig& cfg) {
  const auto flips_at = [&](double lambda) {
    std::size_t f = 0;
    for (double t : theta_norm) f += lambda * t >= 0.5;
    return f;
  };
  const auto graph_at = [&](double lambda) {
    return space.build([&](std::size_t s) { return lambda * theta_norm[s] >= 0.5; });
  };

  double hi = cfg.lambda_ceiling(space.rows(), space.cols());
  std::size_t hi_flips = flips_at(hi);
  Graph hi_graph = graph_at(hi);
  if (oracle.predict(hi_graph) == y0) return {};

  double lo = 0.0;
  std::size_t lo_flips = 0;
  bool lo_probed = false;
  while (hi - lo > cfg.lambda_tol) {
    const double mid = lo + (hi - lo) / 2.0;
    const std::size_t f = flips_at(mid);
    if (f == hi_flips) {
      hi = mid;
    } else if (lo_probed && f == lo_flips) {
      lo = mid;
    } else {
      Graph g = graph_at(mid);
      if (oracle.predict(g) != y0) {
        hi = mid;
        hi_flips = f;
        hi_graph = std::move(g);
      } else {
        lo = mid;
        lo_flips = f;
        lo_probed = true;
      }
    }
  }
  return {hi, hi_flips, std::move(hi_graph)};
}

/// g(theta) for a unit-norm direction; nullopt when unresolved.
inline std::optional<double> eval_g(const AugmentedGraph& aug, const Matrix& theta_norm, VictimOracle& oracle,
                                    Label y0, const AttackConfig& cfg) {
  check_theta_shape(aug, theta_norm);
  const double norm = theta_norm.frobenius_norm();
  if (std::abs(norm - 1.0) > 1e-9) throw InvalidArgument("eval_g needs a unit-norm direction");
  return search_boundary(PerturbationSpace(aug), theta_norm.flat(), oracle, y0, cfg).lambda;
}

/// p(theta); +infinity when the direction is unresolved.
inline double objective_p(const AugmentedGraph& aug, const Matrix& theta, VictimOracle& oracle, Label y0,
                          const AttackConfig& cfg) {
  check_theta_shape(aug, theta);
  const Matrix tn = normalized(theta);
  const auto lambda = search_boundary(PerturbationSpace(aug), tn.flat(), oracle, y0, cfg).lambda;
  if (!lambda) return kUnresolved;
  std::vector<double> g_hat(tn.flat().begin(), tn.flat().end());
  for (double& v : g_hat) v *= *lambda;
  return clipped_excess(g_hat);
}

namespace attack_detail {

/// Fewest-flip adversarial graph seen so far.
struct BestTracker {
  std::optional<Graph> graph;
  std::size_t flips = std::numeric_limits<std::size_t>::max();

  void offer(const BoundaryResult& r) {
    if (r.adversarial && r.flips < flips) {
      flips = r.flips;
      graph = *r.adversarial;
    }
  }
};

/// One attack instance: owns its RNG and tracker. Single-threaded.
class Search {
 public:
  Search(const AugmentedGraph& aug, VictimOracle& oracle, Label y0, const AttackConfig& cfg, Rng& rng)
      : space_(aug), oracle_(oracle), y0_(y0), cfg_(cfg), rng_(rng) {}

  struct Eval {
    double p = kUnresolved;
    std::optional<double> lambda;
  };

  Eval evaluate(const Matrix& theta) {
    const Matrix tn = normalized(theta);
    const auto r = search_boundary(space_, tn.flat(), oracle_, y0_, cfg_);
    best_.offer(r);
    if (!r.lambda) return {};
    double p = 0.0;
    for (double t : tn.flat()) p += std::clamp(*r.lambda * t - 0.5, 0.0, 1.0);
    return {p, r.lambda};
  }

  std::optional<PerturbationState> initial_directions() {
    std::bernoulli_distribution coin(0.5);
    std::optional<PerturbationState> best;
    for (std::size_t t = 0; t < cfg_.num_directions; ++t) {
      Matrix cand(space_.rows(), space_.cols(), 0.0);
      do {
        for (double& v : cand.flat()) v = coin(rng_) ? 1.0 : 0.0;
      } while (cand.frobenius_norm() == 0.0);
      const Matrix tn = normalized(cand);
      const auto r = search_boundary(space_, tn.flat(), oracle_, y0_, cfg_);
      best_.offer(r);
      if (r.lambda && (!best || *r.lambda < *best->g_value)) {
        best = PerturbationState{std::move(cand), tn, r.lambda};
      }
    }
    return best;
  }

  void descend(const PerturbationState& start) {
    Matrix theta = start.theta;
    Eval cur = evaluate(theta);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix u(space_.rows(), space_.cols());
    Matrix probe = theta;
    Matrix grad(space_.rows(), space_.cols());
    for (std::size_t it = 0; it < cfg_.max_iters; ++it) {
      std::fill(grad.flat().begin(), grad.flat().end(), 0.0);
      for (std::size_t q = 0; q < cfg_.grad_samples; ++q) {
        for (double& v : u.flat()) v = gauss(rng_);
        const double un = u.frobenius_norm();
        if (!(un > 0.0)) continue;
        for (double& v : u.flat()) v /= un;
        for (std::size_t s = 0; s < probe.size(); ++s) {
          probe.flat()[s] = std::clamp(theta.flat()[s] + cfg_.sigma * u.flat()[s], 0.0, 1.0);
        }
        if (probe.frobenius_norm() == 0.0) continue;
        const double delta = sign_of_change(cur.p, evaluate(probe).p);
        if (delta == 0.0) continue;
        for (std::size_t s = 0; s < grad.size(); ++s) grad.flat()[s] += delta * u.flat()[s];
      }
      Matrix next = theta;
      for (std::size_t s = 0; s < next.size(); ++s) {
        const double g = grad.flat()[s] / static_cast<double>(cfg_.grad_samples);
        next.flat()[s] = std::clamp(theta.flat()[s] - cfg_.step_size * g, 0.0, 1.0);
      }
      if (next.frobenius_norm() == 0.0) continue;
      theta = std::move(next);
      cur = evaluate(theta);
    }
  }

  [[nodiscard]] const BestTracker& best() const noexcept { return best_; }

 private:
  static double sign_of_change(double before, double after) {
    if (after == before) return 0.0;  // also inf == inf
    return after > before ? 1.0 : -1.0;
  }

  PerturbationSpace space_;
  VictimOracle& oracle_;
  Label y0_;
  const AttackConfig& cfg_;
  Rng& rng_;
  BestTracker best_;
};

inline bool injected_connected(const Graph& g, std::size_t original_nodes) {
  const auto deg = g.degrees();
  for (std::size_t v = original_nodes; v < deg.size(); ++v) {
    if (deg[v] == 0) return false;
  }
  return true;
}

inline AttackOutcome outcome_for(AttackStatus status, const AugmentedGraph& aug, Graph final_graph) {
  AttackOutcome o;
  o.status = status;
  o.original_nodes = aug.original_nodes;
  o.injected = aug.injected();
  o.flipped_edges = count_flips(aug, final_graph);
  const auto slots = aug.injected() * aug.original_nodes;
  o.rate = slots == 0 ? 0.0 : static_cast<double>(o.flipped_edges) / static_cast<double>(slots);
  o.injected_still_connected = injected_connected(final_graph, aug.original_nodes);
  o.final_graph = std::move(final_graph);
  return o;
}

/// Direction search + descent; queries go through `oracle` as given.
inline AttackOutcome run_search(const AugmentedGraph& aug, VictimOracle& oracle, Label y0, const AttackConfig& cfg,
                                Rng& rng) {
  Search search(aug, oracle, y0, cfg, rng);
  if (auto start = search.initial_directions()) search.descend(*start);
  const auto& best = search.best();
  if (best.graph) {
    auto o = outcome_for(AttackStatus::success, aug, *best.graph);
    if (o.rate <= cfg.edge_budget) return o;
  }
  return outcome_for(AttackStatus::failure, aug, aug.base);
}

}  // namespace attack_detail

/// Samples num_directions random 0/1 directions and keeps the one with the
/// smallest resolved g. nullopt when none resolves.
inline std::optional<PerturbationState> initial_direction_search(const AugmentedGraph& aug, VictimOracle& oracle,
                                                                 Label y0, const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  attack_detail::Search search(aug, oracle, y0, cfg, rng);
  return search.initial_directions();
}

/// Full boundary attack on an already-augmented graph (direction search then
/// sign-gradient descent on p). Queries are counted against cfg.query_limit;
/// exhausting it yields a failure with queries_used equal to the limit.
inline AttackOutcome optimize(const AugmentedGraph& aug, VictimOracle& oracle, Label y0, const AttackConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  CountingOracle counter(oracle, cfg.query_limit);
  Rng rng(derive_seed(cfg.seed, aug.injected()));
  AttackOutcome o;
  try {
    o = attack_detail::run_search(aug, counter, y0, cfg, rng);
  } catch (const QueryLimitExceeded&) {
    o = attack_detail::outcome_for(AttackStatus::failure, aug, aug.base);
  }
  o.queries_used = counter.total_queries();
  o.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

/// Attacks one labelled graph:
///   1. victim already wrong on g            -> no_need
///   2. victim wrong right after injection   -> pred_change
///   3. otherwise search; success or failure.
/// Iterative mode retries steps 2-3 with k = 1..k_max and returns the first
/// non-failure; otherwise k = plan.k.
inline AttackOutcome attack_graph(const Graph& g, FeatureKind kind, const InjectionPlan& plan, VictimOracle& oracle,
                                  const AttackConfig& cfg, bool iterative = false, std::size_t k_max = 0) {
  cfg.validate();
  if (!g.label()) throw InvalidArgument("attack_graph needs a graph with a ground-truth label");
  const Label y0 = *g.label();
  const auto t0 = std::chrono::steady_clock::now();

  CountingOracle counter(oracle, cfg.query_limit);
  std::unique_ptr<CachingOracle> cache;
  VictimOracle* front = &counter;
  if (cfg.use_cache) {
    cache = std::make_unique<CachingOracle>(counter);
    front = cache.get();
  }

  AttackOutcome o;
  bool done = false;
  std::size_t current_k = iterative ? 1 : plan.k;
  try {
    if (front->predict(g) != y0) {
      o.status = AttackStatus::no_need;
      o.final_graph = g;
      o.original_nodes = g.num_nodes();
      done = true;
    }
    const std::size_t k_lo = iterative ? 1 : plan.k;
    const std::size_t k_hi = iterative ? std::max<std::size_t>(1, k_max) : plan.k;
    for (std::size_t k = k_lo; k <= k_hi && !done; ++k) {
      current_k = k;
      InjectionPlan p = plan;
      p.k = k;
      const AugmentedGraph aug = inject(g, kind, p);
      if (front->predict(aug.base) != y0) {
        o = attack_detail::outcome_for(AttackStatus::pred_change, aug, aug.base);
        done = true;
        break;
      }
      Rng rng(derive_seed(cfg.seed, k));
      o = attack_detail::run_search(aug, *front, y0, cfg, rng);
      done = o.status == AttackStatus::success;
    }
  } catch (const QueryLimitExceeded&) {
    InjectionPlan p = plan;
    p.k = current_k;
    const auto aug = inject(g, kind, p);
    o = attack_detail::outcome_for(AttackStatus::failure, aug, aug.base);
  }
  o.queries_used = counter.total_queries();
  o.cache_hits = cache ? cache->cache_hits() : 0;
  o.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

}  // namespace nodeinj
