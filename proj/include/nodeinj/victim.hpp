#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"

namespace nodeinj {

/// Hard-label classifier. Implementations must be deterministic and safe to
/// call from several threads at once. Only the label is ever exposed.
class VictimOracle {
 public:
  virtual ~VictimOracle() = default;
  virtual Label predict(const Graph& g) = 0;
  [[nodiscard]] virtual std::size_t num_classes() const = 0;
};

/// Forwards to an inner oracle and counts every call. With a nonzero limit,
/// the call that would exceed it throws QueryLimitExceeded without reaching
/// the inner oracle.
class CountingOracle final : public VictimOracle {
 public:
  explicit CountingOracle(VictimOracle& inner, std::uint64_t limit = 0) : inner_(inner), limit_(limit) {}

  Label predict(const Graph& g) override {
    std::uint64_t cur = total_.load(std::memory_order_relaxed);
    do {
      if (limit_ > 0 && cur >= limit_) {
        throw QueryLimitExceeded("query limit of " + std::to_string(limit_) + " reached");
      }
    } while (!total_.compare_exchange_weak(cur, cur + 1, std::memory_order_relaxed));
    return inner_.predict(g);
  }

  [[nodiscard]] std::size_t num_classes() const override { return inner_.num_classes(); }
  [[nodiscard]] std::uint64_t total_queries() const noexcept { return total_.load(); }
  [[nodiscard]] std::uint64_t limit() const noexcept { return limit_; }

 private:
  VictimOracle& inner_;
  std::uint64_t limit_;
  std::atomic<std::uint64_t> total_{0};
};

/// Hash over node count, sorted edge list and feature bits.
inline std::uint64_t canonical_hash(const Graph& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(g.num_nodes());
  feed(g.feature_dim());
  for (const auto& e : g.edges()) feed((std::uint64_t{e.u} << 32) | e.v);
  for (double x : g.features().flat()) feed(std::bit_cast<std::uint64_t>(x));
  return h;
}

/// Memoizes labels by graph. Place it OUTSIDE a CountingOracle so that cache
/// hits never reach the counter.
class CachingOracle final : public VictimOracle {
 public:
  explicit CachingOracle(VictimOracle& inner) : inner_(inner) {}

  Label predict(const Graph& g) override {
    const auto key = canonical_hash(g);
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        for (const auto& [graph, label] : it->second) {
          if (graph == g) {
            ++hits_;
            return label;
          }
        }
      }
    }
    const Label label = inner_.predict(g);
    std::lock_guard lock(mu_);
    cache_[key].emplace_back(g, label);
    return label;
  }

  [[nodiscard]] std::size_t num_classes() const override { return inner_.num_classes(); }
  [[nodiscard]] std::uint64_t cache_hits() const {
    std::lock_guard lock(mu_);
    return hits_;
  }

 private:
  VictimOracle& inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<Graph, Label>>> cache_;
  std::uint64_t hits_ = 0;
};

/// Wraps any callable as an oracle.
class FunctionVictim final : public VictimOracle {
 public:
  FunctionVictim(std::function<Label(const Graph&)> fn, std::size_t num_classes)
      : fn_(std::move(fn)), num_classes_(num_classes) {}
  Label predict(const Graph& g) override { return fn_(g); }
  [[nodiscard]] std::size_t num_classes() const override { return num_classes_; }

 private:
  std::function<Label(const Graph&)> fn_;
  std::size_t num_classes_;
};

enum class RuleKind { edge_parity, degree_threshold, feature_sum_sign };

/// Deterministic two-class toy classifiers.
///   edge_parity       |E| mod 2
///   degree_threshold  1 iff max degree >= threshold
///   feature_sum_sign  1 iff the sum of all feature entries > 0
class RuleVictim final : public VictimOracle {
 public:
  explicit RuleVictim(RuleKind kind, std::size_t threshold = 0) : kind_(kind), threshold_(threshold) {}

  Label predict(const Graph& g) override {
    switch (kind_) {
      case RuleKind::edge_parity:
        return static_cast<Label>(g.num_edges() % 2);
      case RuleKind::degree_threshold: {
        const auto deg = g.degrees();
        return *std::max_element(deg.begin(), deg.end()) >= threshold_ ? 1 : 0;
      }
      case RuleKind::feature_sum_sign: {
        double s = 0.0;
        for (double x : g.features().flat()) s += x;
        return s > 0.0 ? 1 : 0;
      }
    }
    return 0;
  }

  [[nodiscard]] std::size_t num_classes() const override { return 2; }
  [[nodiscard]] RuleKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t threshold() const noexcept { return threshold_; }

 private:
  RuleKind kind_;
  std::size_t threshold_;
};

inline RuleVictim rule_victim(RuleKind kind, std::size_t threshold = 0) { return RuleVictim(kind, threshold); }

}  // namespace nodeinj
