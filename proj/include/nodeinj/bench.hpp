#pragma once

// Dataset-level experiment runner, metric aggregation and report rendering.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nodeinj/attack.hpp"
#include "nodeinj/error.hpp"
#include "nodeinj/gin.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/injector.hpp"
#include "nodeinj/remote.hpp"
#include "nodeinj/seed.hpp"
#include "nodeinj/victim.hpp"

namespace nodeinj {

/// Creates one oracle handle per worker.
using VictimFactory = std::function<std::unique_ptr<VictimOracle>()>;

/// Parsed form of the --victim argument:
///   builtin:edge_parity | builtin:degree_threshold:<t> | builtin:feature_sum_sign
///   builtin:gin (weights from a file) | remote:<host>:<port> | stdio:<command>
struct VictimSpec {
  enum class Kind { rule, gin, remote, stdio };
  Kind kind = Kind::rule;
  RuleKind rule = RuleKind::edge_parity;
  std::size_t threshold = 0;
  std::string target;  ///< endpoint, command, or weight path

  static VictimSpec parse(const std::string& spec, const std::string& weights = {}) {
    VictimSpec v;
    const auto starts = [&](std::string_view p) { return spec.rfind(p, 0) == 0; };
    if (spec == "builtin:edge_parity") {
      v.rule = RuleKind::edge_parity;
    } else if (spec == "builtin:feature_sum_sign") {
      v.rule = RuleKind::feature_sum_sign;
    } else if (starts("builtin:degree_threshold")) {
      v.rule = RuleKind::degree_threshold;
      const std::string rest = spec.substr(std::string_view("builtin:degree_threshold").size());
      if (rest.size() < 2 || rest[0] != ':') throw InvalidArgument("degree_threshold needs a threshold, e.g. builtin:degree_threshold:4");
      try {
        v.threshold = static_cast<std::size_t>(std::stoul(rest.substr(1)));
      } catch (const std::exception&) {
        throw InvalidArgument("invalid degree threshold in '" + spec + "'");
      }
    } else if (spec == "builtin:gin") {
      if (weights.empty()) throw InvalidArgument("builtin:gin requires --weights");
      v.kind = Kind::gin;
      v.target = weights;
    } else if (starts("remote:")) {
      v.kind = Kind::remote;
      v.target = spec.substr(7);
      split_host_port(v.target);
    } else if (starts("stdio:")) {
      v.kind = Kind::stdio;
      v.target = spec.substr(6);
      if (v.target.empty()) throw InvalidArgument("stdio victim needs a command");
    } else {
      throw InvalidArgument("unknown victim '" + spec + "'");
    }
    return v;
  }

  [[nodiscard]] VictimFactory factory() const {
    switch (kind) {
      case Kind::rule:
        return [r = rule, t = threshold] { return std::make_unique<RuleVictim>(r, t); };
      case Kind::gin: {
        auto w = std::make_shared<const GinWeights>(load_gin_weights(target));
        return [w] { return std::make_unique<GinVictim>(*w); };
      }
      case Kind::remote:
        return [e = target] { return remote_victim(e); };
      case Kind::stdio:
        return [c = target] { return std::make_unique<RemoteVictim>(std::make_unique<ProcessTransport>(c)); };
    }
    throw InvalidArgument("invalid victim spec");
  }
};

/// Which outcomes form the denominator of the Injected percentage.
enum class InjectedBase { successes, successes_and_pred_change };

struct ExperimentConfig {
  FeatureInit feature_init = FeatureInit::node_mean;
  ConnectionInit connection_init = ConnectionInit::mode;
  double inject_percent = 0.0;     ///< 0 with inject_number 0: use the budget
  std::size_t inject_number = 0;
  AttackConfig attack;             ///< attack.edge_budget is overridden per budget
  bool iterative = false;
  std::vector<double> budgets{0.1};
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  InjectedBase injected_base = InjectedBase::successes;

  void validate() const {
    if (budgets.empty()) throw InvalidArgument("at least one budget is required");
    for (double b : budgets) {
      if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("budgets must lie in (0, 1]");
    }
    if (inject_percent != 0.0 && inject_number != 0) {
      throw InvalidArgument("only one of inject-percent and inject-number may be nonzero");
    }
    if (inject_percent < 0.0 || inject_percent > 1.0) throw InvalidArgument("inject-percent must lie in (0, 1]");
    if (workers == 0) throw InvalidArgument("workers must be >= 1");
  }
};

/// Per-graph summary kept in a report.
struct OutcomeRecord {
  std::size_t graph_index = 0;
  AttackStatus status = AttackStatus::failure;
  std::size_t injected = 0;
  std::size_t flipped_edges = 0;
  double rate = 0.0;
  std::uint64_t queries_used = 0;
  std::uint64_t cache_hits = 0;
  double wall_time = 0.0;
  bool injected_still_connected = false;

  static OutcomeRecord from(std::size_t index, const AttackOutcome& o) {
    return {index, o.status, o.injected, o.flipped_edges, o.rate,
            o.queries_used, o.cache_hits, o.wall_time, o.injected_still_connected};
  }

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

struct AggregateReport {
  std::string method;
  double budget = 0.0;
  std::size_t num_graphs = 0;
  std::size_t success_count = 0;
  std::size_t pred_change_count = 0;
  std::size_t no_need_count = 0;
  std::size_t failure_count = 0;
  std::optional<double> sr;  ///< nullopt when every graph is no_need
  std::optional<double> injected_pct;
  std::optional<double> perturb_edge_avg;
  std::optional<double> query_count_avg;
  std::optional<double> attack_time_avg;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<OutcomeRecord> outcomes;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

/// 100 * (success + pred_change) / (num_graphs - no_need).
inline std::optional<double> success_rate(std::size_t success, std::size_t pred_change, std::size_t no_need,
                                          std::size_t num_graphs) {
  if (num_graphs <= no_need) return std::nullopt;
  return 100.0 * static_cast<double>(success + pred_change) / static_cast<double>(num_graphs - no_need);
}

/// Fills the count and metric fields of a report from its outcome list.
inline void compute_metrics(AggregateReport& r, InjectedBase base = InjectedBase::successes) {
  if (r.outcomes.empty()) throw InvalidArgument("compute_metrics needs at least one outcome");
  r.num_graphs = r.outcomes.size();
  r.success_count = r.pred_change_count = r.no_need_count = r.failure_count = 0;
  std::size_t flips = 0, connected = 0, connected_base = 0, attacked = 0;
  double queries = 0.0, seconds = 0.0;
  for (const auto& o : r.outcomes) {
    switch (o.status) {
      case AttackStatus::no_need: ++r.no_need_count; break;
      case AttackStatus::pred_change: ++r.pred_change_count; break;
      case AttackStatus::success: ++r.success_count; break;
      case AttackStatus::failure: ++r.failure_count; break;
    }
    if (o.status == AttackStatus::success) flips += o.flipped_edges;
    const bool counts_for_injected =
        o.status == AttackStatus::success ||
        (base == InjectedBase::successes_and_pred_change && o.status == AttackStatus::pred_change);
    if (counts_for_injected) {
      ++connected_base;
      connected += o.injected_still_connected;
    }
    if (o.status != AttackStatus::no_need) {
      ++attacked;
      queries += static_cast<double>(o.queries_used);
      seconds += o.wall_time;
    }
  }
  r.sr = success_rate(r.success_count, r.pred_change_count, r.no_need_count, r.num_graphs);
  r.perturb_edge_avg = r.success_count
                           ? std::optional(static_cast<double>(flips) / static_cast<double>(r.success_count))
                           : std::nullopt;
  r.injected_pct = connected_base
                       ? std::optional(100.0 * static_cast<double>(connected) / static_cast<double>(connected_base))
                       : std::nullopt;
  r.query_count_avg = attacked ? std::optional(queries / static_cast<double>(attacked)) : std::nullopt;
  r.attack_time_avg = attacked ? std::optional(seconds / static_cast<double>(attacked)) : std::nullopt;
}

inline AggregateReport compute_metrics(std::vector<OutcomeRecord> outcomes, InjectedBase base = InjectedBase::successes) {
  AggregateReport r;
  r.outcomes = std::move(outcomes);
  compute_metrics(r, base);
  return r;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["feature_init"] = to_string(c.feature_init);
  j["connection_init"] = to_string(c.connection_init);
  j["inject_percent"] = c.inject_percent;
  j["inject_number"] = c.inject_number;
  j["iterative"] = c.iterative;
  j["budgets"] = c.budgets;
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  j["injected_base"] = c.injected_base == InjectedBase::successes ? "successes" : "successes_and_pred_change";
  const auto& a = c.attack;
  j["attack"] = {{"lambda_max", a.lambda_max ? nlohmann::json(*a.lambda_max) : nlohmann::json(nullptr)},
                 {"lambda_tol", a.lambda_tol},
                 {"num_directions", a.num_directions},
                 {"grad_samples", a.grad_samples},
                 {"sigma", a.sigma},
                 {"step_size", a.step_size},
                 {"max_iters", a.max_iters},
                 {"query_limit", a.query_limit},
                 {"use_cache", a.use_cache}};
  return j;
}

/// Called once per finished graph, from the worker that attacked it.
using OutcomeSink = std::function<void(std::size_t graph_index, const AttackOutcome&)>;

/// Attacks every graph of `ds` at one edge budget. Per-graph seeds derive from
/// (cfg.seed, graph index), so results do not depend on `workers`.
inline AggregateReport run_experiment(const Dataset& ds, const VictimFactory& make_victim,
                                      const ExperimentConfig& cfg, double budget, const OutcomeSink& sink = {}) {
  cfg.validate();
  if (ds.graphs.empty()) throw InvalidArgument("dataset has no graphs");
  AttackConfig attack = cfg.attack;
  attack.edge_budget = budget;
  attack.validate();

  const std::size_t n = ds.graphs.size();
  std::vector<OutcomeRecord> records(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  const auto worker = [&] {
    try {
      auto victim = make_victim();
      for (std::size_t i = next++; i < n; i = next++) {
        const Graph& g = ds.graphs[i];
        const double percent = cfg.inject_number ? 0.0 : (cfg.inject_percent > 0.0 ? cfg.inject_percent : budget);
        const std::size_t k = injection_count(g, percent, cfg.inject_number);
        InjectionPlan plan{k, cfg.feature_init, cfg.connection_init, derive_seed(cfg.seed, 2 * i)};
        AttackConfig per_graph = attack;
        per_graph.seed = derive_seed(cfg.seed, 2 * i + 1);
        const auto outcome = attack_graph(g, ds.feature_kind, plan, *victim, per_graph, cfg.iterative, k);
        records[i] = OutcomeRecord::from(i, outcome);
        if (sink) sink(i, outcome);
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };

  const std::size_t workers = std::min(cfg.workers, n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  AggregateReport r;
  r.method = std::string(to_string(cfg.connection_init));
  r.budget = budget;
  r.seed = cfg.seed;
  r.config = config_to_json(cfg);
  r.config["dataset"] = ds.name;
  r.outcomes = std::move(records);
  compute_metrics(r, cfg.injected_base);
  return r;
}

/// One report per entry of cfg.budgets.
inline std::vector<AggregateReport> run_sweep(const Dataset& ds, const VictimFactory& make_victim,
                                              const ExperimentConfig& cfg, const OutcomeSink& sink = {}) {
  std::vector<AggregateReport> out;
  for (double b : cfg.budgets) out.push_back(run_experiment(ds, make_victim, cfg, b, sink));
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { json, csv, table };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "table") return ReportFormat::table;
  throw InvalidArgument("unknown report format '" + std::string(s) + "'");
}

inline constexpr std::string_view kUndefined = "NA";
inline constexpr std::string_view kCsvHeader =
    "method,budget,SR,success,pred_change,injected,no_need,perturb_edge,query_count,attack_time";

namespace report_detail {

inline std::string fixed2(std::optional<double> v) {
  if (!v) return std::string(kUndefined);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

inline std::string shortest(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline nlohmann::json opt(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline std::vector<std::string> row_cells(const AggregateReport& r) {
  return {r.method,
          shortest(r.budget),
          fixed2(r.sr),
          std::to_string(r.success_count),
          std::to_string(r.pred_change_count),
          fixed2(r.injected_pct),
          std::to_string(r.no_need_count),
          fixed2(r.perturb_edge_avg),
          fixed2(r.query_count_avg),
          fixed2(r.attack_time_avg)};
}

}  // namespace report_detail

inline nlohmann::json report_to_json(const AggregateReport& r) {
  using report_detail::opt;
  nlohmann::json j;
  j["method"] = r.method;
  j["budget"] = r.budget;
  j["num_graphs"] = r.num_graphs;
  j["success"] = r.success_count;
  j["pred_change"] = r.pred_change_count;
  j["no_need"] = r.no_need_count;
  j["failure"] = r.failure_count;
  j["SR"] = opt(r.sr);
  j["injected"] = opt(r.injected_pct);
  j["perturb_edge"] = opt(r.perturb_edge_avg);
  j["query_count"] = opt(r.query_count_avg);
  j["attack_time"] = opt(r.attack_time_avg);
  j["seed"] = r.seed;
  j["config"] = r.config;
  auto& outs = j["outcomes"] = nlohmann::json::array();
  for (const auto& o : r.outcomes) {
    outs.push_back({{"graph_index", o.graph_index},
                    {"status", to_string(o.status)},
                    {"injected", o.injected},
                    {"flipped_edges", o.flipped_edges},
                    {"rate", o.rate},
                    {"queries_used", o.queries_used},
                    {"cache_hits", o.cache_hits},
                    {"wall_time", o.wall_time},
                    {"injected_still_connected", o.injected_still_connected}});
  }
  return j;
}

inline AggregateReport report_from_json(const nlohmann::json& j) {
  using report_detail::opt_from;
  AggregateReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.budget = j.at("budget").get<double>();
    r.num_graphs = j.at("num_graphs").get<std::size_t>();
    r.success_count = j.at("success").get<std::size_t>();
    r.pred_change_count = j.at("pred_change").get<std::size_t>();
    r.no_need_count = j.at("no_need").get<std::size_t>();
    r.failure_count = j.at("failure").get<std::size_t>();
    r.sr = opt_from(j.at("SR"));
    r.injected_pct = opt_from(j.at("injected"));
    r.perturb_edge_avg = opt_from(j.at("perturb_edge"));
    r.query_count_avg = opt_from(j.at("query_count"));
    r.attack_time_avg = opt_from(j.at("attack_time"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto& o : j.at("outcomes")) {
      OutcomeRecord rec;
      rec.graph_index = o.at("graph_index").get<std::size_t>();
      rec.status = parse_attack_status(o.at("status").get<std::string>());
      rec.injected = o.at("injected").get<std::size_t>();
      rec.flipped_edges = o.at("flipped_edges").get<std::size_t>();
      rec.rate = o.at("rate").get<double>();
      rec.queries_used = o.at("queries_used").get<std::uint64_t>();
      rec.cache_hits = o.at("cache_hits").get<std::uint64_t>();
      rec.wall_time = o.at("wall_time").get<double>();
      rec.injected_still_connected = o.at("injected_still_connected").get<bool>();
      r.outcomes.push_back(rec);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("invalid report json: ") + ex.what());
  }
  return r;
}

inline std::string emit_report(const std::vector<AggregateReport>& reports, ReportFormat format) {
  std::ostringstream o;
  switch (format) {
    case ReportFormat::json: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : reports) arr.push_back(report_to_json(r));
      o << arr.dump(2) << "\n";
      break;
    }
    case ReportFormat::csv: {
      o << kCsvHeader << "\n";
      for (const auto& r : reports) {
        const auto cells = report_detail::row_cells(r);
        for (std::size_t c = 0; c < cells.size(); ++c) o << (c ? "," : "") << cells[c];
        o << "\n";
      }
      break;
    }
    case ReportFormat::table: {
      const std::vector<std::string> head{"method", "budget", "SR", "success", "Pred Change",
                                          "Injected", "No need", "Perturb Edge", "Query Count", "Attack Time"};
      std::vector<std::vector<std::string>> rows{head};
      for (const auto& r : reports) rows.push_back(report_detail::row_cells(r));
      std::vector<std::size_t> width(head.size(), 0);
      for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
          o << (c ? " | " : "") << std::setw(static_cast<int>(width[c])) << rows[i][c];
        }
        o << "\n";
        if (i == 0) {
          for (std::size_t c = 0; c < width.size(); ++c) o << (c ? "-+-" : "") << std::string(width[c], '-');
          o << "\n";
        }
      }
      break;
    }
  }
  return o.str();
}

inline void emit_report(const std::vector<AggregateReport>& reports, ReportFormat format,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write report to " + path.string());
  out << emit_report(reports, format);
  if (!out) throw InvalidArgument("failed writing report to " + path.string());
}

}  // namespace nodeinj
