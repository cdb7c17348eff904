// Command-line front end: attack a TU dataset, serve a builtin victim over the
// wire protocol, export single graphs, or summarize a dataset.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nodeinj/nodeinj.hpp"

namespace fs = std::filesystem;
using namespace nodeinj;

namespace {

Dataset load_dataset(const std::string& dir, const std::string& name, std::size_t limit,
                     const std::vector<std::size_t>& indices) {
  Dataset ds = parse_tu_dataset(dir, name);
  if (!indices.empty()) {
    ds = select_graphs(ds, indices);
  } else if (limit > 0 && limit < ds.graphs.size()) {
    ds.graphs.resize(limit);
  }
  return ds;
}

std::string budget_tag(double b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%g", b);
  return buf;
}

struct AttackArgs {
  std::string dataset, name, victim = "builtin:edge_parity", weights;
  std::vector<double> budgets{0.1};
  double inject_percent = 0.0;
  std::size_t inject_number = 0;
  std::string feature_init = "node_mean", connection_init = "mode";
  bool iterative = false;
  std::uint64_t query_limit = 0, seed = 0;
  std::size_t workers = 1, limit = 0;
  std::vector<std::size_t> indices;
  std::string out, format = "table", export_dir;
  bool cache = false;
  std::string injected_base = "successes";
  AttackConfig attack;
  double lambda_max = 0.0;
};

int run_attack(const AttackArgs& a) {
  ExperimentConfig cfg;
  cfg.feature_init = parse_feature_init(a.feature_init);
  cfg.connection_init = parse_connection_init(a.connection_init);
  cfg.inject_percent = a.inject_percent;
  cfg.inject_number = a.inject_number;
  cfg.iterative = a.iterative;
  cfg.budgets = a.budgets;
  cfg.workers = a.workers;
  cfg.seed = a.seed;
  cfg.attack = a.attack;
  cfg.attack.query_limit = a.query_limit;
  cfg.attack.use_cache = a.cache;
  if (a.lambda_max > 0.0) cfg.attack.lambda_max = a.lambda_max;
  if (a.injected_base == "successes") {
    cfg.injected_base = InjectedBase::successes;
  } else if (a.injected_base == "successes_and_pred_change") {
    cfg.injected_base = InjectedBase::successes_and_pred_change;
  } else {
    throw InvalidArgument("unknown --injected-base '" + a.injected_base + "'");
  }

  const Dataset ds = load_dataset(a.dataset, a.name, a.limit, a.indices);
  const auto victim = VictimSpec::parse(a.victim, a.weights).factory();

  std::vector<AggregateReport> reports;
  std::mutex export_mu;
  for (double b : cfg.budgets) {
    OutcomeSink sink;
    if (!a.export_dir.empty()) {
      const fs::path dir = cfg.budgets.size() > 1 ? fs::path(a.export_dir) / budget_tag(b) : fs::path(a.export_dir);
      fs::create_directories(dir);
      sink = [&, dir](std::size_t index, const AttackOutcome& o) {
        if (o.status != AttackStatus::success && o.status != AttackStatus::pred_change) return;
        std::set<NodeId> marked;
        for (auto v = o.original_nodes; v < o.final_graph.num_nodes(); ++v) marked.insert(static_cast<NodeId>(v));
        const auto text = export_graph(o.final_graph, marked, ExportFormat::dot);
        std::lock_guard lock(export_mu);
        std::ofstream(dir / ("graph_" + std::to_string(index) + ".dot")) << text;
      };
    }
    reports.push_back(run_experiment(ds, victim, cfg, b, sink));
  }

  const auto format = parse_report_format(a.format);
  if (a.out.empty()) {
    std::cout << emit_report(reports, format);
  } else {
    emit_report(reports, format, a.out);
  }
  return 0;
}

int run_serve(const std::string& victim_spec, const std::string& weights, const std::string& listen, bool stdio) {
  const auto spec = VictimSpec::parse(victim_spec, weights);
  if (spec.kind == VictimSpec::Kind::remote || spec.kind == VictimSpec::Kind::stdio) {
    throw InvalidArgument("serve only supports builtin victims");
  }
  auto oracle = spec.factory()();
  std::size_t input_dim = 1;
  if (auto* gin = dynamic_cast<GinVictim*>(oracle.get())) input_dim = gin->weights().input_dim;

  if (stdio) {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      std::cout << wire::handle_request(*oracle, input_dim, line) << "\n" << std::flush;
    }
    return 0;
  }
  auto [host, port] = split_host_port(listen);
  TcpServer server(*oracle, input_dim, host, port);
  std::cerr << "serving on " << host << ":" << server.port() << "\n";
  server.run();
  return 0;
}

int run_info(const std::string& dir, const std::string& name) {
  const Dataset ds = parse_tu_dataset(dir, name);
  double nodes = 0.0, edges = 0.0;
  for (const auto& g : ds.graphs) {
    nodes += static_cast<double>(g.num_nodes());
    edges += static_cast<double>(g.num_edges());
  }
  const double n = static_cast<double>(ds.graphs.size());
  std::printf("dataset        %s\n", ds.name.c_str());
  std::printf("graphs         %zu\n", ds.graphs.size());
  std::printf("classes        %zu\n", ds.num_classes);
  std::printf("feature kind   %s (d=%zu)\n", std::string(to_string(ds.feature_kind)).c_str(), ds.feature_dim());
  std::printf("avg nodes      %.2f\n", nodes / n);
  std::printf("avg edges      %.2f\n", edges / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node-injection attacks against label-only graph classifiers"};
  app.require_subcommand(1);

  AttackArgs a;
  auto* attack = app.add_subcommand("attack", "Attack every graph of a TU dataset and report metrics");
  attack->add_option("--dataset", a.dataset, "Directory holding the TU files")->required();
  attack->add_option("--name", a.name, "Dataset name prefix, e.g. NCI1")->required();
  attack->add_option("--victim", a.victim,
                     "builtin:edge_parity | builtin:degree_threshold:<t> | builtin:feature_sum_sign | "
                     "builtin:gin | remote:host:port | stdio:<command>")
      ->capture_default_str();
  attack->add_option("--weights", a.weights, "GIN weight file for builtin:gin");
  attack->add_option("--budget", a.budgets, "Edge budget(s) b on r = flips/(kN)")->capture_default_str();
  attack->add_option("--inject-percent", a.inject_percent, "Fraction of N to inject (defaults to the budget)");
  attack->add_option("--inject-number", a.inject_number, "Fixed number of nodes to inject");
  attack->add_option("--feature-init", a.feature_init,
                     "zero|one|random|node_mean|gaussian_coordinate|empirical_one_hot|pivot_perturbed")
      ->capture_default_str();
  attack->add_option("--connection-init", a.connection_init, "no_connection|random|mode|pivot_all")
      ->capture_default_str();
  attack->add_flag("--iterative", a.iterative, "Inject 1, 2, ... nodes until success or the node budget");
  attack->add_option("--query-limit", a.query_limit, "Per-graph query limit (0 = unlimited)");
  attack->add_option("--seed", a.seed, "Global seed")->capture_default_str();
  attack->add_option("--workers", a.workers, "Parallel attack workers")->capture_default_str();
  attack->add_option("--out", a.out, "Write the report here instead of stdout");
  attack->add_option("--format", a.format, "json|csv|table")->capture_default_str();
  attack->add_option("--export-graphs", a.export_dir, "Write DOT files of successful adversarial graphs here");
  attack->add_option("--limit", a.limit, "Attack only the first n graphs");
  attack->add_option("--indices", a.indices, "Attack only these graph indices (0-based)");
  attack->add_flag("--cache", a.cache, "Memoize victim answers; hits are reported, not counted as queries");
  attack->add_option("--injected-base", a.injected_base, "successes|successes_and_pred_change")
      ->capture_default_str();
  attack->add_option("--lambda-max", a.lambda_max, "Boundary search ceiling (default sqrt(kN))");
  attack->add_option("--lambda-tol", a.attack.lambda_tol)->capture_default_str();
  attack->add_option("--directions", a.attack.num_directions, "Initial random directions")->capture_default_str();
  attack->add_option("--grad-samples", a.attack.grad_samples)->capture_default_str();
  attack->add_option("--sigma", a.attack.sigma)->capture_default_str();
  attack->add_option("--step-size", a.attack.step_size)->capture_default_str();
  attack->add_option("--max-iters", a.attack.max_iters)->capture_default_str();

  std::string serve_victim = "builtin:edge_parity", serve_weights, listen = "127.0.0.1:7000";
  bool serve_stdio = false;
  auto* serve = app.add_subcommand("serve", "Serve a builtin victim over the wire protocol");
  serve->add_option("--victim", serve_victim)->capture_default_str();
  serve->add_option("--weights", serve_weights);
  serve->add_option("--listen", listen, "host:port")->capture_default_str();
  serve->add_flag("--stdio", serve_stdio, "Speak the protocol on stdin/stdout instead of TCP");

  std::string ex_dataset, ex_name, ex_format = "dot";
  std::size_t ex_index = 0;
  auto* exp = app.add_subcommand("export", "Print one dataset graph as DOT or JSON");
  exp->add_option("--dataset", ex_dataset)->required();
  exp->add_option("--name", ex_name)->required();
  exp->add_option("--index", ex_index)->capture_default_str();
  exp->add_option("--format", ex_format, "dot|json")->capture_default_str();

  std::string info_dataset, info_name;
  auto* info = app.add_subcommand("info", "Summarize a TU dataset");
  info->add_option("--dataset", info_dataset)->required();
  info->add_option("--name", info_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack) return run_attack(a);
    if (*serve) return run_serve(serve_victim, serve_weights, listen, serve_stdio);
    if (*exp) {
      const Dataset ds = parse_tu_dataset(ex_dataset, ex_name);
      if (ex_index >= ds.graphs.size()) throw InvalidArgument("graph index out of range");
      const auto fmt = ex_format == "json" ? ExportFormat::json : ExportFormat::dot;
      std::cout << export_graph(ds.graphs[ex_index], {}, fmt);
      return 0;
    }
    if (*info) return run_info(info_dataset, info_name);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
