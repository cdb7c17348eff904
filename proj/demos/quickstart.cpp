// Attacks one small graph with a rule victim and prints the adversarial graph.

#include <cstdio>
#include <iostream>

#include "nodeinj/nodeinj.hpp"

using namespace nodeinj;

int main() {
  // A 6-cycle: every node has degree 2, so a degree >= 3 rule says class 0.
  std::vector<Edge> edges;
  for (NodeId v = 0; v < 6; ++v) edges.emplace_back(v, (v + 1) % 6);
  const Graph g(6, edges, Matrix(6, 1, 1.0), 0);

  auto victim = rule_victim(RuleKind::degree_threshold, 3);
  AttackConfig cfg;
  cfg.edge_budget = 0.5;
  const InjectionPlan plan{1, FeatureInit::one, ConnectionInit::no_connection, 1};

  const AttackOutcome o = attack_graph(g, FeatureKind::constant_one, plan, victim, cfg);
  std::printf("status %s, flipped %zu, rate %.3f, queries %llu\n", std::string(to_string(o.status)).c_str(),
              o.flipped_edges, o.rate, static_cast<unsigned long long>(o.queries_used));
  std::cout << export_graph(o.final_graph, {6}, ExportFormat::dot);
  return 0;
}
