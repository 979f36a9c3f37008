#include "lematch/metrics.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "lematch/errors.hpp"

namespace lematch {

namespace {

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void check_same_lesion_sets(const EvolutionGraph& predicted, const EvolutionGraph& reference) {
  if (predicted.n0 != reference.n0 || predicted.n1 != reference.n1)
    throw InputError("evaluation requires graphs over the same lesion sets");
}

// components as (sorted node list, sorted edge list); baseline node i is i,
// follow-up node j is n0 + j
struct Component {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;

  friend bool operator==(const Component&, const Component&) = default;
};

std::map<std::vector<int>, Component> components_of(const EvolutionGraph& g) {
  const int total = g.n0 + g.n1;
  std::vector<int> parent(static_cast<size_t>(total));
  for (int v = 0; v < total; ++v) parent[static_cast<size_t>(v)] = v;
  auto find = [&](int v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  for (const GraphEdge& e : g.edges) {
    const int ra = find(e.baseline);
    const int rb = find(g.n0 + e.followup);
    if (ra != rb) parent[static_cast<size_t>(ra)] = rb;
  }
  std::map<int, Component> by_root;
  for (int v = 0; v < total; ++v) by_root[find(v)].nodes.push_back(v);
  for (const GraphEdge& e : g.edges)
    by_root[find(e.baseline)].edges.push_back({e.baseline, g.n0 + e.followup});

  std::map<std::vector<int>, Component> out;
  for (auto& [root, comp] : by_root) {
    std::sort(comp.nodes.begin(), comp.nodes.end());
    std::sort(comp.edges.begin(), comp.edges.end());
    out.emplace(comp.nodes, std::move(comp));
  }
  return out;
}

}  // namespace

EdgePairSet edge_set(const EvolutionGraph& graph) {
  EdgePairSet out;
  for (const GraphEdge& e : graph.edges) out.insert({e.baseline, e.followup});
  return out;
}

EdgeMetrics edge_metrics(const EdgePairSet& predicted, const EdgePairSet& reference) {
  long tp = 0;
  for (const auto& e : predicted) tp += reference.count(e) ? 1 : 0;
  EdgeMetrics m;
  m.precision = predicted.empty() ? (reference.empty() ? 1.0 : 0.0)
                                  : double(tp) / double(predicted.size());
  m.recall = reference.empty() ? 1.0 : double(tp) / double(reference.size());
  m.f1 = f1_of(m.precision, m.recall);
  return m;
}

StateMetrics state_metrics(const EvolutionGraph& predicted, const EvolutionGraph& reference) {
  check_same_lesion_sets(predicted, reference);
  StateMetrics m;
  for (int i = 0; i < reference.n0; ++i)
    ++m.confusion(static_cast<int>(reference.baseline_states[static_cast<size_t>(i)]),
                  static_cast<int>(predicted.baseline_states[static_cast<size_t>(i)]));
  for (int j = 0; j < reference.n1; ++j) {
    const EventLabel ref = reference.followup_states[static_cast<size_t>(j)];
    const EventLabel pred = predicted.followup_states[static_cast<size_t>(j)];
    if (ref == EventLabel::New || pred == EventLabel::New)
      ++m.confusion(static_cast<int>(ref), static_cast<int>(pred));
  }

  const long total = m.confusion.sum();
  if (total == 0) {
    m.weighted_precision = 1.0;
    m.weighted_recall = 1.0;
    return m;
  }
  // weighted recall reduces to the trace over the total
  m.weighted_recall = double(m.confusion.trace()) / double(total);
  double wp = 0.0;
  for (int c = 0; c < kNumEventLabels; ++c) {
    const long support = m.confusion.row(c).sum();
    if (support == 0) continue;
    const long predicted_as = m.confusion.col(c).sum();
    const double prec = predicted_as > 0 ? double(m.confusion(c, c)) / double(predicted_as) : 0.0;
    wp += double(support) / double(total) * prec;
  }
  m.weighted_precision = wp;
  return m;
}

double component_f1(const EvolutionGraph& predicted, const EvolutionGraph& reference) {
  check_same_lesion_sets(predicted, reference);
  const auto pred = components_of(predicted);
  const auto ref = components_of(reference);
  if (pred.empty() && ref.empty()) return 1.0;
  long tp = 0;
  for (const auto& [nodes, comp] : pred) {
    const auto it = ref.find(nodes);
    if (it != ref.end() && it->second == comp) ++tp;
  }
  const double p = pred.empty() ? 0.0 : double(tp) / double(pred.size());
  const double r = ref.empty() ? 0.0 : double(tp) / double(ref.size());
  return f1_of(p, r);
}

EvalReport evaluate(const EvolutionGraph& predicted, const EvolutionGraph& reference) {
  check_same_lesion_sets(predicted, reference);
  EvalReport report;
  const EdgeMetrics em = edge_metrics(edge_set(predicted), edge_set(reference));
  report.edge_precision = em.precision;
  report.edge_recall = em.recall;
  report.edge_f1 = em.f1;
  const StateMetrics sm = state_metrics(predicted, reference);
  report.state_weighted_precision = sm.weighted_precision;
  report.state_weighted_recall = sm.weighted_recall;
  report.state_confusion = sm.confusion;
  report.component_f1 = component_f1(predicted, reference);
  return report;
}

}  // namespace lematch
