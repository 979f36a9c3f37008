#include "lematch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace lematch {

std::string_view to_string(EventLabel label) {
  switch (label) {
    case EventLabel::Persistent: return "persistent";
    case EventLabel::Disappearing: return "disappearing";
    case EventLabel::New: return "new";
    case EventLabel::Merging: return "merging";
    case EventLabel::Splitting: return "splitting";
  }
  return "unknown";
}

std::optional<EventLabel> event_label_from_string(std::string_view text) {
  if (text == "persistent") return EventLabel::Persistent;
  if (text == "disappearing") return EventLabel::Disappearing;
  if (text == "new") return EventLabel::New;
  if (text == "merging") return EventLabel::Merging;
  if (text == "splitting") return EventLabel::Splitting;
  return std::nullopt;
}

EvolutionGraph label_events(int n0, int n1, const std::vector<GraphEdge>& edges) {
  if (n0 < 0 || n1 < 0) throw InputError("label_events: negative lesion count");
  EvolutionGraph graph;
  graph.n0 = n0;
  graph.n1 = n1;
  std::set<std::pair<int, int>> seen;
  for (const GraphEdge& e : edges) {
    if (e.baseline < 0 || e.baseline >= n0 || e.followup < 0 || e.followup >= n1)
      throw InputError("label_events: edge endpoint out of range");
    if (!seen.insert({e.baseline, e.followup}).second)
      throw InputError("label_events: duplicate edge");
    graph.edges.push_back(e);
  }
  std::sort(graph.edges.begin(), graph.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
    return std::pair(x.baseline, x.followup) < std::pair(y.baseline, y.followup);
  });

  std::vector<int> out_deg(static_cast<size_t>(n0), 0);
  std::vector<int> in_deg(static_cast<size_t>(n1), 0);
  for (const GraphEdge& e : graph.edges) {
    ++out_deg[static_cast<size_t>(e.baseline)];
    ++in_deg[static_cast<size_t>(e.followup)];
  }
  std::vector<int> sole_target(static_cast<size_t>(n0), -1);
  std::vector<int> sole_source(static_cast<size_t>(n1), -1);
  for (const GraphEdge& e : graph.edges) {
    if (out_deg[static_cast<size_t>(e.baseline)] == 1)
      sole_target[static_cast<size_t>(e.baseline)] = e.followup;
    if (in_deg[static_cast<size_t>(e.followup)] == 1)
      sole_source[static_cast<size_t>(e.followup)] = e.baseline;
  }

  graph.baseline_states.resize(static_cast<size_t>(n0));
  for (int i = 0; i < n0; ++i) {
    const int d = out_deg[static_cast<size_t>(i)];
    if (d == 0)
      graph.baseline_states[static_cast<size_t>(i)] = EventLabel::Disappearing;
    else if (d >= 2)
      graph.baseline_states[static_cast<size_t>(i)] = EventLabel::Splitting;
    else {
      const int j = sole_target[static_cast<size_t>(i)];
      graph.baseline_states[static_cast<size_t>(i)] =
          in_deg[static_cast<size_t>(j)] >= 2 ? EventLabel::Merging : EventLabel::Persistent;
    }
  }
  graph.followup_states.resize(static_cast<size_t>(n1));
  for (int j = 0; j < n1; ++j) {
    const int d = in_deg[static_cast<size_t>(j)];
    if (d == 0)
      graph.followup_states[static_cast<size_t>(j)] = EventLabel::New;
    else if (d >= 2)
      graph.followup_states[static_cast<size_t>(j)] = EventLabel::Merging;
    else {
      const int i = sole_source[static_cast<size_t>(j)];
      graph.followup_states[static_cast<size_t>(j)] =
          out_deg[static_cast<size_t>(i)] >= 2 ? EventLabel::Splitting : EventLabel::Persistent;
    }
  }
  return graph;
}

MatchResult match_case(const LesionSet& set0, const LesionSet& set1, const MatchConfig& cfg) {
  cfg.validate();
  MatchResult result;
  const int n0 = set0.size();
  const int n1 = set1.size();

  if (set0.empty() || set1.empty()) {
    result.graph = label_events(n0, n1, {});
    result.plan.gamma = Eigen::MatrixXd::Zero(n0, n1);
    result.plan.converged = true;
    result.plan.final_residual = 0.0;
    result.cost.c_geom = Eigen::MatrixXd::Zero(n0, n1);
    result.cost.tau = Eigen::MatrixXd::Zero(n0, n1);
    result.cost.s_bar = Eigen::MatrixXd::Zero(n0, n1);
    result.cost.combined = Eigen::MatrixXd::Zero(n0, n1);
    if (set0.empty()) {
      result.prior.rho = std::numeric_limits<double>::quiet_NaN();
      result.prior.lambda_eff = cfg.lambda_base;
      result.prior.mu_eff = cfg.mu_base;
    } else {
      result.prior.rho = 0.0;
      std::tie(result.prior.lambda_eff, result.prior.mu_eff) =
          effective_penalties(0.0, cfg.lambda_base, cfg.mu_base, cfg.rho_gamma);
    }
    return result;
  }

  result.cost = build_cost_matrix(set0, set1, cfg);
  result.prior = make_prior(set0, set1, cfg);
  const auto [a, b] = normalize_masses(set0, set1);
  SolveOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tol = cfg.tol;
  result.plan = solve_uot(result.cost.combined, a, b, result.prior.lambda_eff,
                          result.prior.mu_eff, cfg.epsilon, opts);
  const auto edges = prune_plan(result.plan.gamma, cfg.tau_row, cfg.tau_col, cfg.prune_floor);
  result.graph = label_events(n0, n1, edges);
  return result;
}

}  // namespace lematch
