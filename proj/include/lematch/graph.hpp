#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lematch/cost.hpp"
#include "lematch/errors.hpp"
#include "lematch/prior.hpp"
#include "lematch/types.hpp"
#include "lematch/uot.hpp"

// Bipartite evolution graph: transport plan entries surviving relative
// pruning become edges; node degrees then determine the five event labels.

namespace lematch {

enum class EventLabel { Persistent, Disappearing, New, Merging, Splitting };

std::string_view to_string(EventLabel label);
std::optional<EventLabel> event_label_from_string(std::string_view text);

struct GraphEdge {
  int baseline = 0;
  int followup = 0;
  std::optional<double> mass;  // plan mass when the edge came from a transport plan

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct EvolutionGraph {
  int n0 = 0;
  int n1 = 0;
  std::vector<GraphEdge> edges;             // sorted by (baseline, followup), no duplicates
  std::vector<EventLabel> baseline_states;  // size n0
  std::vector<EventLabel> followup_states;  // size n1

  friend bool operator==(const EvolutionGraph&, const EvolutionGraph&) = default;
};

// Keep (i,j) iff gamma_ij >= tau_row * rowmax_i AND gamma_ij >= tau_col * colmax_j
// AND gamma_ij > floor. Ties at the relative thresholds are kept.
template <typename Derived>
std::vector<GraphEdge> prune_plan(const Eigen::MatrixBase<Derived>& gamma_expr, double tau_row,
                                  double tau_col, double floor) {
  if (!(tau_row > 0.0) || tau_row > 1.0 || !(tau_col > 0.0) || tau_col > 1.0)
    throw ConfigError("pruning fractions must lie in (0, 1]");
  if (floor < 0.0) throw ConfigError("prune floor must be >= 0");
  const Eigen::MatrixXd gamma = gamma_expr.derived().template cast<double>();
  if (gamma.size() > 0 && (!gamma.allFinite() || gamma.minCoeff() < 0.0))
    throw InputError("prune_plan expects a finite nonnegative plan");
  std::vector<GraphEdge> edges;
  if (gamma.size() == 0) return edges;
  const Eigen::VectorXd row_max = gamma.rowwise().maxCoeff();
  const Eigen::VectorXd col_max = gamma.colwise().maxCoeff();
  for (int i = 0; i < gamma.rows(); ++i)
    for (int j = 0; j < gamma.cols(); ++j) {
      const double g = gamma(i, j);
      if (g >= tau_row * row_max[i] && g >= tau_col * col_max[j] && g > floor)
        edges.push_back({i, j, g});
    }
  return edges;
}

// Assigns one label per lesion from node degrees: out-degree 0 is disappearing,
// in-degree 0 is new, degree >= 2 is splitting (baseline) or merging (follow-up)
// and propagates to the opposite endpoints of those edges, a 1-1 pair is
// persistent. A node's own degree rule wins over a label propagated to it.
EvolutionGraph label_events(int n0, int n1, const std::vector<GraphEdge>& edges);

struct MatchResult {
  TransportPlan plan;
  EvolutionGraph graph;
  CostBreakdown cost;
  AsymmetryPrior prior;
};

// Full pipeline for one case: cost, prior, solve, prune, label. Empty sides
// short-circuit: no baseline lesions makes every follow-up lesion new, no
// follow-up lesions makes every baseline lesion disappearing; the prior then
// carries rho = nan (undefined ratio) or rho = 0 respectively.
MatchResult match_case(const LesionSet& set0, const LesionSet& set1, const MatchConfig& cfg);

}  // namespace lematch
