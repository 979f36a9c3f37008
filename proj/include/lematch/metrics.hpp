#pragma once

#include <Eigen/Dense>

#include <set>
#include <utility>

#include "lematch/graph.hpp"

// Three evaluation levels against a reference graph: edge detection,
// lesion-state classification, connected-component topology.
//
// Conventions: empty-vs-empty comparisons score 1.0. The state confusion is
// populated by every baseline lesion plus each follow-up lesion whose
// reference or predicted state is "new" (a missed match then shows up as one
// disappearing error in baseline space and one new error in follow-up space).
// Rows index the reference state, columns the predicted state, in the order
// persistent, disappearing, new, merging, splitting. Weighted metrics weight
// per-class precision/recall by reference class support.

namespace lematch {

inline constexpr int kNumEventLabels = 5;

using ConfusionMatrix = Eigen::Matrix<long, kNumEventLabels, kNumEventLabels>;
using EdgePairSet = std::set<std::pair<int, int>>;

struct EdgeMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct StateMetrics {
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
};

struct EvalReport {
  double edge_precision = 0.0;
  double edge_recall = 0.0;
  double edge_f1 = 0.0;
  double state_weighted_precision = 0.0;
  double state_weighted_recall = 0.0;
  ConfusionMatrix state_confusion = ConfusionMatrix::Zero();
  double component_f1 = 0.0;
};

EdgePairSet edge_set(const EvolutionGraph& graph);

EdgeMetrics edge_metrics(const EdgePairSet& predicted, const EdgePairSet& reference);

StateMetrics state_metrics(const EvolutionGraph& predicted, const EvolutionGraph& reference);

// A predicted component counts as correct iff some reference component has
// exactly the same node set and edge set; isolated nodes form components.
double component_f1(const EvolutionGraph& predicted, const EvolutionGraph& reference);

EvalReport evaluate(const EvolutionGraph& predicted, const EvolutionGraph& reference);

}  // namespace lematch
