#include "lematch/baselines.hpp"

#include <Eigen/Dense>

#include <functional>
#include <set>
#include <vector>

#include "lematch/cost.hpp"
#include "lematch/errors.hpp"

namespace lematch {

namespace {

EvolutionGraph nearest_within_gate(const LesionSet& set0, const LesionSet& set1,
                                   double threshold,
                                   const std::function<double(int, int)>& metric) {
  if (!(threshold > 0.0)) throw ConfigError("baseline gate threshold must be > 0");
  const int n0 = set0.size();
  const int n1 = set1.size();
  std::set<std::pair<int, int>> pairs;
  for (int i = 0; i < n0; ++i) {
    int best = -1;
    double best_d = 0.0;
    for (int j = 0; j < n1; ++j) {
      const double d = metric(i, j);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    if (best >= 0 && best_d < threshold) pairs.insert({i, best});
  }
  for (int j = 0; j < n1; ++j) {
    int best = -1;
    double best_d = 0.0;
    for (int i = 0; i < n0; ++i) {
      const double d = metric(i, j);
      if (best < 0 || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    if (best >= 0 && best_d < threshold) pairs.insert({best, j});
  }
  std::vector<GraphEdge> edges;
  for (const auto& [i, j] : pairs) edges.push_back({i, j, {}});
  return label_events(n0, n1, edges);
}

}  // namespace

EvolutionGraph distance_bipartite(const LesionSet& set0, const LesionSet& set1,
                                  double threshold_mm) {
  return nearest_within_gate(set0, set1, threshold_mm, [&](int i, int j) {
    return (set0.lesions[static_cast<size_t>(i)].centroid -
            set1.lesions[static_cast<size_t>(j)].centroid)
        .norm();
  });
}

EvolutionGraph normdist_bipartite(const LesionSet& set0, const LesionSet& set1,
                                  double norm_threshold, double cap) {
  if (!(cap > 0.0)) throw ConfigError("distance cap must be > 0");
  return nearest_within_gate(set0, set1, norm_threshold, [&](int i, int j) {
    return geometric_cost(set0.lesions[static_cast<size_t>(i)],
                          set1.lesions[static_cast<size_t>(j)], cap);
  });
}

}  // namespace lematch
