#include "lematch/cost.hpp"

#include <algorithm>

#include "lematch/errors.hpp"

namespace lematch {

double geometric_cost(const LesionInstance& i, const LesionInstance& j, double cap) {
  const double dist = (i.centroid - j.centroid).norm();
  return std::min(dist / (i.radius + j.radius), cap);
}

double pair_trust(double trust_i, double trust_j) { return 0.5 * (trust_i + trust_j); }

double combined_cost(double c_geom, double tau, double s_bar, double w_jacobian,
                     double w_appearance) {
  return c_geom * (1.0 + w_jacobian * (1.0 - tau)) * (1.0 - w_appearance * s_bar);
}

CostBreakdown build_cost_matrix(const LesionSet& set0, const LesionSet& set1,
                                const MatchConfig& cfg) {
  if (set0.empty() || set1.empty())
    throw InputError("build_cost_matrix requires non-empty lesion sets on both sides");
  const int n = set0.size();
  const int m = set1.size();
  CostBreakdown out;
  out.c_geom.resize(n, m);
  out.tau.resize(n, m);
  out.s_bar.resize(n, m);
  out.combined.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const LesionInstance& li = set0.lesions[static_cast<size_t>(i)];
    const double trust_i = li.trust.value_or(1.0);
    const double app_i = li.appearance.value_or(0.5);
    for (int j = 0; j < m; ++j) {
      const LesionInstance& lj = set1.lesions[static_cast<size_t>(j)];
      out.c_geom(i, j) = geometric_cost(li, lj, cfg.distance_cap);
      out.tau(i, j) = pair_trust(trust_i, lj.trust.value_or(1.0));
      out.s_bar(i, j) = 0.5 * (app_i + lj.appearance.value_or(0.5));
      out.combined(i, j) = combined_cost(out.c_geom(i, j), out.tau(i, j), out.s_bar(i, j),
                                         cfg.w_jacobian, cfg.w_appearance);
    }
  }
  return out;
}

}  // namespace lematch
