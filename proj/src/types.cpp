#include "lematch/types.hpp"

#include <set>

namespace lematch {

LesionInstance make_lesion(int id, const Vector3d& centroid_mm, double volume_mm3,
                           std::optional<double> trust, std::optional<double> appearance) {
  LesionInstance lesion;
  lesion.id = id;
  lesion.centroid = centroid_mm;
  lesion.volume = volume_mm3;
  lesion.radius = equivalent_radius(volume_mm3);
  for (const auto& [value, name] :
       {std::pair{trust, "trust"}, std::pair{appearance, "appearance"}}) {
    if (value && !(*value >= 0.0 && *value <= 1.0))
      throw InputError(std::string(name) + " of lesion " + std::to_string(id) +
                       " must lie in [0,1], got " + std::to_string(*value));
  }
  lesion.trust = trust;
  lesion.appearance = appearance;
  return lesion;
}

double LesionSet::total_volume() const {
  double total = 0.0;
  for (const auto& lesion : lesions) total += lesion.volume;
  return total;
}

LesionSet make_lesion_set(Timepoint timepoint, std::vector<LesionInstance> lesions) {
  std::set<int> ids;
  for (const auto& lesion : lesions) {
    if (!ids.insert(lesion.id).second)
      throw InputError("duplicate lesion id " + std::to_string(lesion.id) + " within one timepoint");
  }
  return LesionSet{timepoint, std::move(lesions)};
}

std::pair<VectorXd, VectorXd> normalize_masses(const LesionSet& set0, const LesionSet& set1) {
  if (set0.empty() || set1.empty())
    throw InputError("normalize_masses requires non-empty lesion sets on both sides");
  auto mass_vector = [](const LesionSet& set) {
    VectorXd mass(set.size());
    for (int i = 0; i < set.size(); ++i) mass[i] = set.lesions[i].volume;
    return VectorXd(mass / mass.sum());
  };
  return {mass_vector(set0), mass_vector(set1)};
}

void MatchConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(lambda_base > 0.0)) fail("lambda_base must be > 0");
  if (!(mu_base > 0.0)) fail("mu_base must be > 0");
  if (!(w_jacobian >= 0.0 && w_jacobian <= 1.0)) fail("w_jacobian must lie in [0,1]");
  if (!(w_appearance >= 0.0 && w_appearance < 1.0)) fail("w_appearance must lie in [0,1)");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(distance_cap > 0.0)) fail("distance_cap must be > 0");
  if (!(tau_row > 0.0 && tau_row <= 1.0)) fail("tau_row must lie in (0,1]");
  if (!(tau_col > 0.0 && tau_col <= 1.0)) fail("tau_col must lie in (0,1]");
  if (!(prune_floor >= 0.0)) fail("prune_floor must be >= 0");
  if (!(rho_gamma >= 0.0)) fail("rho_gamma must be >= 0");
  if (max_iters < 1) fail("max_iters must be a positive integer");
  if (!(tol > 0.0)) fail("tol must be > 0");
  if (patch_radius < 1) fail("patch_radius must be >= 1");
  if (dilation_radius < 0) fail("dilation_radius must be >= 0");
}

}  // namespace lematch
