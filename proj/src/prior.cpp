#include "lematch/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lematch/errors.hpp"

namespace lematch {

double tumor_load_ratio(const LesionSet& set0, const LesionSet& set1) {
  if (set0.empty())
    throw InputError("tumor load ratio is undefined for an empty baseline set");
  return set1.total_volume() / set0.total_volume();
}

std::pair<double, double> effective_penalties(double rho, double lambda_base, double mu_base,
                                              double gamma) {
  if (!(lambda_base > 0.0) || !(mu_base > 0.0))
    throw ConfigError("marginal penalty bases must be > 0");
  if (rho < 0.0 || gamma < 0.0)
    throw InputError("effective_penalties expects rho >= 0 and gamma >= 0");
  // pow(0, 0) == 1, so gamma == 0 disables the prior even at rho == 0
  const double lambda_eff = lambda_base * std::pow(std::min(rho, 1.0), gamma);
  const double inv = rho > 0.0 ? 1.0 / rho : std::numeric_limits<double>::infinity();
  const double mu_eff = mu_base * std::pow(std::min(inv, 1.0), gamma);
  return {std::max(lambda_eff, 0.01 * lambda_base), std::max(mu_eff, 0.01 * mu_base)};
}

AsymmetryPrior make_prior(const LesionSet& set0, const LesionSet& set1, const MatchConfig& cfg) {
  AsymmetryPrior prior;
  prior.rho = tumor_load_ratio(set0, set1);
  std::tie(prior.lambda_eff, prior.mu_eff) =
      effective_penalties(prior.rho, cfg.lambda_base, cfg.mu_base, cfg.rho_gamma);
  return prior;
}

}  // namespace lematch
