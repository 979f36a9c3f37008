#pragma once

#include "lematch/types.hpp"

// Tumor-load asymmetry prior: the burden ratio rho = total follow-up volume /
// total baseline volume softens exactly one marginal penalty. rho > 1 lowers
// mu (mass creation gets cheaper), rho < 1 lowers lambda (mass destruction
// gets cheaper), rho == 1 changes nothing.

namespace lematch {

struct AsymmetryPrior {
  double rho = 1.0;
  double lambda_eff = 1.0;
  double mu_eff = 1.0;
};

// Sum of follow-up volumes over sum of baseline volumes; 0 when the follow-up
// set is empty. Throws when the baseline set is empty (ratio undefined).
double tumor_load_ratio(const LesionSet& set0, const LesionSet& set1);

// lambda_eff = lambda_base * min(rho, 1)^gamma, mu_eff = mu_base * min(1/rho, 1)^gamma,
// each clamped below at 0.01 * its base so the solver stays well-conditioned.
std::pair<double, double> effective_penalties(double rho, double lambda_base, double mu_base,
                                              double gamma);

AsymmetryPrior make_prior(const LesionSet& set0, const LesionSet& set1, const MatchConfig& cfg);

}  // namespace lematch
