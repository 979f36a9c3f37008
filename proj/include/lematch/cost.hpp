#pragma once

#include <Eigen/Dense>

#include "lematch/types.hpp"

// Pairwise cost C_ij = c_geom * (1 + w_J (1 - tau)) * (1 - w_S * s_bar):
// size-normalized centroid distance modulated by registration trust and
// appearance consistency.

namespace lematch {

struct CostBreakdown {
  Eigen::MatrixXd c_geom;    // entries in [0, distance_cap]
  Eigen::MatrixXd tau;       // pairwise mean trust, entries in [0,1]
  Eigen::MatrixXd s_bar;     // pairwise mean appearance, entries in [0,1]
  Eigen::MatrixXd combined;  // entries >= 0
};

// min(||x_i - x_j|| / (r_i + r_j), cap)
double geometric_cost(const LesionInstance& i, const LesionInstance& j, double cap);

// arithmetic mean of two per-lesion trust scores
double pair_trust(double trust_i, double trust_j);

double combined_cost(double c_geom, double tau, double s_bar, double w_jacobian,
                     double w_appearance);

// Missing per-lesion trust defaults to 1.0, missing appearance to 0.5.
CostBreakdown build_cost_matrix(const LesionSet& set0, const LesionSet& set1,
                                const MatchConfig& cfg);

}  // namespace lematch
