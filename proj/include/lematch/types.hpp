#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lematch/errors.hpp"

namespace lematch {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

enum class Timepoint { Baseline, Followup };

// Radius of the sphere whose volume equals the given lesion volume.
inline double equivalent_radius(double volume_mm3) {
  if (!(volume_mm3 > 0.0))
    throw InputError("lesion volume must be positive, got " + std::to_string(volume_mm3));
  return std::cbrt(3.0 * volume_mm3 / (4.0 * std::numbers::pi));
}

// One connected lesion instance. Identity is the id, geometry is the centroid
// (mm, physical coordinates) plus the sphere-equivalent radius derived from the
// volume. trust/appearance are optional per-lesion reliability cues in [0,1].
struct LesionInstance {
  int id = 0;
  Vector3d centroid = Vector3d::Zero();
  double volume = 0.0;  // mm^3
  double radius = 0.0;  // mm, always equivalent_radius(volume)
  std::optional<double> trust;
  std::optional<double> appearance;
};

LesionInstance make_lesion(int id, const Vector3d& centroid_mm, double volume_mm3,
                           std::optional<double> trust = std::nullopt,
                           std::optional<double> appearance = std::nullopt);

// Ordered lesion list for one timepoint. The list position, not the id, is the
// row/column index used by every matrix downstream; ids exist for I/O only.
struct LesionSet {
  Timepoint timepoint = Timepoint::Baseline;
  std::vector<LesionInstance> lesions;

  int size() const { return static_cast<int>(lesions.size()); }
  bool empty() const { return lesions.empty(); }
  double total_volume() const;
};

// Validates id uniqueness.
LesionSet make_lesion_set(Timepoint timepoint, std::vector<LesionInstance> lesions);

// Per-timepoint mass vectors, proportional to lesion volume, each summing to 1.
std::pair<VectorXd, VectorXd> normalize_masses(const LesionSet& set0, const LesionSet& set1);

struct MatchConfig {
  double epsilon = 0.05;       // entropic regularization
  double lambda_base = 1.0;    // baseline-marginal KL weight
  double mu_base = 1.0;        // follow-up-marginal KL weight
  double w_jacobian = 0.5;     // registration-trust weight, [0,1]
  double w_appearance = 0.3;   // appearance weight, [0,1)
  double beta = 1.0;           // trust sharpness
  double distance_cap = 10.0;  // max normalized geometric cost
  double tau_row = 0.5;        // row pruning fraction, (0,1]
  double tau_col = 0.5;        // column pruning fraction, (0,1]
  double prune_floor = 1e-6;   // absolute plan-mass floor
  double rho_gamma = 1.0;      // asymmetry exponent
  int max_iters = 2000;
  double tol = 1e-8;
  int patch_radius = 8;     // voxels
  int dilation_radius = 2;  // voxels

  void validate() const;  // throws ConfigError naming the offending field
};

}  // namespace lematch
