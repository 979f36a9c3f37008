#pragma once

#include <Eigen/Dense>

#include <array>
#include <utility>
#include <vector>

#include "lematch/types.hpp"

// Dense 3D grids in x-fastest order plus the operations that turn masks, CT
// intensities, and deformation fields into lesion lists with trust and
// appearance scores. All coordinates are physical millimetres:
// position = origin + spacing .* voxel_index.

namespace lematch {

struct Volume3D {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::ArrayXd data;  // dims[0]*dims[1]*dims[2] scalars, x-fastest

  Eigen::Index voxel_count() const {
    return Eigen::Index(dims[0]) * dims[1] * dims[2];
  }
  Eigen::Index index(int x, int y, int z) const {
    return x + Eigen::Index(dims[0]) * (y + Eigen::Index(dims[1]) * z);
  }
  double operator()(int x, int y, int z) const { return data[index(x, y, z)]; }
  double& operator()(int x, int y, int z) { return data[index(x, y, z)]; }
};

struct DeformationField {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3Xd data;  // one displacement column (mm) per voxel, x-fastest

  Eigen::Index voxel_count() const {
    return Eigen::Index(dims[0]) * dims[1] * dims[2];
  }
  Eigen::Index index(int x, int y, int z) const {
    return x + Eigen::Index(dims[0]) * (y + Eigen::Index(dims[1]) * z);
  }
};

// Zero-filled grids; throws on non-positive dims or spacing.
Volume3D make_volume(const std::array<int, 3>& dims, const Eigen::Vector3d& spacing,
                     const Eigen::Vector3d& origin);
DeformationField make_field(const std::array<int, 3>& dims, const Eigen::Vector3d& spacing,
                            const Eigen::Vector3d& origin);

// Grid metadata equality (dims exact, spacing and origin to tight tolerance).
bool same_grid(const Volume3D& a, const Volume3D& b);

// One LesionInstance per 26-connected component of a {0,1} mask, ordered by
// first-encountered voxel in scan order, ids 0..n-1. Centroid is the mean
// voxel position in mm, volume is voxel count times the spacing product.
std::vector<LesionInstance> connected_components(const Volume3D& mask);

// Same traversal, additionally filling `labels` on the mask grid: 0 for
// background, id + 1 on each lesion's voxels.
std::vector<LesionInstance> connected_components(const Volume3D& mask, Volume3D& labels);

// Per-voxel determinant of d(x+u)/dx via spacing-aware central differences,
// one-sided on boundary slices. Requires every dim >= 2.
Volume3D jacobian_determinant(const DeformationField& field);

// Mean over the dilated lesion mask of exp(-beta * |log(clamp(J, clip))|).
// Dilation is by a discrete Euclidean ball measured in voxels.
double lesion_trust(const Volume3D& lesion_mask, const Volume3D& jac, double beta,
                    int dilation_radius, std::pair<double, double> clip);

// ZNCC of cubic patches centered at the voxel nearest centroid_mm in each
// volume, rescaled from [-1,1] to [0,1]. Patches are shrunk symmetrically so
// both stay in bounds with a common shape; a zero-variance patch gives 0.5.
double lesion_appearance(const Volume3D& vol0, const Volume3D& vol1_warped,
                         const Eigen::Vector3d& centroid_mm, int patch_radius);

}  // namespace lematch
