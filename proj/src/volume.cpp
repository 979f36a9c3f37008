#include "lematch/volume.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "lematch/errors.hpp"

namespace lematch {

namespace {

void check_grid(const std::array<int, 3>& dims, const Eigen::Vector3d& spacing) {
  for (int k = 0; k < 3; ++k) {
    if (dims[static_cast<size_t>(k)] <= 0)
      throw InputError("volume dims must be positive along every axis");
    if (!(spacing[k] > 0.0)) throw InputError("voxel spacing must be positive");
  }
}

}  // namespace

Volume3D make_volume(const std::array<int, 3>& dims, const Eigen::Vector3d& spacing,
                     const Eigen::Vector3d& origin) {
  check_grid(dims, spacing);
  Volume3D vol;
  vol.dims = dims;
  vol.spacing = spacing;
  vol.origin = origin;
  vol.data = Eigen::ArrayXd::Zero(vol.voxel_count());
  return vol;
}

DeformationField make_field(const std::array<int, 3>& dims, const Eigen::Vector3d& spacing,
                            const Eigen::Vector3d& origin) {
  check_grid(dims, spacing);
  DeformationField field;
  field.dims = dims;
  field.spacing = spacing;
  field.origin = origin;
  field.data = Eigen::Matrix3Xd::Zero(3, field.voxel_count());
  return field;
}

bool same_grid(const Volume3D& a, const Volume3D& b) {
  return a.dims == b.dims && (a.spacing - b.spacing).cwiseAbs().maxCoeff() < 1e-9 &&
         (a.origin - b.origin).cwiseAbs().maxCoeff() < 1e-9;
}

namespace {

std::vector<LesionInstance> components_impl(const Volume3D& mask, Volume3D* labels) {
  if (mask.data.size() != mask.voxel_count())
    throw InputError("mask data length does not match its dims");
  if (!((mask.data == 0.0) || (mask.data == 1.0)).all())
    throw InputError("connected_components expects a {0,1} mask");

  const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
  const double voxel_volume = mask.spacing.prod();
  std::vector<char> visited(static_cast<size_t>(mask.voxel_count()), 0);
  std::vector<LesionInstance> lesions;

  std::deque<std::array<int, 3>> queue;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const Eigen::Index seed = mask.index(x, y, z);
        if (mask.data[seed] == 0.0 || visited[static_cast<size_t>(seed)]) continue;

        const double label_value = static_cast<double>(lesions.size()) + 1.0;
        Eigen::Vector3d index_sum = Eigen::Vector3d::Zero();
        long count = 0;
        visited[static_cast<size_t>(seed)] = 1;
        queue.push_back({x, y, z});
        while (!queue.empty()) {
          const auto [cx, cy, cz] = queue.front();
          queue.pop_front();
          if (labels) labels->data[labels->index(cx, cy, cz)] = label_value;
          index_sum += Eigen::Vector3d(cx, cy, cz);
          ++count;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const int px = cx + dx, py = cy + dy, pz = cz + dz;
                if (px < 0 || px >= nx || py < 0 || py >= ny || pz < 0 || pz >= nz) continue;
                const Eigen::Index p = mask.index(px, py, pz);
                if (mask.data[p] == 0.0 || visited[static_cast<size_t>(p)]) continue;
                visited[static_cast<size_t>(p)] = 1;
                queue.push_back({px, py, pz});
              }
        }
        const Eigen::Vector3d centroid =
            mask.origin + (mask.spacing.array() * (index_sum / double(count)).array()).matrix();
        lesions.push_back(
            make_lesion(static_cast<int>(lesions.size()), centroid, double(count) * voxel_volume));
      }
  return lesions;
}

}  // namespace

std::vector<LesionInstance> connected_components(const Volume3D& mask) {
  return components_impl(mask, nullptr);
}

std::vector<LesionInstance> connected_components(const Volume3D& mask, Volume3D& labels) {
  labels = make_volume(mask.dims, mask.spacing, mask.origin);
  return components_impl(mask, &labels);
}

Volume3D jacobian_determinant(const DeformationField& field) {
  if (field.data.cols() != field.voxel_count())
    throw InputError("deformation field data length does not match its dims");
  for (int k = 0; k < 3; ++k)
    if (field.dims[static_cast<size_t>(k)] < 2)
      throw InputError("jacobian_determinant: grid too small, every dim must be >= 2");

  Volume3D jac = make_volume(field.dims, field.spacing, field.origin);
  const int nx = field.dims[0], ny = field.dims[1], nz = field.dims[2];
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        Eigen::Matrix3d grad;  // column k holds du/dx_k
        const std::array<int, 3> idx{x, y, z};
        for (int k = 0; k < 3; ++k) {
          std::array<int, 3> lo = idx, hi = idx;
          const int n_k = field.dims[static_cast<size_t>(k)];
          double step = field.spacing[k];
          if (idx[static_cast<size_t>(k)] == 0) {
            ++hi[static_cast<size_t>(k)];
          } else if (idx[static_cast<size_t>(k)] == n_k - 1) {
            --lo[static_cast<size_t>(k)];
          } else {
            ++hi[static_cast<size_t>(k)];
            --lo[static_cast<size_t>(k)];
            step *= 2.0;
          }
          grad.col(k) = (field.data.col(field.index(hi[0], hi[1], hi[2])) -
                         field.data.col(field.index(lo[0], lo[1], lo[2]))) /
                        step;
        }
        jac(x, y, z) = (Eigen::Matrix3d::Identity() + grad).determinant();
      }
  return jac;
}

double lesion_trust(const Volume3D& lesion_mask, const Volume3D& jac, double beta,
                    int dilation_radius, std::pair<double, double> clip) {
  if (!same_grid(lesion_mask, jac))
    throw InputError("lesion_trust: mask and jacobian grids differ");
  if (lesion_mask.data.size() != lesion_mask.voxel_count())
    throw InputError("mask data length does not match its dims");
  if (!((lesion_mask.data == 0.0) || (lesion_mask.data == 1.0)).all())
    throw InputError("lesion_trust expects a {0,1} mask");
  if (!(clip.first > 0.0) || !(clip.second >= clip.first))
    throw ConfigError("jacobian clip range must satisfy 0 < jmin <= jmax");
  if (!(beta > 0.0)) throw ConfigError("trust sharpness beta must be > 0");
  if (dilation_radius < 0) throw ConfigError("dilation radius must be >= 0");
  if ((lesion_mask.data == 0.0).all()) throw InputError("lesion_trust: empty lesion mask");

  // ball offsets within dilation_radius, squared Euclidean in voxel units
  std::vector<std::array<int, 3>> ball;
  for (int dz = -dilation_radius; dz <= dilation_radius; ++dz)
    for (int dy = -dilation_radius; dy <= dilation_radius; ++dy)
      for (int dx = -dilation_radius; dx <= dilation_radius; ++dx)
        if (dx * dx + dy * dy + dz * dz <= dilation_radius * dilation_radius)
          ball.push_back({dx, dy, dz});

  const int nx = lesion_mask.dims[0], ny = lesion_mask.dims[1], nz = lesion_mask.dims[2];
  std::vector<char> region(static_cast<size_t>(lesion_mask.voxel_count()), 0);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        if (lesion_mask(x, y, z) == 0.0) continue;
        for (const auto& [dx, dy, dz] : ball) {
          const int px = x + dx, py = y + dy, pz = z + dz;
          if (px < 0 || px >= nx || py < 0 || py >= ny || pz < 0 || pz >= nz) continue;
          region[static_cast<size_t>(lesion_mask.index(px, py, pz))] = 1;
        }
      }

  double total = 0.0;
  long count = 0;
  for (Eigen::Index v = 0; v < lesion_mask.voxel_count(); ++v) {
    if (!region[static_cast<size_t>(v)]) continue;
    const double j = std::clamp(jac.data[v], clip.first, clip.second);
    total += std::exp(-beta * std::abs(std::log(j)));
    ++count;
  }
  return total / double(count);
}

double lesion_appearance(const Volume3D& vol0, const Volume3D& vol1_warped,
                         const Eigen::Vector3d& centroid_mm, int patch_radius) {
  if (patch_radius < 1) throw ConfigError("patch radius must be >= 1");
  const Volume3D* vols[2] = {&vol0, &vol1_warped};
  std::array<std::array<int, 3>, 2> centers{};
  for (int v = 0; v < 2; ++v) {
    const Volume3D& vol = *vols[v];
    if (vol.data.size() != vol.voxel_count())
      throw InputError("volume data length does not match its dims");
    for (int k = 0; k < 3; ++k) {
      const int c =
          static_cast<int>(std::llround((centroid_mm[k] - vol.origin[k]) / vol.spacing[k]));
      if (c < 0 || c >= vol.dims[static_cast<size_t>(k)])
        throw InputError("lesion_appearance: centroid falls outside a volume");
      centers[static_cast<size_t>(v)][static_cast<size_t>(k)] = c;
    }
  }

  // common symmetric half-widths keeping both patches in bounds
  std::array<int, 3> half{};
  for (int k = 0; k < 3; ++k) {
    int h = patch_radius;
    for (int v = 0; v < 2; ++v) {
      const int c = centers[static_cast<size_t>(v)][static_cast<size_t>(k)];
      h = std::min({h, c, vols[v]->dims[static_cast<size_t>(k)] - 1 - c});
    }
    half[static_cast<size_t>(k)] = h;
  }

  const Eigen::Index patch_size =
      Eigen::Index(2 * half[0] + 1) * (2 * half[1] + 1) * (2 * half[2] + 1);
  Eigen::ArrayXd p0(patch_size), p1(patch_size);
  for (int v = 0; v < 2; ++v) {
    Eigen::ArrayXd& p = v == 0 ? p0 : p1;
    const Volume3D& vol = *vols[v];
    const auto& c = centers[static_cast<size_t>(v)];
    Eigen::Index w = 0;
    for (int dz = -half[2]; dz <= half[2]; ++dz)
      for (int dy = -half[1]; dy <= half[1]; ++dy)
        for (int dx = -half[0]; dx <= half[0]; ++dx)
          p[w++] = vol(c[0] + dx, c[1] + dy, c[2] + dz);
  }

  const Eigen::ArrayXd d0 = p0 - p0.mean();
  const Eigen::ArrayXd d1 = p1 - p1.mean();
  const double flat0 = 1e-12 * (1.0 + std::abs(p0.mean()));
  const double flat1 = 1e-12 * (1.0 + std::abs(p1.mean()));
  if (d0.abs().maxCoeff() <= flat0 || d1.abs().maxCoeff() <= flat1) return 0.5;
  const double z = (d0 * d1).sum() / std::sqrt(d0.square().sum() * d1.square().sum());
  return 0.5 * (std::clamp(z, -1.0, 1.0) + 1.0);
}

}  // namespace lematch
