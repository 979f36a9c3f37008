#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "lematch/errors.hpp"
#include "lematch/rng.hpp"
#include "lematch/volume.hpp"

using Eigen::Vector3d;
using lematch::connected_components;
using lematch::DeformationField;
using lematch::jacobian_determinant;
using lematch::lesion_appearance;
using lematch::lesion_trust;
using lematch::make_field;
using lematch::make_volume;
using lematch::Volume3D;

namespace {

// u(x) = A x + t evaluated at each voxel's physical position
DeformationField affine_field(const std::array<int, 3>& dims, const Vector3d& spacing,
                              const Vector3d& origin, const Eigen::Matrix3d& a,
                              const Vector3d& t) {
  DeformationField f = make_field(dims, spacing, origin);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const Vector3d pos = origin + spacing.cwiseProduct(Vector3d(x, y, z));
        f.data.col(f.index(x, y, z)) = a * pos + t;
      }
  return f;
}

}  // namespace

TEST_CASE("connected components hand cases") {
  SUBCASE("single voxel lesion") {
    Volume3D mask = make_volume({6, 6, 6}, {1, 1, 1}, {0, 0, 0});
    mask(2, 3, 4) = 1.0;
    const auto lesions = connected_components(mask);
    REQUIRE(lesions.size() == 1);
    CHECK(lesions[0].centroid.isApprox(Vector3d(2, 3, 4)));
    CHECK(lesions[0].volume == doctest::Approx(1.0));
    CHECK(lesions[0].id == 0);
  }
  SUBCASE("diagonal corner contact is one component") {
    Volume3D mask = make_volume({4, 4, 4}, {1, 1, 1}, {0, 0, 0});
    mask(1, 1, 1) = 1.0;
    mask(2, 2, 2) = 1.0;
    CHECK(connected_components(mask).size() == 1);
  }
  SUBCASE("all zero mask") {
    CHECK(connected_components(make_volume({3, 3, 3}, {1, 1, 1}, {0, 0, 0})).empty());
  }
  SUBCASE("spacing and origin are honored") {
    Volume3D mask = make_volume({4, 4, 4}, {2.0, 0.5, 1.0}, {10, 20, 30});
    mask(1, 2, 3) = 1.0;
    const auto lesions = connected_components(mask);
    REQUIRE(lesions.size() == 1);
    CHECK(lesions[0].centroid.isApprox(Vector3d(12, 21, 33)));
    CHECK(lesions[0].volume == doctest::Approx(1.0));  // voxel volume 2*0.5*1
  }
  SUBCASE("two separated lesions ordered by scan order") {
    Volume3D mask = make_volume({8, 8, 8}, {1, 1, 1}, {0, 0, 0});
    // second-in-space lesion appears first in scan order (smaller z)
    mask(6, 0, 0) = 1.0;
    mask(0, 0, 5) = 1.0;
    mask(1, 0, 5) = 1.0;
    const auto lesions = connected_components(mask);
    REQUIRE(lesions.size() == 2);
    CHECK(lesions[0].centroid.isApprox(Vector3d(6, 0, 0)));
    CHECK(lesions[1].centroid.isApprox(Vector3d(0.5, 0, 5)));
    CHECK(lesions[0].volume + lesions[1].volume == doctest::Approx(3.0));
  }
  SUBCASE("total volume equals voxel count times voxel volume exactly") {
    lematch::RandomStream rng(13);
    Volume3D mask = make_volume({10, 9, 8}, {1.5, 1.0, 2.0}, {0, 0, 0});
    long nonzero = 0;
    for (Eigen::Index v = 0; v < mask.voxel_count(); ++v)
      if (rng.canonical() < 0.2) {
        mask.data[v] = 1.0;
        ++nonzero;
      }
    const auto lesions = connected_components(mask);
    double total = 0.0;
    for (const auto& l : lesions) total += l.volume;
    CHECK(total == doctest::Approx(double(nonzero) * 3.0).epsilon(1e-12));
  }
  SUBCASE("non-binary mask is rejected") {
    Volume3D mask = make_volume({2, 2, 2}, {1, 1, 1}, {0, 0, 0});
    mask(0, 0, 0) = 0.5;
    CHECK_THROWS_AS(connected_components(mask), lematch::InputError);
  }
}

TEST_CASE("connected components can emit a label volume") {
  Volume3D mask = make_volume({8, 8, 8}, {1, 1, 1}, {0, 0, 0});
  // two separated blobs in scan order: a 2x2x1 plate, then a single voxel
  mask(1, 1, 1) = mask(2, 1, 1) = mask(1, 2, 1) = mask(2, 2, 1) = 1.0;
  mask(6, 6, 6) = 1.0;

  Volume3D labels;
  const auto lesions = connected_components(mask, labels);
  REQUIRE(lesions.size() == 2);
  CHECK(labels.dims == mask.dims);
  CHECK(labels.spacing == mask.spacing);

  // labels are id + 1 exactly on each component, 0 elsewhere
  CHECK((labels.data > 0.0).count() == 5);
  CHECK(labels(1, 1, 1) == 1.0);
  CHECK(labels(2, 2, 1) == 1.0);
  CHECK(labels(6, 6, 6) == 2.0);
  CHECK(labels(0, 0, 0) == 0.0);
  for (int k = 0; k < 2; ++k) {
    const double want = lesions[static_cast<std::size_t>(k)].volume / mask.spacing.prod();
    CHECK(static_cast<double>((labels.data == k + 1.0).count()) == want);
  }
}

TEST_CASE("jacobian determinant hand cases") {
  const std::array<int, 3> dims{5, 6, 7};
  const Vector3d spacing(1.2, 0.8, 2.0);
  const Vector3d origin(-3, 4, 1);

  SUBCASE("zero field gives unit determinant") {
    const auto jac = jacobian_determinant(make_field(dims, spacing, origin));
    CHECK((jac.data - 1.0).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("uniform expansion") {
    const auto f =
        affine_field(dims, spacing, origin, 0.1 * Eigen::Matrix3d::Identity(), {0, 0, 0});
    const auto jac = jacobian_determinant(f);
    CHECK((jac.data - 1.331).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("pure translation") {
    const auto f =
        affine_field(dims, spacing, origin, Eigen::Matrix3d::Zero(), {5.0, -2.0, 7.0});
    const auto jac = jacobian_determinant(f);
    CHECK((jac.data - 1.0).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("random affine fields match the closed form at interior voxels") {
    lematch::RandomStream rng(21);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::Matrix3d a;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = rng.uniform(-0.2, 0.2);
      const Vector3d t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
      const auto jac = jacobian_determinant(affine_field(dims, spacing, origin, a, t));
      const double expected = (Eigen::Matrix3d::Identity() + a).determinant();
      for (int z = 1; z < dims[2] - 1; ++z)
        for (int y = 1; y < dims[1] - 1; ++y)
          for (int x = 1; x < dims[0] - 1; ++x)
            CHECK(std::abs(jac(x, y, z) - expected) < 1e-10);
    }
  }
  SUBCASE("degenerate grid is rejected") {
    CHECK_THROWS_AS(jacobian_determinant(make_field({1, 5, 5}, {1, 1, 1}, {0, 0, 0})),
                    lematch::InputError);
  }
}

TEST_CASE("lesion trust") {
  const std::array<int, 3> dims{9, 9, 9};
  Volume3D mask = make_volume(dims, {1, 1, 1}, {0, 0, 0});
  mask(4, 4, 4) = 1.0;

  SUBCASE("unit jacobian gives full trust") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(1.0);
    CHECK(lesion_trust(mask, jac, 1.0, 2, {0.05, 20.0}) == doctest::Approx(1.0));
  }
  SUBCASE("constant expansion and contraction score symmetrically") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(std::exp(1.0));
    const double expanded = lesion_trust(mask, jac, 1.0, 2, {0.05, 20.0});
    CHECK(expanded == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    jac.data.setConstant(std::exp(-1.0));
    CHECK(lesion_trust(mask, jac, 1.0, 2, {0.05, 20.0}) ==
          doctest::Approx(expanded).epsilon(1e-12));
  }
  SUBCASE("clipping bounds the penalty") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(1000.0);
    CHECK(lesion_trust(mask, jac, 1.0, 0, {0.05, 20.0}) ==
          doctest::Approx(std::exp(-std::log(20.0))).epsilon(1e-12));
  }
  SUBCASE("trust is non-increasing in beta when J differs from 1") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(1.5);
    double prev = 1.0;
    for (const double beta : {0.5, 1.0, 2.0, 4.0}) {
      const double t = lesion_trust(mask, jac, beta, 2, {0.05, 20.0});
      CHECK(t <= prev);
      prev = t;
    }
  }
  SUBCASE("dilation pulls in the surrounding ring") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(std::exp(1.0));  // distrusted everywhere
    jac(4, 4, 4) = 1.0;                   // except at the lesion voxel itself
    CHECK(lesion_trust(mask, jac, 1.0, 0, {0.05, 20.0}) == doctest::Approx(1.0));
    const double dilated = lesion_trust(mask, jac, 1.0, 1, {0.05, 20.0});
    // ball of radius 1 has 7 voxels: 6 neighbors at exp(-1), center at 1
    CHECK(dilated == doctest::Approx((1.0 + 6.0 * std::exp(-1.0)) / 7.0).epsilon(1e-12));
  }
  SUBCASE("input validation") {
    Volume3D jac = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    jac.data.setConstant(1.0);
    Volume3D empty_mask = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    CHECK_THROWS_AS(lesion_trust(empty_mask, jac, 1.0, 1, {0.05, 20.0}), lematch::InputError);
    Volume3D other_grid = make_volume({3, 3, 3}, {1, 1, 1}, {0, 0, 0});
    CHECK_THROWS_AS(lesion_trust(mask, other_grid, 1.0, 1, {0.05, 20.0}), lematch::InputError);
    CHECK_THROWS_AS(lesion_trust(mask, jac, 1.0, 1, {0.0, 20.0}), lematch::ConfigError);
  }
}

TEST_CASE("lesion appearance") {
  const std::array<int, 3> dims{11, 11, 11};
  lematch::RandomStream rng(37);
  Volume3D v0 = make_volume(dims, {1, 1, 1}, {0, 0, 0});
  for (Eigen::Index k = 0; k < v0.voxel_count(); ++k) v0.data[k] = rng.uniform(0.0, 100.0);
  const Vector3d center(5, 5, 5);

  SUBCASE("identical patches correlate perfectly") {
    CHECK(lesion_appearance(v0, v0, center, 3) == doctest::Approx(1.0));
  }
  SUBCASE("negated patch anti-correlates") {
    Volume3D v1 = v0;
    v1.data = -v1.data;
    CHECK(lesion_appearance(v0, v1, center, 3) == doctest::Approx(0.0));
  }
  SUBCASE("constant patch is neutral") {
    Volume3D flat = make_volume(dims, {1, 1, 1}, {0, 0, 0});
    flat.data.setConstant(42.0);
    CHECK(lesion_appearance(v0, flat, center, 3) == doctest::Approx(0.5));
    CHECK(lesion_appearance(flat, v0, center, 3) == doctest::Approx(0.5));
  }
  SUBCASE("invariant under shift and positive scale") {
    Volume3D v1 = v0;
    v1.data = 3.7 * v1.data + 250.0;
    CHECK(lesion_appearance(v0, v1, center, 3) == doctest::Approx(1.0).epsilon(1e-9));
    const double base = lesion_appearance(v0, v1, Vector3d(4, 6, 5), 2);
    Volume3D v2 = v1;
    v2.data = 0.5 * v2.data - 10.0;
    CHECK(lesion_appearance(v0, v2, Vector3d(4, 6, 5), 2) ==
          doctest::Approx(base).epsilon(1e-9));
  }
  SUBCASE("patch near the boundary shrinks symmetrically and still works") {
    CHECK(lesion_appearance(v0, v0, Vector3d(1, 1, 1), 4) == doctest::Approx(1.0));
    // at a corner the joint half-width collapses to a single voxel, which is neutral
    CHECK(lesion_appearance(v0, v0, Vector3d(0, 0, 0), 4) == doctest::Approx(0.5));
  }
  SUBCASE("centroid outside the volume is rejected") {
    CHECK_THROWS_AS(lesion_appearance(v0, v0, Vector3d(-50, 0, 0), 3), lematch::InputError);
  }
}
