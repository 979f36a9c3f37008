#include <doctest.h>

#include <cmath>

#include "lematch/errors.hpp"
#include "lematch/prior.hpp"
#include "lematch/rng.hpp"

using lematch::effective_penalties;
using lematch::LesionSet;
using lematch::make_lesion;
using lematch::make_lesion_set;
using lematch::Timepoint;
using lematch::tumor_load_ratio;

namespace {

LesionSet set_with_volumes(Timepoint tp, const std::vector<double>& volumes) {
  std::vector<lematch::LesionInstance> lesions;
  for (size_t k = 0; k < volumes.size(); ++k)
    lesions.push_back(make_lesion(static_cast<int>(k), {double(k) * 10.0, 0, 0}, volumes[k]));
  return make_lesion_set(tp, lesions);
}

}  // namespace

TEST_CASE("tumor load ratio hand values") {
  const auto b10 = set_with_volumes(Timepoint::Baseline, {4.0, 6.0});
  CHECK(tumor_load_ratio(b10, set_with_volumes(Timepoint::Followup, {10.0})) ==
        doctest::Approx(1.0));
  CHECK(tumor_load_ratio(set_with_volumes(Timepoint::Baseline, {10.0}),
                         set_with_volumes(Timepoint::Followup, {20.0})) == doctest::Approx(2.0));
  CHECK(tumor_load_ratio(b10, LesionSet{Timepoint::Followup, {}}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(tumor_load_ratio(LesionSet{Timepoint::Baseline, {}}, b10),
                  lematch::InputError);
}

TEST_CASE("effective penalties hand values") {
  SUBCASE("rho one leaves both unchanged") {
    const auto [l, m] = effective_penalties(1.0, 2.0, 3.0, 5.0);
    CHECK(l == doctest::Approx(2.0));
    CHECK(m == doctest::Approx(3.0));
  }
  SUBCASE("growth halves mu at gamma one") {
    const auto [l, m] = effective_penalties(2.0, 2.0, 3.0, 1.0);
    CHECK(l == doctest::Approx(2.0));
    CHECK(m == doctest::Approx(1.5));
  }
  SUBCASE("shrinkage halves lambda at gamma one") {
    const auto [l, m] = effective_penalties(0.5, 2.0, 3.0, 1.0);
    CHECK(l == doctest::Approx(1.0));
    CHECK(m == doctest::Approx(3.0));
  }
  SUBCASE("gamma zero disables the prior for any rho") {
    for (const double rho : {0.0, 0.01, 0.5, 1.0, 7.0, 1e6}) {
      const auto [l, m] = effective_penalties(rho, 2.0, 3.0, 0.0);
      CHECK(l == doctest::Approx(2.0));
      CHECK(m == doctest::Approx(3.0));
    }
  }
  SUBCASE("floor clamps vanished penalties") {
    const auto [l0, m0] = effective_penalties(0.0, 2.0, 3.0, 1.0);
    CHECK(l0 == doctest::Approx(0.02));
    CHECK(m0 == doctest::Approx(3.0));
    const auto [l1, m1] = effective_penalties(1e-9, 2.0, 3.0, 3.0);
    CHECK(l1 == doctest::Approx(0.02));
  }
  SUBCASE("continuity at rho one") {
    const auto [ll, lm] = effective_penalties(1.0 - 1e-9, 2.0, 3.0, 2.0);
    const auto [rl, rm] = effective_penalties(1.0 + 1e-9, 2.0, 3.0, 2.0);
    CHECK(std::abs(ll - 2.0) < 1e-7);
    CHECK(std::abs(lm - 3.0) < 1e-7);
    CHECK(std::abs(rl - 2.0) < 1e-7);
    CHECK(std::abs(rm - 3.0) < 1e-7);
  }
}

TEST_CASE("direction property over random samples") {
  lematch::RandomStream rng(17);
  for (int k = 0; k < 300; ++k) {
    const double rho = std::exp(rng.uniform(-6.0, 6.0));
    const double gamma = rng.uniform(0.0, 4.0);
    const double lb = rng.uniform(0.1, 10.0);
    const double mb = rng.uniform(0.1, 10.0);
    const auto [l, m] = effective_penalties(rho, lb, mb, gamma);
    CHECK(l > 0.0);
    CHECK(m > 0.0);
    if (rho > 1.0) {
      CHECK(m <= mb + 1e-15);
      CHECK(l == doctest::Approx(lb));
    } else if (rho < 1.0) {
      CHECK(l <= lb + 1e-15);
      CHECK(m == doctest::Approx(mb));
    }
  }
}
