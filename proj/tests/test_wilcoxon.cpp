#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lematch/errors.hpp"
#include "lematch/rng.hpp"
#include "lematch/wilcoxon.hpp"

using lematch::RandomStream;
using lematch::wilcoxon_signed_rank_greater;
using lematch::WilcoxonResult;

namespace {

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

WilcoxonResult against_zero(const std::vector<double>& diffs) {
  return wilcoxon_signed_rank_greater(vec(diffs), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(diffs.size())));
}

// independent oracle: midranks by pairwise counting, full enumeration of the
// 2^n sign assignments; all sums are multiples of 0.5 so doubles are exact
double brute_force_upper_tail(const std::vector<double>& diffs) {
  const int n = static_cast<int>(diffs.size());
  std::vector<double> rank(diffs.size());
  for (int i = 0; i < n; ++i) {
    int less = 0, equal = 0;
    for (int j = 0; j < n; ++j) {
      if (std::abs(diffs[j]) < std::abs(diffs[i])) ++less;
      if (std::abs(diffs[j]) == std::abs(diffs[i])) ++equal;
    }
    rank[i] = less + 0.5 * (equal + 1);
  }
  double observed = 0.0;
  for (int i = 0; i < n; ++i)
    if (diffs[i] > 0.0) observed += rank[i];
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) s += rank[i];
    if (s >= observed) ++hits;
  }
  return static_cast<double>(hits) / std::ldexp(1.0, n);
}

}  // namespace

TEST_CASE("hand-computed exact tails without ties") {
  const WilcoxonResult r = against_zero({1, 2, 3, -4, 5});
  CHECK(r.applicable);
  CHECK(r.exact);
  CHECK(r.n_used == 5);
  CHECK(r.statistic == 11.0);
  CHECK(r.p_value == 7.0 / 32.0);

  const WilcoxonResult top = against_zero({1, 2, 3, 4, 5});
  CHECK(top.statistic == 15.0);
  CHECK(top.p_value == 1.0 / 32.0);

  const WilcoxonResult bottom = against_zero({-1, -2, -3, -4, -5});
  CHECK(bottom.statistic == 0.0);
  CHECK(bottom.p_value == 1.0);
}

TEST_CASE("tied differences share their average rank") {
  const WilcoxonResult r = against_zero({1, -1, 2});
  CHECK(r.statistic == 4.5);
  CHECK(r.p_value == 3.0 / 8.0);

  const WilcoxonResult all = against_zero({1, 1, 2});
  CHECK(all.statistic == 6.0);
  CHECK(all.p_value == 1.0 / 8.0);
}

TEST_CASE("zero differences are dropped before ranking") {
  const WilcoxonResult r =
      wilcoxon_signed_rank_greater(vec({5, 3, 2, 9}), vec({5, 2, 3, 9}));
  CHECK(r.applicable);
  CHECK(r.n_used == 2);
  CHECK(r.statistic == 1.5);
  CHECK(r.p_value == 0.75);
}

TEST_CASE("fewer than two usable pairs is not applicable") {
  const Eigen::VectorXd same = vec({0.4, 0.7, 0.9});
  const WilcoxonResult equal = wilcoxon_signed_rank_greater(same, same);
  CHECK_FALSE(equal.applicable);
  CHECK(equal.n_used == 0);
  CHECK(equal.p_value == 1.0);

  const WilcoxonResult single =
      wilcoxon_signed_rank_greater(vec({0.4, 0.7, 0.9}), vec({0.4, 0.1, 0.9}));
  CHECK_FALSE(single.applicable);
  CHECK(single.n_used == 1);

  const WilcoxonResult empty =
      wilcoxon_signed_rank_greater(Eigen::VectorXd(), Eigen::VectorXd());
  CHECK_FALSE(empty.applicable);
}

TEST_CASE("mismatched sample lengths throw") {
  CHECK_THROWS_AS(wilcoxon_signed_rank_greater(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)),
                  lematch::InputError);
}

// reference p-values: scipy.stats.wilcoxon, alternative="greater", correction=True
TEST_CASE("exact p-values match an external reference") {
  const std::vector<double> x12 = {0.988, 1.287, 1.153, 0.548, 0.630, 1.261,
                                   0.306, 1.203, 1.177, 0.815, 0.633, 0.606};
  const std::vector<double> y12 = {1.072, 1.248, 1.075, 0.438, 0.233, 0.996,
                                   0.152, 0.810, 1.287, 0.961, 0.485, 0.827};
  const WilcoxonResult fwd = wilcoxon_signed_rank_greater(vec(x12), vec(y12));
  CHECK(fwd.exact);
  CHECK(fwd.n_used == 12);
  CHECK(fwd.statistic == 56.0);
  CHECK(fwd.p_value == 0.101806640625);

  const WilcoxonResult rev = wilcoxon_signed_rank_greater(vec(y12), vec(x12));
  CHECK(rev.statistic == 22.0);
  CHECK(rev.p_value == 0.911865234375);

  const std::vector<double> x25 = {0.339, 0.866, 0.813, 1.309, 0.992, 0.866, 0.847,
                                   0.572, 0.313, 0.512, 1.061, 0.521, 0.706, 0.304,
                                   1.213, 0.470, 0.594, 1.268, 0.861, 1.232, 1.004,
                                   1.116, 0.401, 0.895, 0.859};
  const std::vector<double> y25 = {-0.015, 0.895, 0.664, 1.565, 1.001, 0.924, 1.034,
                                   0.260,  0.328, 0.078, 0.919, 0.367, 0.528, 0.097,
                                   1.400,  0.440, 0.714, 1.266, 1.088, 0.806, 1.143,
                                   0.912,  0.476, 0.539, 0.662};
  const WilcoxonResult r25 = wilcoxon_signed_rank_greater(vec(x25), vec(y25));
  CHECK(r25.exact);
  CHECK(r25.statistic == 218.0);
  CHECK(r25.p_value == doctest::Approx(0.070457607507705688).epsilon(1e-13));
}

// reference p-values: scipy.stats.wilcoxon, alternative="greater", correction=True
TEST_CASE("normal approximation matches an external reference") {
  const std::vector<double> x30 = {0.445, 1.230, 1.339, 1.294, 0.927, 0.460, 0.512, 1.321,
                                   0.908, 0.499, 1.272, 1.006, 0.927, 0.714, 0.752, 0.563,
                                   0.342, 1.264, 0.815, 0.902, 0.654, 1.126, 0.328, 0.709,
                                   0.333, 0.435, 1.364, 1.024, 0.771, 0.876};
  const std::vector<double> y30 = {0.090, 1.272, 1.196, 1.081, 0.960, 0.371, 0.238, 0.939,
                                   1.095, 0.099, 1.568, 0.741, 0.619, 0.911, 0.738, 0.252,
                                   0.631, 1.093, 0.520, 0.817, 0.410, 1.256, 0.479, 0.737,
                                   0.498, 0.475, 0.953, 0.894, 0.816, 0.972};
  const WilcoxonResult r30 = wilcoxon_signed_rank_greater(vec(x30), vec(y30));
  CHECK_FALSE(r30.exact);
  CHECK(r30.n_used == 30);
  CHECK(r30.statistic == 319.0);
  CHECK(r30.p_value == doctest::Approx(0.038457186216301814).epsilon(1e-13));

  // heavy ties on a binary grid, so the tie correction is load-bearing
  const std::vector<double> x40 = {0.125, 1.625, 0.875, 1.250, 0.625, 1.500, 0.750, 1.000,
                                   1.625, 0.750, 1.250, 1.125, 1.250, 1.000, 1.125, 1.375,
                                   1.500, 1.000, 1.625, 1.000, 1.000, 1.000, 1.500, 1.500,
                                   0.250, 0.625, 0.750, 1.000, 0.625, 1.000, 0.625, 1.750,
                                   1.375, 0.750, 1.125, 1.500, 1.250, 1.375, 0.375, 1.000};
  const std::vector<double> y40 = {0.375, 1.375, 0.500, 0.875, 0.500, 1.375, 0.500, 0.875,
                                   1.375, 0.875, 1.375, 1.375, 1.125, 1.125, 1.000, 1.000,
                                   1.250, 0.750, 1.375, 1.250, 0.750, 0.750, 1.125, 1.375,
                                   0.375, 0.375, 0.625, 0.750, 0.500, 0.875, 0.875, 1.375,
                                   1.125, 0.625, 1.250, 1.250, 1.125, 1.125, 0.625, 1.125};
  const WilcoxonResult r40 = wilcoxon_signed_rank_greater(vec(x40), vec(y40));
  CHECK_FALSE(r40.exact);
  CHECK(r40.n_used == 40);
  CHECK(r40.statistic == 633.5);
  CHECK(r40.p_value == doctest::Approx(0.0011050785723859965).epsilon(1e-13));
}

TEST_CASE("exact enumeration agrees with brute force on random small samples") {
  RandomStream rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(3, 10);
    std::vector<double> diffs(static_cast<std::size_t>(n));
    for (double& d : diffs) {
      do {
        // quarters create frequent exact ties
        d = static_cast<double>(rng.uniform_int(-8, 8)) / 4.0;
      } while (d == 0.0);
    }
    const WilcoxonResult r = against_zero(diffs);
    CAPTURE(trial);
    REQUIRE(r.exact);
    CHECK(r.p_value == brute_force_upper_tail(diffs));
  }
}

TEST_CASE("enumeration switches to the approximation above 25 pairs") {
  std::vector<double> diffs;
  for (int i = 0; i < 26; ++i) diffs.push_back((i % 2 ? -1.0 : 1.0) * (i + 1) * 0.25);
  const WilcoxonResult wide = against_zero(diffs);
  CHECK_FALSE(wide.exact);
  CHECK(wide.p_value > 0.0);
  CHECK(wide.p_value < 1.0);

  diffs.pop_back();
  const WilcoxonResult narrow = against_zero(diffs);
  CHECK(narrow.exact);
  CHECK(narrow.n_used == 25);
}