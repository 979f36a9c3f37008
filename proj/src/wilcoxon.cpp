#include "lematch/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "lematch/errors.hpp"

namespace lematch {
namespace {

constexpr int kExactLimit = 25;

// P(W+ >= s_obs/2) by dynamic programming over doubled ranks, which stay
// integral under average-rank ties. counts[s] is the number of sign
// assignments whose doubled rank sum equals s; all 2^n assignments are
// equally likely under the null.
double exact_upper_tail(const std::vector<int>& doubled_ranks, long long s_obs) {
  const long long total =
      std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0LL);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(total) + 1, 0);
  counts[0] = 1;
  long long reach = 0;
  for (const int r : doubled_ranks) {
    reach += r;
    for (long long s = reach; s >= r; --s) counts[s] += counts[s - r];
  }
  std::uint64_t tail = 0;
  for (long long s = std::max(s_obs, 0LL); s <= total; ++s) tail += counts[s];
  return static_cast<double>(tail) /
         std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
}

// Var(W+) is the sum of squared midranks over 4, which equals the textbook
// n(n+1)(2n+1)/24 minus the tie correction term.
double normal_upper_tail(const std::vector<int>& doubled_ranks, double w_plus) {
  const double n = static_cast<double>(doubled_ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  double var = 0.0;
  for (const int r : doubled_ranks) var += static_cast<double>(r) * r / 16.0;
  double d = w_plus - mean;
  d -= 0.5 * ((d > 0.0) - (d < 0.0));
  const double z = d / std::sqrt(var);
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank_greater(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw InputError("wilcoxon: paired samples differ in length");

  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult res;
  res.n_used = static_cast<int>(diffs.size());
  if (res.n_used < 2) return res;
  res.applicable = true;

  std::vector<int> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });

  // doubled midrank of each tie run [lo, hi] is (lo+1) + (hi+1)
  std::vector<int> doubled(diffs.size(), 0);
  std::size_t lo = 0;
  while (lo < order.size()) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() &&
           std::abs(diffs[order[hi + 1]]) == std::abs(diffs[order[lo]]))
      ++hi;
    const int dr = static_cast<int>(lo + hi + 2);
    for (std::size_t k = lo; k <= hi; ++k) doubled[order[k]] = dr;
    lo = hi + 1;
  }

  long long s_plus = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i)
    if (diffs[i] > 0.0) s_plus += doubled[i];
  res.statistic = 0.5 * static_cast<double>(s_plus);

  if (res.n_used <= kExactLimit) {
    res.exact = true;
    res.p_value = exact_upper_tail(doubled, s_plus);
  } else {
    res.p_value = normal_upper_tail(doubled, res.statistic);
  }
  return res;
}

}  // namespace lematch
