#pragma once

#include <Eigen/Dense>

// One-sided Wilcoxon signed-rank test for paired samples, alternative
// hypothesis "x tends to exceed y". Zero differences are dropped and tied
// absolute differences share their average rank. The null distribution is
// enumerated exactly (conditional on the tie pattern) for up to 25 usable
// pairs; above that a tie-corrected normal approximation with continuity
// correction is used.

namespace lematch {

struct WilcoxonResult {
  bool applicable = false;  // at least two nonzero differences
  bool exact = false;       // exact enumeration rather than normal approximation
  int n_used = 0;           // pairs remaining after dropping zero differences
  double statistic = 0.0;   // W+, the rank sum over positive differences
  double p_value = 1.0;     // P(W+ >= observed) under the null
};

WilcoxonResult wilcoxon_signed_rank_greater(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& y);

}  // namespace lematch
