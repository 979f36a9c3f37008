#pragma once

#include "lematch/graph.hpp"
#include "lematch/types.hpp"

// Distance-only comparison matchers. Both use the same edge rule: for each
// lesion on either side, link it to its nearest counterpart when that pair
// passes the gate, and take the union of both directions (many-to-one links,
// hence merges and splits, are representable). Nearest ties resolve to the
// lowest index.

namespace lematch {

// Gate on raw centroid distance in mm (strictly below threshold).
EvolutionGraph distance_bipartite(const LesionSet& set0, const LesionSet& set1,
                                  double threshold_mm);

// Gate on the size-normalized capped geometric cost instead of raw distance.
EvolutionGraph normdist_bipartite(const LesionSet& set0, const LesionSet& set1,
                                  double norm_threshold, double cap);

}  // namespace lematch
