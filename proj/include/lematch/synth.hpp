#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lematch/graph.hpp"
#include "lematch/types.hpp"
#include "lematch/volume.hpp"

// Seeded generator of paired synthetic lesion masks with a ground-truth
// evolution graph. Lesions are spheres rasterized on the voxel grid; events
// are realized by construction (merge pairs collapse to one volume-conserving
// sphere at the volume-weighted centroid, split sources divide into two,
// persistent lesions rescale in place). Placement is strategic: every merge
// pair gets, while spare persistent lesions remain, a distractor neighbor
// whose follow-up sits closer to the far merge parent than the merged sphere
// does, so proximity-only matching is genuinely contested there.

namespace lematch {

struct EventBudget {
  int merge_pairs = 0;
  int split_sources = 0;
  int disappear = 0;
  int appear = 0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  int n_initial = 10;
  std::array<int, 3> volume_dims{96, 96, 96};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  EventBudget events;
  std::pair<double, double> radius_range{2.2, 3.4};  // mm
  std::pair<double, double> growth_range{0.5, 2.0};  // volume factor, persistent lesions
  bool confusable_events = false;  // place appearing lesions near vacated disappear sites

  // Feasibility: merge_pairs*2 + split_sources + disappear <= n_initial,
  // nonnegative counts, positive dims/spacing, ordered positive ranges.
  void validate() const;  // throws ConfigError
};

struct SynthCase {
  Volume3D mask0, mask1;
  LesionSet set0, set1;      // connected-component tables, scan order
  EvolutionGraph reference;  // same index space as the tables
};

// Deterministic in spec.seed. Throws GenerationError naming the seed when
// placement stays infeasible after bounded retries.
SynthCase generate_case(const SynthSpec& spec);

// Case k uses seed base_seed + k.
std::vector<SynthCase> generate_suite(int n_cases, std::uint64_t base_seed,
                                      const SynthSpec& spec_template);

// Same, and also writes case_000, case_001, ... directories under out_dir.
std::vector<SynthCase> generate_suite(int n_cases, std::uint64_t base_seed,
                                      const SynthSpec& spec_template,
                                      const std::filesystem::path& out_dir);

// Writes lesions0/1.txt, mask0/1.vh(+.raw), reference_graph.txt.
void write_case(const std::filesystem::path& case_dir, const SynthCase& c);

// Set the appearance or trust channel of both tables: lesions touching a
// reference edge get `matched`, isolated ones get `unmatched`. Hostile cues
// are expressed by favoring isolated lesions (whose pairs are all wrong) or
// degrading matched ones.
void inject_appearance_cues(SynthCase& c, double matched, double unmatched);
void inject_trust_cues(SynthCase& c, double matched, double unmatched);

}  // namespace lematch
