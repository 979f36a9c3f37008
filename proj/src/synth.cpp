#include "lematch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>

#include "lematch/errors.hpp"
#include "lematch/io.hpp"
#include "lematch/rng.hpp"

namespace lematch {

namespace {

// Surface gap (times max spacing) between spheres of one timepoint. Two
// rasterized spheres can only touch in 26-connectivity when their surfaces
// come within the sqrt(3) voxel diagonal, so anything above 1.74 separates.
constexpr double kGapFactor = 1.85;
// Clear voxels between any sphere and the volume boundary (times spacing).
constexpr double kBoundaryMargin = 1.5;

// Merge-pair shape: parents sit near the top of the radius range (the gap is
// then small relative to the cluster), the far parent carries the near
// parent's volume times kParentRatio^3 so its share of the merged column
// stays above the relative pruning fraction, and the pair sits near the top
// of the allowed separation window so the merged centroid lands clearly off
// both parents.
constexpr double kMergeParentBand = 0.2;
constexpr double kParentRatioLo = 0.92;
constexpr double kParentRatioHi = 0.94;
constexpr double kPairDistanceBand = 0.25;

// Distractor: a persistent lesion seated just past the far merge parent,
// whose slightly shrinking follow-up steps toward that parent. It undercuts
// the merged sphere for the far parent in raw and in normalized distance, so
// nearest-centroid rules divert there at any gate, while the transport plan
// keeps the parent on the merged lesion: the distractor fills its own
// follow-up's demand at a clearly cheaper rate (kClaimMargin), leaving no
// hungry mass on the false pair.
constexpr double kDecoyRadiusBand = 0.1;
constexpr double kDecoyGrowthLo = 0.80;
constexpr double kDecoyGrowthHi = 0.88;
constexpr double kDecoyAngleMax = 10.0 * std::numbers::pi / 180.0;
constexpr double kDecoyGapSlackLo = 0.02;
constexpr double kDecoyGapSlackHi = 0.08;
constexpr double kClaimMargin = 0.06;        // distractor beats far parent by this
constexpr double kUndercutSlack = 0.03;      // follow-up beats merged sphere by this
constexpr double kRawUndercutMin = 0.35;     // and by this in raw distance
constexpr double kMergedClearancePad = 0.2;  // slack on the merged-sphere gap
constexpr double kDecoyWindowMin = 0.05;
constexpr double kDecoyTopBand = 0.12;

// Split children: volume-conserving fission, symmetric about the source.
constexpr double kSplitShareLo = 0.45;
constexpr double kSplitShareHi = 0.55;
constexpr double kSplitSlackLo = 0.1;
constexpr double kSplitSlackHi = 0.4;

// Confusable events: an appearing lesion placed at this normalized distance
// (centroid distance over radius sum) from a vacated disappear site.
constexpr double kConfusableLo = 1.65;
constexpr double kConfusableHi = 1.95;

constexpr int kPlacementAttempts = 1000;
constexpr int kCaseAttempts = 60;

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

struct PlacementFailure {};

double sphere_volume(double radius) {
  return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
}

Eigen::Vector3d random_unit(RandomStream& rng) {
  for (;;) {
    const Eigen::Vector3d v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0)};
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

// Unit vector within max_angle of axis.
Eigen::Vector3d random_cone(RandomStream& rng, const Eigen::Vector3d& axis, double max_angle) {
  Eigen::Vector3d any = std::abs(axis.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                 : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d perp1 = axis.cross(any).normalized();
  const Eigen::Vector3d perp2 = axis.cross(perp1);
  const double theta = rng.uniform(0.0, max_angle);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return (std::cos(theta) * axis +
          std::sin(theta) * (std::cos(phi) * perp1 + std::sin(phi) * perp2))
      .normalized();
}

class LayoutBuilder {
 public:
  LayoutBuilder(const SynthSpec& spec, RandomStream& rng)
      : spec_(spec),
        rng_(rng),
        gap_(kGapFactor * spec.spacing.maxCoeff()),
        lo_(spec.spacing * kBoundaryMargin),
        hi_(Eigen::Vector3d{double(spec.volume_dims[0]), double(spec.volume_dims[1]),
                            double(spec.volume_dims[2])}
                .cwiseProduct(spec.spacing) -
            spec.spacing * kBoundaryMargin) {}

  std::vector<Sphere> baseline, followup;
  std::vector<std::pair<int, int>> edges;  // (baseline index, followup index)

  void build() {
    const int decoy_budget =
        spec_.n_initial - 2 * spec_.events.merge_pairs - spec_.events.split_sources -
        spec_.events.disappear;
    int decoys_left = std::min(decoy_budget, spec_.events.merge_pairs);
    int plain_persistent = decoy_budget - decoys_left;

    std::vector<int> disappear_sites;
    for (int k = 0; k < spec_.events.merge_pairs; ++k) {
      place_merge_cluster(decoys_left > 0);
      if (decoys_left > 0) --decoys_left;
    }
    for (int k = 0; k < spec_.events.split_sources; ++k) place_split();
    for (int k = 0; k < spec_.events.disappear; ++k)
      disappear_sites.push_back(place_disappear());
    for (int k = 0; k < plain_persistent; ++k) place_persistent();
    for (int k = 0; k < spec_.events.appear; ++k) {
      const int partner = (spec_.confusable_events &&
                           k < static_cast<int>(disappear_sites.size()))
                              ? disappear_sites[static_cast<std::size_t>(k)]
                              : -1;
      place_appear(partner);
    }
  }

 private:
  const SynthSpec& spec_;
  RandomStream& rng_;
  const double gap_;
  const Eigen::Vector3d lo_, hi_;

  double radius_lo() const { return spec_.radius_range.first; }
  double radius_hi() const { return spec_.radius_range.second; }
  double radius_mid() const { return 0.5 * (radius_lo() + radius_hi()); }

  bool in_bounds(const Sphere& s) const {
    return (s.center.array() - s.radius >= lo_.array()).all() &&
           (s.center.array() + s.radius <= hi_.array()).all();
  }

  Eigen::Vector3d sample_center(double radius) {
    Eigen::Vector3d c;
    for (int k = 0; k < 3; ++k) {
      const double a = lo_[k] + radius, b = hi_[k] - radius;
      if (a >= b) throw PlacementFailure{};
      c[k] = rng_.uniform(a, b);
    }
    return c;
  }

  static bool clear_of(const Sphere& s, const std::vector<Sphere>& others, double gap,
                       const std::set<int>& exempt = {}) {
    for (std::size_t i = 0; i < others.size(); ++i) {
      if (exempt.count(static_cast<int>(i))) continue;
      const Sphere& o = others[i];
      if ((s.center - o.center).norm() < s.radius + o.radius + gap) return false;
    }
    return true;
  }

  // A follow-up sphere must keep the component gap from every follow-up
  // sphere and, except for its own progenitors, from every baseline sphere.
  bool followup_fits(const Sphere& s, const std::set<int>& baseline_exempt) const {
    return in_bounds(s) && clear_of(s, followup, gap_) &&
           clear_of(s, baseline, gap_, baseline_exempt);
  }

  bool baseline_fits(const Sphere& s) const {
    return in_bounds(s) && clear_of(s, baseline, gap_) && clear_of(s, followup, gap_);
  }

  int push_baseline(const Sphere& s) {
    baseline.push_back(s);
    return static_cast<int>(baseline.size()) - 1;
  }
  int push_followup(const Sphere& s) {
    followup.push_back(s);
    return static_cast<int>(followup.size()) - 1;
  }

  // Two baseline parents at nearly the largest in-window separation, one
  // volume-conserving merged sphere at the volume-weighted centroid, and
  // (optionally) the distractor persistent lesion beyond the far parent.
  void place_merge_cluster(bool with_decoy) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double r_a =
          rng_.uniform(std::max(radius_lo(), radius_hi() - kMergeParentBand), radius_hi());
      const double r_b =
          std::max(radius_lo(), r_a * rng_.uniform(kParentRatioLo, kParentRatioHi));
      const double d_min = r_a + r_b + gap_;
      const double d_max = 1.5 * (r_a + r_b);
      if (d_min >= d_max) continue;
      const double d =
          rng_.uniform(std::max(d_min, d_max - kPairDistanceBand), d_max);

      const Eigen::Vector3d dir = random_unit(rng_);
      const Sphere a{sample_center(r_a), r_a};
      const Sphere b{a.center + d * dir, r_b};

      const double vol_a = sphere_volume(r_a), vol_b = sphere_volume(r_b);
      const double w_a = vol_a / (vol_a + vol_b);
      const Sphere merged{w_a * a.center + (1.0 - w_a) * b.center,
                          equivalent_radius(vol_a + vol_b)};
      const double d_bm = (merged.center - b.center).norm();

      Sphere decoy, decoy_follow;
      if (with_decoy) {
        const double r_x =
            rng_.uniform(std::max(radius_lo(), radius_hi() - kDecoyRadiusBand), radius_hi());
        const double r_f = std::cbrt(rng_.uniform(kDecoyGrowthLo, kDecoyGrowthHi)) * r_x;
        const Eigen::Vector3d dir_x = random_cone(rng_, dir, kDecoyAngleMax);
        const double d_x = r_b + r_x + gap_ + rng_.uniform(kDecoyGapSlackLo, kDecoyGapSlackHi);
        const double c_bm = d_bm / (r_b + merged.radius);
        // window for the follow-up's distance from the far parent: above the
        // merged-sphere gap and the distractor's normalized reach, below both
        // undercut caps; sampled from the top so the false pair stays barely
        // cheaper than the true one
        const double floor_mask = merged.radius + r_f + gap_ + kMergedClearancePad - d_bm;
        const double floor_claim = (d_x / (r_x + r_f) + kClaimMargin) /
                                   (1.0 / (r_b + r_f) + 1.0 / (r_x + r_f));
        const double cap =
            std::min((r_b + r_f) * (c_bm - kUndercutSlack), d_bm - kRawUndercutMin);
        const double floor_all = std::max(floor_mask, floor_claim);
        if (cap - floor_all < kDecoyWindowMin) continue;
        const double d_bf = rng_.uniform(std::max(floor_all, cap - kDecoyTopBand), cap);
        decoy = Sphere{b.center + d_x * dir_x, r_x};
        decoy_follow = Sphere{b.center + d_bf * dir_x, r_f};
      }

      take_snapshot();
      const bool ok = [&] {
        if (!baseline_fits(a)) return false;
        const int ia = push_baseline(a);
        if (!baseline_fits(b)) return false;
        const int ib = push_baseline(b);
        int ix = -1;
        if (with_decoy) {
          if (!baseline_fits(decoy)) return false;
          ix = push_baseline(decoy);
        }
        if (!followup_fits(merged, {ia, ib})) return false;
        const int im = push_followup(merged);
        if (with_decoy) {
          if (!followup_fits(decoy_follow, {ix, ib})) return false;
          const int jf = push_followup(decoy_follow);
          edges.emplace_back(ix, jf);
        }
        edges.emplace_back(ia, im);
        edges.emplace_back(ib, im);
        return true;
      }();
      if (ok) return;
      rollback_to_snapshot();
    }
    throw PlacementFailure{};
  }

  void place_split() {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double r_s = rng_.uniform(radius_mid(), radius_hi());
      const Sphere source{sample_center(r_s), r_s};
      if (!baseline_fits(source)) continue;

      const double share = rng_.uniform(kSplitShareLo, kSplitShareHi);
      const double vol = sphere_volume(r_s);
      const double r1 = equivalent_radius(share * vol);
      const double r2 = equivalent_radius((1.0 - share) * vol);
      bool placed = false;
      for (int sub = 0; sub < 200 && !placed; ++sub) {
        const Eigen::Vector3d dir = random_unit(rng_);
        const double h =
            0.5 * (r1 + r2 + gap_) + rng_.uniform(kSplitSlackLo, kSplitSlackHi);
        const Sphere c1{source.center + h * dir, r1};
        const Sphere c2{source.center - h * dir, r2};
        const int is = static_cast<int>(baseline.size());
        if (!followup_fits(c1, {is})) continue;
        followup.push_back(c1);
        if (!followup_fits(c2, {is})) {
          followup.pop_back();
          continue;
        }
        followup.push_back(c2);
        const int j1 = static_cast<int>(followup.size()) - 2;
        push_baseline(source);
        edges.emplace_back(is, j1);
        edges.emplace_back(is, j1 + 1);
        placed = true;
      }
      if (placed) return;
    }
    throw PlacementFailure{};
  }

  int place_disappear() {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double r = rng_.uniform(radius_lo(), radius_hi());
      const Sphere s{sample_center(r), r};
      if (baseline_fits(s)) return push_baseline(s);
    }
    throw PlacementFailure{};
  }

  void place_persistent() {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double r = rng_.uniform(radius_lo(), radius_hi());
      const double growth = rng_.uniform(spec_.growth_range.first, spec_.growth_range.second);
      const double r_after = equivalent_radius(growth * sphere_volume(r));
      const Sphere before{sample_center(r), r};
      const Sphere after{before.center, r_after};
      if (!baseline_fits(before)) continue;
      const int ip = static_cast<int>(baseline.size());
      if (!followup_fits(after, {ip})) continue;
      push_baseline(before);
      const int jp = push_followup(after);
      edges.emplace_back(ip, jp);
      return;
    }
    throw PlacementFailure{};
  }

  void place_appear(int confusable_partner) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double r = rng_.uniform(radius_lo(), radius_hi());
      Sphere s;
      if (confusable_partner >= 0) {
        const Sphere& site = baseline[static_cast<std::size_t>(confusable_partner)];
        const double reach =
            rng_.uniform(kConfusableLo, kConfusableHi) * (site.radius + r);
        s = Sphere{site.center + reach * random_unit(rng_), r};
        if (!in_bounds(s)) continue;
      } else {
        s = Sphere{sample_center(r), r};
      }
      if (followup_fits(s, {})) {
        followup.push_back(s);
        return;
      }
    }
    throw PlacementFailure{};
  }

  std::size_t snap_baseline_ = 0, snap_followup_ = 0, snap_edges_ = 0;

  void take_snapshot() {
    snap_baseline_ = baseline.size();
    snap_followup_ = followup.size();
    snap_edges_ = edges.size();
  }
  void rollback_to_snapshot() {
    baseline.resize(snap_baseline_);
    followup.resize(snap_followup_);
    edges.resize(snap_edges_);
  }
};

void rasterize(Volume3D& mask, const Sphere& s) {
  const Eigen::Vector3d& sp = mask.spacing;
  std::array<int, 3> lo, hi;
  for (int k = 0; k < 3; ++k) {
    lo[static_cast<std::size_t>(k)] = std::max(
        0, static_cast<int>(std::floor((s.center[k] - s.radius - mask.origin[k]) / sp[k])));
    hi[static_cast<std::size_t>(k)] = std::min(
        mask.dims[static_cast<std::size_t>(k)] - 1,
        static_cast<int>(std::ceil((s.center[k] + s.radius - mask.origin[k]) / sp[k])));
  }
  const double r2 = s.radius * s.radius;
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) {
        const Eigen::Vector3d pos =
            mask.origin + sp.cwiseProduct(Eigen::Vector3d{double(x), double(y), double(z)});
        if ((pos - s.center).squaredNorm() <= r2) mask(x, y, z) = 1.0;
      }
}

// Maps each placed sphere to the connected component whose centroid it owns.
// Fails (for a whole-case retry) if counts disagree or a match is ambiguous.
std::vector<int> map_to_components(const std::vector<Sphere>& spheres,
                                   const std::vector<LesionInstance>& components,
                                   double max_offset) {
  if (spheres.size() != components.size()) throw PlacementFailure{};
  std::vector<int> mapping(spheres.size(), -1);
  std::vector<bool> taken(components.size(), false);
  for (std::size_t k = 0; k < spheres.size(); ++k) {
    int best = -1;
    double best_d = max_offset;
    for (std::size_t c = 0; c < components.size(); ++c) {
      const double d = (components[c].centroid - spheres[k].center).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best < 0 || taken[static_cast<std::size_t>(best)]) throw PlacementFailure{};
    taken[static_cast<std::size_t>(best)] = true;
    mapping[k] = best;
  }
  return mapping;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_initial < 0) throw ConfigError("n_initial must be >= 0");
  if (events.merge_pairs < 0 || events.split_sources < 0 || events.disappear < 0 ||
      events.appear < 0)
    throw ConfigError("event counts must be >= 0");
  if (2 * events.merge_pairs + events.split_sources + events.disappear > n_initial)
    throw ConfigError("event budget exceeds n_initial: merge_pairs*2 + split_sources + "
                      "disappear must be <= n_initial");
  for (int k = 0; k < 3; ++k)
    if (volume_dims[static_cast<std::size_t>(k)] <= 0)
      throw ConfigError("volume_dims must be positive");
  if ((spacing.array() <= 0.0).any()) throw ConfigError("spacing must be positive");
  if (!(radius_range.first > 0.0) || !(radius_range.second >= radius_range.first))
    throw ConfigError("radius_range must satisfy 0 < min <= max");
  if (!(growth_range.first > 0.0) || !(growth_range.second >= growth_range.first))
    throw ConfigError("growth_range must satisfy 0 < min <= max");
}

SynthCase generate_case(const SynthSpec& spec) {
  spec.validate();
  RandomStream rng(spec.seed);
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  for (int attempt = 0; attempt < kCaseAttempts; ++attempt) {
    LayoutBuilder layout(spec, rng);
    try {
      layout.build();

      SynthCase out;
      out.mask0 = make_volume(spec.volume_dims, spec.spacing, origin);
      out.mask1 = make_volume(spec.volume_dims, spec.spacing, origin);
      for (const Sphere& s : layout.baseline) rasterize(out.mask0, s);
      for (const Sphere& s : layout.followup) rasterize(out.mask1, s);

      std::vector<LesionInstance> comp0 = connected_components(out.mask0);
      std::vector<LesionInstance> comp1 = connected_components(out.mask1);
      const double max_offset = 1.5 * spec.spacing.maxCoeff();
      const std::vector<int> map0 = map_to_components(layout.baseline, comp0, max_offset);
      const std::vector<int> map1 = map_to_components(layout.followup, comp1, max_offset);

      std::vector<GraphEdge> edges;
      edges.reserve(layout.edges.size());
      for (const auto& [bi, fj] : layout.edges)
        edges.push_back({map0[static_cast<std::size_t>(bi)],
                         map1[static_cast<std::size_t>(fj)], std::nullopt});
      out.reference = label_events(static_cast<int>(comp0.size()),
                                   static_cast<int>(comp1.size()), edges);
      out.set0 = make_lesion_set(Timepoint::Baseline, std::move(comp0));
      out.set1 = make_lesion_set(Timepoint::Followup, std::move(comp1));
      return out;
    } catch (const PlacementFailure&) {
      continue;
    }
  }
  throw GenerationError("synthetic case generation failed for seed " +
                        std::to_string(spec.seed));
}

std::vector<SynthCase> generate_suite(int n_cases, std::uint64_t base_seed,
                                      const SynthSpec& spec_template) {
  if (n_cases < 1) throw ConfigError("n_cases must be >= 1");
  std::vector<SynthCase> cases;
  cases.reserve(static_cast<std::size_t>(n_cases));
  for (int k = 0; k < n_cases; ++k) {
    SynthSpec spec = spec_template;
    spec.seed = base_seed + static_cast<std::uint64_t>(k);
    cases.push_back(generate_case(spec));
  }
  return cases;
}

std::vector<SynthCase> generate_suite(int n_cases, std::uint64_t base_seed,
                                      const SynthSpec& spec_template,
                                      const std::filesystem::path& out_dir) {
  std::vector<SynthCase> cases = generate_suite(n_cases, base_seed, spec_template);
  std::filesystem::create_directories(out_dir);
  for (std::size_t k = 0; k < cases.size(); ++k) {
    char name[16];
    std::snprintf(name, sizeof(name), "case_%03d", static_cast<int>(k));
    write_case(out_dir / name, cases[k]);
  }
  return cases;
}

void write_case(const std::filesystem::path& case_dir, const SynthCase& c) {
  std::filesystem::create_directories(case_dir);
  io::write_lesion_table(case_dir / "lesions0.txt", c.set0);
  io::write_lesion_table(case_dir / "lesions1.txt", c.set1);
  io::write_volume(case_dir / "mask0.vh", c.mask0, io::VolumeDType::UInt8);
  io::write_volume(case_dir / "mask1.vh", c.mask1, io::VolumeDType::UInt8);
  io::write_graph(case_dir / "reference_graph.txt", c.reference);
}

namespace {

// Per-lesion score assignment split by whether the reference graph matches
// the lesion. Lesion-level scores can only favor a false pair by raising the
// scores of lesions whose pairs are all false, or by degrading matched
// lesions, so this split is the whole expressible family.
template <typename Setter>
void assign_by_match(SynthCase& c, double matched, double unmatched, Setter set) {
  std::vector<bool> matched0(c.set0.lesions.size(), false);
  std::vector<bool> matched1(c.set1.lesions.size(), false);
  for (const GraphEdge& edge : c.reference.edges) {
    matched0[static_cast<std::size_t>(edge.baseline)] = true;
    matched1[static_cast<std::size_t>(edge.followup)] = true;
  }
  for (std::size_t i = 0; i < c.set0.lesions.size(); ++i)
    set(c.set0.lesions[i], matched0[i] ? matched : unmatched);
  for (std::size_t j = 0; j < c.set1.lesions.size(); ++j)
    set(c.set1.lesions[j], matched1[j] ? matched : unmatched);
}

}  // namespace

void inject_appearance_cues(SynthCase& c, double matched, double unmatched) {
  assign_by_match(c, matched, unmatched,
                  [](LesionInstance& l, double v) { l.appearance = v; });
}

void inject_trust_cues(SynthCase& c, double matched, double unmatched) {
  assign_by_match(c, matched, unmatched, [](LesionInstance& l, double v) { l.trust = v; });
}

}  // namespace lematch
