#pragma once

#include <filesystem>
#include <string>

#include "lematch/cost.hpp"
#include "lematch/graph.hpp"
#include "lematch/metrics.hpp"
#include "lematch/prior.hpp"
#include "lematch/synth.hpp"
#include "lematch/types.hpp"
#include "lematch/uot.hpp"
#include "lematch/volume.hpp"

// Plain-text file formats plus a raw binary volume payload. All writers are
// byte-deterministic: stable key order, floats at 17 significant digits, no
// absolute paths inside any output. Volume payloads are little-endian,
// x-fastest; the .vh header names the payload file by relative name only.

namespace lematch::io {

// full run configuration: matching parameters plus the volume-processing and
// baseline-gate knobs that sit outside MatchConfig
struct RunConfig {
  MatchConfig match;
  double jacobian_clip_min = 0.05;
  double jacobian_clip_max = 20.0;
  // baseline gates, tuned for edge F1 on a synthetic development split
  double distance_threshold_mm = 4.5;
  double normdist_threshold = 0.70;

  void validate() const;
};

enum class VolumeDType { UInt8, Float32, Float64 };

// shortest-round-trip style fixed formatting: %.17g
std::string format_double(double value);

void write_lesion_table(const std::filesystem::path& path, const LesionSet& set);
LesionSet read_lesion_table(const std::filesystem::path& path, Timepoint timepoint);

// header_path must end in .vh; the payload lands next to it as <stem>.raw
void write_volume(const std::filesystem::path& header_path, const Volume3D& volume,
                  VolumeDType dtype);
Volume3D read_volume(const std::filesystem::path& header_path);
void write_field(const std::filesystem::path& header_path, const DeformationField& field);
DeformationField read_field(const std::filesystem::path& header_path);

void write_graph(const std::filesystem::path& path, const EvolutionGraph& graph);
EvolutionGraph read_graph(const std::filesystem::path& path);

void write_plan(const std::filesystem::path& path, const TransportPlan& plan);
TransportPlan read_plan(const std::filesystem::path& path);

void write_cost(const std::filesystem::path& path, const CostBreakdown& cost);
CostBreakdown read_cost(const std::filesystem::path& path);

void write_prior(const std::filesystem::path& path, const AsymmetryPrior& prior);
AsymmetryPrior read_prior(const std::filesystem::path& path);

void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// flat "key value" file mirroring RunConfig field names; unknown keys are
// configuration errors, missing keys keep their defaults
RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const std::filesystem::path& path, const RunConfig& config);

// same scheme for SynthSpec; multi-value keys (volume_dims, spacing,
// radius_range, growth_range) take their values on one line
SynthSpec read_synth_spec(const std::filesystem::path& path);
void write_synth_spec(const std::filesystem::path& path, const SynthSpec& spec);

}  // namespace lematch::io
