#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lematch/graph.hpp"
#include "lematch/io.hpp"
#include "lematch/metrics.hpp"
#include "lematch/types.hpp"
#include "lematch/volume.hpp"
#include "lematch/wilcoxon.hpp"

// Case loading, cue enrichment from volumes, method dispatch, and the
// suite-level benchmark harness. Directory layout per case: lesions0.txt /
// lesions1.txt and/or mask0.vh / mask1.vh, optional ct0.vh, ct1_warped.vh,
// field.vh, reference_graph.txt.

namespace lematch {

// One case directory's inputs. Lesion tables are authoritative for matching;
// volumes are optional raw material for cue enrichment.
struct CaseBundle {
  std::string case_id;
  LesionSet set0;
  LesionSet set1;
  std::optional<Volume3D> mask0, mask1;
  std::optional<Volume3D> ct0, ct1_warped;
  std::optional<DeformationField> field;
  std::optional<EvolutionGraph> reference;
};

enum class Method { Uot, Distance, NormDistance };

// "uot", "dist", "normdist"; anything else is a ConfigError
Method parse_method(const std::string& name);
std::string_view to_string(Method method);

// Per timepoint, a lesion table or a mask must exist; a mask without a table
// derives the table from connected components. Tables, masks, and the
// reference graph must agree on lesion counts.
CaseBundle load_case(const std::filesystem::path& case_dir);

// Fills per-lesion cues that are still unset: trust from the deformation
// field's Jacobian over each mask component (field and mask on one grid),
// appearance from patch correlation between ct0 and ct1_warped. Volumes that
// are absent skip their cue; volumes that are present but on mismatched grids
// are an InputError.
void enrich_with_volumes(CaseBundle& bundle, const io::RunConfig& config);

// Solver byproducts only exist for the uot method.
struct MethodOutput {
  EvolutionGraph graph;
  std::optional<TransportPlan> plan;
  std::optional<CostBreakdown> cost;
  std::optional<AsymmetryPrior> prior;
};

MethodOutput run_method(const CaseBundle& bundle, Method method, const io::RunConfig& config);

// graph.txt always; plan.txt, cost.txt, prior.txt when present
void write_match_outputs(const std::filesystem::path& out_dir, const MethodOutput& output);

// the six per-case scalars, in report order
inline constexpr std::array<std::string_view, 6> kBenchColumns = {
    "edge_precision", "edge_recall",           "edge_f1",
    "state_weighted_precision", "state_weighted_recall", "component_f1"};

using MetricVector = Eigen::Matrix<double, 6, 1>;

MetricVector report_scalars(const EvalReport& report);

struct BenchComparison {
  Method baseline = Method::Distance;
  std::string_view metric;  // one of kBenchColumns
  WilcoxonResult test;
};

struct BenchResult {
  std::vector<Method> methods;
  std::vector<std::string> case_ids;
  std::vector<std::vector<EvalReport>> reports;  // [case][method]
  Eigen::MatrixXd method_means;                  // methods x kBenchColumns
  std::vector<BenchComparison> comparisons;      // uot against each other method
};

// Subdirectories of suite_dir holding a lesion table or mask, sorted by name.
std::vector<std::filesystem::path> list_case_dirs(const std::filesystem::path& suite_dir);

// Runs every method on every case and evaluates against the reference. Cases
// run on `jobs` threads; results land in case-major slots, so the output is
// identical for any job count. Comparisons test uot above each other listed
// method on edge_f1, state_weighted_recall, component_f1.
BenchResult run_bench(const std::filesystem::path& suite_dir, const std::vector<Method>& methods,
                      const io::RunConfig& config, int jobs);

void write_bench_table(const std::filesystem::path& path, const BenchResult& bench);

}  // namespace lematch
