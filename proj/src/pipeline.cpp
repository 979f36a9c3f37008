#include "lematch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "lematch/baselines.hpp"
#include "lematch/errors.hpp"

namespace fs = std::filesystem;

namespace lematch {

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

// nearest-centroid assignment of mask components to table lesions; must be
// one-to-one, otherwise the two descriptions disagree
std::vector<int> assign_components(const std::vector<LesionInstance>& components,
                                   const LesionSet& set, const std::string& what) {
  if (static_cast<int>(components.size()) != set.size())
    throw InputError(what + ": mask has " + std::to_string(components.size()) +
                     " components but the lesion table has " + std::to_string(set.size()));
  std::vector<int> target(components.size(), -1);
  std::vector<char> taken(components.size(), 0);
  for (std::size_t k = 0; k < components.size(); ++k) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < set.size(); ++i) {
      const double d =
          (components[k].centroid - set.lesions[static_cast<std::size_t>(i)].centroid).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (taken[static_cast<std::size_t>(best)])
      throw InputError(what + ": mask components do not align with the lesion table");
    taken[static_cast<std::size_t>(best)] = 1;
    target[k] = best;
  }
  return target;
}

void fill_trust(const Volume3D& mask, const Volume3D& jac, LesionSet& set,
                const io::RunConfig& config, const std::string& what) {
  if (!same_grid(mask, jac))
    throw InputError(what + ": mask and deformation field grids differ");
  const bool any_missing =
      std::any_of(set.lesions.begin(), set.lesions.end(),
                  [](const LesionInstance& l) { return !l.trust.has_value(); });
  if (!any_missing) return;

  Volume3D labels;
  const std::vector<LesionInstance> components = connected_components(mask, labels);
  const std::vector<int> target = assign_components(components, set, what);
  for (std::size_t k = 0; k < components.size(); ++k) {
    LesionInstance& lesion = set.lesions[static_cast<std::size_t>(target[k])];
    if (lesion.trust) continue;
    Volume3D lesion_mask = make_volume(mask.dims, mask.spacing, mask.origin);
    lesion_mask.data = (labels.data == static_cast<double>(k) + 1.0).cast<double>();
    lesion.trust = lesion_trust(lesion_mask, jac, config.match.beta, config.match.dilation_radius,
                                {config.jacobian_clip_min, config.jacobian_clip_max});
  }
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "uot") return Method::Uot;
  if (name == "dist") return Method::Distance;
  if (name == "normdist") return Method::NormDistance;
  throw ConfigError("unknown method '" + name + "' (expected uot, dist, or normdist)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Uot: return "uot";
    case Method::Distance: return "dist";
    case Method::NormDistance: return "normdist";
  }
  throw ConfigError("unknown method value");
}

CaseBundle load_case(const fs::path& case_dir) {
  if (!fs::is_directory(case_dir))
    throw InputError("case directory not found: " + case_dir.string());

  CaseBundle bundle;
  bundle.case_id = fs::weakly_canonical(case_dir).filename().string();

  const auto load_side = [&](const char* table_name, const char* mask_name, Timepoint timepoint,
                             std::optional<Volume3D>& mask_out) {
    const fs::path table_path = case_dir / table_name;
    const fs::path mask_path = case_dir / mask_name;
    if (fs::exists(mask_path)) mask_out = io::read_volume(mask_path);
    if (fs::exists(table_path)) {
      LesionSet set = io::read_lesion_table(table_path, timepoint);
      if (mask_out) {
        const std::size_t found = connected_components(*mask_out).size();
        if (static_cast<int>(found) != set.size())
          throw InputError(table_path.string() + ": table has " + std::to_string(set.size()) +
                           " lesions but the mask has " + std::to_string(found) + " components");
      }
      return set;
    }
    if (mask_out) return make_lesion_set(timepoint, connected_components(*mask_out));
    throw InputError(case_dir.string() + ": need " + table_name + " or " + mask_name);
  };

  bundle.set0 = load_side("lesions0.txt", "mask0.vh", Timepoint::Baseline, bundle.mask0);
  bundle.set1 = load_side("lesions1.txt", "mask1.vh", Timepoint::Followup, bundle.mask1);

  if (fs::exists(case_dir / "ct0.vh")) bundle.ct0 = io::read_volume(case_dir / "ct0.vh");
  if (fs::exists(case_dir / "ct1_warped.vh"))
    bundle.ct1_warped = io::read_volume(case_dir / "ct1_warped.vh");
  if (fs::exists(case_dir / "field.vh")) bundle.field = io::read_field(case_dir / "field.vh");

  if (fs::exists(case_dir / "reference_graph.txt")) {
    bundle.reference = io::read_graph(case_dir / "reference_graph.txt");
    if (bundle.reference->n0 != bundle.set0.size() || bundle.reference->n1 != bundle.set1.size())
      throw InputError(case_dir.string() +
                       ": reference graph size does not match the lesion tables");
  }
  return bundle;
}

void enrich_with_volumes(CaseBundle& bundle, const io::RunConfig& config) {
  config.validate();
  if (bundle.field) {
    const Volume3D jac = jacobian_determinant(*bundle.field);
    if (bundle.mask0) fill_trust(*bundle.mask0, jac, bundle.set0, config, bundle.case_id + "/mask0");
    if (bundle.mask1) fill_trust(*bundle.mask1, jac, bundle.set1, config, bundle.case_id + "/mask1");
  }
  if (bundle.ct0 && bundle.ct1_warped) {
    if (!same_grid(*bundle.ct0, *bundle.ct1_warped))
      throw InputError(bundle.case_id + ": ct0 and ct1_warped grids differ");
    for (LesionSet* set : {&bundle.set0, &bundle.set1})
      for (LesionInstance& lesion : set->lesions)
        if (!lesion.appearance)
          lesion.appearance = lesion_appearance(*bundle.ct0, *bundle.ct1_warped, lesion.centroid,
                                                config.match.patch_radius);
  }
}

MethodOutput run_method(const CaseBundle& bundle, Method method, const io::RunConfig& config) {
  config.validate();
  switch (method) {
    case Method::Uot: {
      MatchResult result = match_case(bundle.set0, bundle.set1, config.match);
      return {std::move(result.graph), std::move(result.plan), std::move(result.cost),
              std::move(result.prior)};
    }
    case Method::Distance:
      return {distance_bipartite(bundle.set0, bundle.set1, config.distance_threshold_mm),
              std::nullopt, std::nullopt, std::nullopt};
    case Method::NormDistance:
      return {normdist_bipartite(bundle.set0, bundle.set1, config.normdist_threshold,
                                 config.match.distance_cap),
              std::nullopt, std::nullopt, std::nullopt};
  }
  throw ConfigError("unknown method value");
}

void write_match_outputs(const fs::path& out_dir, const MethodOutput& output) {
  fs::create_directories(out_dir);
  io::write_graph(out_dir / "graph.txt", output.graph);
  if (output.plan) io::write_plan(out_dir / "plan.txt", *output.plan);
  if (output.cost) io::write_cost(out_dir / "cost.txt", *output.cost);
  if (output.prior) io::write_prior(out_dir / "prior.txt", *output.prior);
}

MetricVector report_scalars(const EvalReport& report) {
  MetricVector v;
  v << report.edge_precision, report.edge_recall, report.edge_f1,
      report.state_weighted_precision, report.state_weighted_recall, report.component_f1;
  return v;
}

std::vector<fs::path> list_case_dirs(const fs::path& suite_dir) {
  if (!fs::is_directory(suite_dir))
    throw InputError("suite directory not found: " + suite_dir.string());
  std::vector<fs::path> dirs;
  for (const fs::directory_entry& entry : fs::directory_iterator(suite_dir)) {
    if (!entry.is_directory()) continue;
    if (fs::exists(entry.path() / "lesions0.txt") || fs::exists(entry.path() / "mask0.vh"))
      dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (dirs.empty()) throw InputError("no case directories under: " + suite_dir.string());
  return dirs;
}

BenchResult run_bench(const fs::path& suite_dir, const std::vector<Method>& methods,
                      const io::RunConfig& config, int jobs) {
  if (methods.empty()) throw ConfigError("bench needs at least one method");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  config.validate();

  const std::vector<fs::path> case_dirs = list_case_dirs(suite_dir);
  const std::size_t n_cases = case_dirs.size();
  const std::size_t n_methods = methods.size();

  BenchResult bench;
  bench.methods = methods;
  bench.case_ids.resize(n_cases);
  bench.reports.assign(n_cases, std::vector<EvalReport>(n_methods));

  // work pool over cases; each slot is written by exactly one worker
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto work = [&] {
    while (!failed.load()) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_cases) return;
      try {
        CaseBundle bundle = load_case(case_dirs[k]);
        enrich_with_volumes(bundle, config);
        if (!bundle.reference)
          throw InputError("bench case missing reference graph: " + case_dirs[k].string());
        bench.case_ids[k] = bundle.case_id;
        for (std::size_t m = 0; m < n_methods; ++m) {
          const MethodOutput output = run_method(bundle, methods[m], config);
          bench.reports[k][m] = evaluate(output.graph, *bundle.reference);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n_cases);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  bench.method_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_methods), 6);
  for (std::size_t k = 0; k < n_cases; ++k)
    for (std::size_t m = 0; m < n_methods; ++m)
      bench.method_means.row(static_cast<Eigen::Index>(m)) +=
          report_scalars(bench.reports[k][m]).transpose();
  bench.method_means /= static_cast<double>(n_cases);

  const auto uot_it = std::find(methods.begin(), methods.end(), Method::Uot);
  if (uot_it != methods.end()) {
    const std::size_t u = static_cast<std::size_t>(uot_it - methods.begin());
    for (const int col : {2, 4, 5}) {
      for (std::size_t m = 0; m < n_methods; ++m) {
        if (m == u) continue;
        Eigen::VectorXd x(static_cast<Eigen::Index>(n_cases)), y(static_cast<Eigen::Index>(n_cases));
        for (std::size_t k = 0; k < n_cases; ++k) {
          x[static_cast<Eigen::Index>(k)] = report_scalars(bench.reports[k][u])[col];
          y[static_cast<Eigen::Index>(k)] = report_scalars(bench.reports[k][m])[col];
        }
        bench.comparisons.push_back({methods[m], kBenchColumns[static_cast<std::size_t>(col)],
                                     wilcoxon_signed_rank_greater(x, y)});
      }
    }
  }
  return bench;
}

void write_bench_table(const fs::path& path, const BenchResult& bench) {
  std::ostringstream out;
  out << "# per-case metric rows, per-method means, then one-sided signed-rank\n"
         "# tests of the uot rows against each other method\n";
  out << "cases " << bench.case_ids.size() << "\n";
  out << "methods";
  for (const Method m : bench.methods) out << " " << to_string(m);
  out << "\n";
  out << "columns case method";
  for (const std::string_view column : kBenchColumns) out << " " << column;
  out << "\n";
  for (std::size_t k = 0; k < bench.case_ids.size(); ++k)
    for (std::size_t m = 0; m < bench.methods.size(); ++m) {
      out << "case " << bench.case_ids[k] << " " << to_string(bench.methods[m]);
      const MetricVector v = report_scalars(bench.reports[k][m]);
      for (Eigen::Index c = 0; c < v.size(); ++c) out << " " << io::format_double(v[c]);
      out << "\n";
    }
  for (std::size_t m = 0; m < bench.methods.size(); ++m) {
    out << "mean " << to_string(bench.methods[m]);
    for (Eigen::Index c = 0; c < 6; ++c)
      out << " " << io::format_double(bench.method_means(static_cast<Eigen::Index>(m), c));
    out << "\n";
  }
  for (const BenchComparison& comparison : bench.comparisons) {
    out << "wilcoxon " << comparison.metric << " uot " << to_string(comparison.baseline);
    if (!comparison.test.applicable) {
      out << " n/a\n";
    } else {
      out << " n " << comparison.test.n_used << " statistic "
          << io::format_double(comparison.test.statistic) << " p "
          << io::format_double(comparison.test.p_value) << "\n";
    }
  }
  write_text_file(path, out.str());
}

}  // namespace lematch
