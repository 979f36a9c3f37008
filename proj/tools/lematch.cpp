#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lematch/errors.hpp"
#include "lematch/io.hpp"
#include "lematch/metrics.hpp"
#include "lematch/pipeline.hpp"
#include "lematch/synth.hpp"

namespace fs = std::filesystem;

namespace {

lematch::io::RunConfig config_or_default(const std::string& config_path) {
  if (config_path.empty()) return {};
  return lematch::io::read_run_config(config_path);
}

int run(int argc, char** argv) {
  CLI::App app{"lesion correspondence across two imaging timepoints"};
  app.require_subcommand(1);

  std::string case_dir, config_path, method_name = "uot", out_path;
  CLI::App* match = app.add_subcommand("match", "match one case and write its evolution graph");
  match->add_option("case", case_dir, "case directory")->required();
  match->add_option("--config", config_path, "run configuration file");
  match->add_option("--method", method_name, "uot, dist, or normdist");
  match->add_option("--out", out_path, "output directory")->required();

  std::string spec_path, synth_out;
  int n_cases = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark suite");
  synth->add_option("spec", spec_path, "synth spec file")->required();
  synth->add_option("cases", n_cases, "number of cases")->required();
  synth->add_option("--out", synth_out, "suite output directory")->required();
  synth->add_option("--seed", seed, "override the spec file's base seed")
      ->each([&](const std::string&) { seed_given = true; });

  std::string pred_path, ref_path, report_path;
  CLI::App* eval = app.add_subcommand("eval", "score a predicted graph against a reference");
  eval->add_option("predicted", pred_path, "predicted graph file")->required();
  eval->add_option("reference", ref_path, "reference graph file")->required();
  eval->add_option("--out", report_path, "report output file")->required();

  std::string suite_dir, bench_config, table_path;
  std::vector<std::string> bench_methods;
  int jobs = 1;
  CLI::App* bench = app.add_subcommand("bench", "run every method over a suite");
  bench->add_option("suite", suite_dir, "suite directory of case subdirectories")->required();
  bench->add_option("--config", bench_config, "run configuration file");
  bench->add_option("--method", bench_methods, "methods to run (default: uot dist normdist)");
  bench->add_option("--out", table_path, "benchmark table output file")->required();
  bench->add_option("--jobs", jobs, "worker threads over cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  if (match->parsed()) {
    const lematch::io::RunConfig config = config_or_default(config_path);
    const lematch::Method method = lematch::parse_method(method_name);
    lematch::CaseBundle bundle = lematch::load_case(case_dir);
    lematch::enrich_with_volumes(bundle, config);
    lematch::write_match_outputs(out_path, lematch::run_method(bundle, method, config));
    return 0;
  }
  if (synth->parsed()) {
    lematch::SynthSpec spec = lematch::io::read_synth_spec(spec_path);
    if (seed_given) spec.seed = seed;
    lematch::generate_suite(n_cases, spec.seed, spec, synth_out);
    return 0;
  }
  if (eval->parsed()) {
    const lematch::EvalReport report = lematch::evaluate(lematch::io::read_graph(pred_path),
                                                         lematch::io::read_graph(ref_path));
    if (const fs::path parent = fs::path(report_path).parent_path(); !parent.empty())
      fs::create_directories(parent);
    lematch::io::write_report(report_path, report);
    return 0;
  }
  if (bench->parsed()) {
    const lematch::io::RunConfig config = config_or_default(bench_config);
    std::vector<lematch::Method> methods;
    if (bench_methods.empty()) {
      methods = {lematch::Method::Uot, lematch::Method::Distance, lematch::Method::NormDistance};
    } else {
      for (const std::string& name : bench_methods) methods.push_back(lematch::parse_method(name));
    }
    const lematch::BenchResult result = lematch::run_bench(suite_dir, methods, config, jobs);
    if (const fs::path parent = fs::path(table_path).parent_path(); !parent.empty())
      fs::create_directories(parent);
    lematch::write_bench_table(table_path, result);
    return 0;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lematch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const lematch::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const lematch::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const lematch::GenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
