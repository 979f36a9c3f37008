#include <doctest.h>

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lematch/errors.hpp"
#include "lematch/io.hpp"
#include "lematch/pipeline.hpp"
#include "lematch/synth.hpp"
#include "lematch/volume.hpp"

namespace fs = std::filesystem;

using lematch::CaseBundle;
using lematch::enrich_with_volumes;
using lematch::load_case;
using lematch::make_field;
using lematch::make_volume;
using lematch::Method;
using lematch::MethodOutput;
using lematch::parse_method;
using lematch::run_bench;
using lematch::run_method;
using lematch::SynthCase;
using lematch::SynthSpec;
using lematch::Volume3D;
using lematch::write_bench_table;
using lematch::write_match_outputs;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.n_initial = 5;
  spec.volume_dims = {64, 64, 64};
  spec.events.merge_pairs = 1;
  spec.events.disappear = 1;
  spec.events.appear = 1;
  spec.growth_range = {0.9, 1.15};
  return spec;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("method names parse and print both ways") {
  CHECK(parse_method("uot") == Method::Uot);
  CHECK(parse_method("dist") == Method::Distance);
  CHECK(parse_method("normdist") == Method::NormDistance);
  for (const Method m : {Method::Uot, Method::Distance, Method::NormDistance})
    CHECK(parse_method(std::string(to_string(m))) == m);
  CHECK_THROWS_AS(parse_method("nearest"), lematch::ConfigError);
  CHECK_THROWS_AS(parse_method(""), lematch::ConfigError);
}

TEST_CASE("load_case reads a full synthetic case directory") {
  const fs::path dir = fresh_dir("lematch_pipe_full");
  const SynthCase c = lematch::generate_case(small_spec(61));
  lematch::write_case(dir / "case_000", c);

  const CaseBundle bundle = load_case(dir / "case_000");
  CHECK(bundle.case_id == "case_000");
  CHECK(bundle.set0.size() == c.set0.size());
  CHECK(bundle.set1.size() == c.set1.size());
  REQUIRE(bundle.mask0.has_value());
  REQUIRE(bundle.mask1.has_value());
  CHECK((bundle.mask0->data == c.mask0.data).all());
  REQUIRE(bundle.reference.has_value());
  CHECK(*bundle.reference == c.reference);
  CHECK_FALSE(bundle.ct0.has_value());
  CHECK_FALSE(bundle.field.has_value());
}

TEST_CASE("load_case derives lesion tables from masks alone") {
  const fs::path dir = fresh_dir("lematch_pipe_masks") / "m";
  fs::create_directories(dir);
  const SynthCase c = lematch::generate_case(small_spec(62));
  lematch::io::write_volume(dir / "mask0.vh", c.mask0, lematch::io::VolumeDType::UInt8);
  lematch::io::write_volume(dir / "mask1.vh", c.mask1, lematch::io::VolumeDType::UInt8);

  const CaseBundle bundle = load_case(dir);
  REQUIRE(bundle.set0.size() == c.set0.size());
  REQUIRE(bundle.set1.size() == c.set1.size());
  for (int i = 0; i < bundle.set0.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    CHECK(bundle.set0.lesions[idx].centroid.isApprox(c.set0.lesions[idx].centroid));
    CHECK(bundle.set0.lesions[idx].volume == doctest::Approx(c.set0.lesions[idx].volume));
  }
  CHECK_FALSE(bundle.reference.has_value());
}

TEST_CASE("load_case validates counts and existence") {
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_case(fs::temp_directory_path() / "lematch_no_such_case"),
                    lematch::InputError);
  }
  SUBCASE("empty directory") {
    const fs::path dir = fresh_dir("lematch_pipe_empty");
    CHECK_THROWS_AS(load_case(dir), lematch::InputError);
  }
  SUBCASE("table and mask disagree on count") {
    const fs::path dir = fresh_dir("lematch_pipe_mismatch");
    const SynthCase c = lematch::generate_case(small_spec(63));
    lematch::write_case(dir, c);
    lematch::LesionSet padded = c.set0;
    padded.lesions.push_back(lematch::make_lesion(99, {1.0, 1.0, 1.0}, 4.0));
    lematch::io::write_lesion_table(dir / "lesions0.txt", padded);
    CHECK_THROWS_AS(load_case(dir), lematch::InputError);
  }
  SUBCASE("reference size mismatch") {
    const fs::path dir = fresh_dir("lematch_pipe_badref");
    const SynthCase c = lematch::generate_case(small_spec(64));
    lematch::write_case(dir, c);
    lematch::EvolutionGraph wrong = c.reference;
    wrong.n1 += 1;
    wrong.followup_states.push_back(lematch::EventLabel::New);
    lematch::io::write_graph(dir / "reference_graph.txt", wrong);
    CHECK_THROWS_AS(load_case(dir), lematch::InputError);
  }
}

TEST_CASE("enrichment fills trust and appearance only where absent") {
  const fs::path dir = fresh_dir("lematch_pipe_enrich");
  const SynthCase c = lematch::generate_case(small_spec(65));
  lematch::write_case(dir, c);

  // identity deformation on the mask grid and a shared intensity ramp
  const lematch::DeformationField field =
      make_field(c.mask0.dims, c.mask0.spacing, c.mask0.origin);
  lematch::io::write_field(dir / "field.vh", field);
  Volume3D ct = make_volume(c.mask0.dims, c.mask0.spacing, c.mask0.origin);
  for (int z = 0; z < ct.dims[2]; ++z)
    for (int y = 0; y < ct.dims[1]; ++y)
      for (int x = 0; x < ct.dims[0]; ++x) ct(x, y, z) = x + 2.0 * y + 3.0 * z;
  lematch::io::write_volume(dir / "ct0.vh", ct, lematch::io::VolumeDType::Float64);
  lematch::io::write_volume(dir / "ct1_warped.vh", ct, lematch::io::VolumeDType::Float64);

  CaseBundle bundle = load_case(dir);
  REQUIRE(bundle.field.has_value());
  REQUIRE(bundle.ct0.has_value());
  bundle.set0.lesions[0].trust = 0.3;
  bundle.set1.lesions[0].appearance = 0.2;

  enrich_with_volumes(bundle, lematch::io::RunConfig{});

  // identity field: every filled trust is exactly neutral, presets survive
  REQUIRE(bundle.set0.lesions[0].trust.has_value());
  CHECK(*bundle.set0.lesions[0].trust == doctest::Approx(0.3));
  for (int i = 1; i < bundle.set0.size(); ++i) {
    REQUIRE(bundle.set0.lesions[static_cast<std::size_t>(i)].trust.has_value());
    CHECK(*bundle.set0.lesions[static_cast<std::size_t>(i)].trust ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const lematch::LesionInstance& lesion : bundle.set1.lesions) {
    REQUIRE(lesion.trust.has_value());
    CHECK(*lesion.trust == doctest::Approx(1.0).epsilon(1e-12));
  }

  // identical intensity volumes: perfect patch correlation, presets survive
  REQUIRE(bundle.set1.lesions[0].appearance.has_value());
  CHECK(*bundle.set1.lesions[0].appearance == doctest::Approx(0.2));
  for (int j = 1; j < bundle.set1.size(); ++j) {
    REQUIRE(bundle.set1.lesions[static_cast<std::size_t>(j)].appearance.has_value());
    CHECK(*bundle.set1.lesions[static_cast<std::size_t>(j)].appearance ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  for (const lematch::LesionInstance& lesion : bundle.set0.lesions) {
    REQUIRE(lesion.appearance.has_value());
    CHECK(*lesion.appearance == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("enrichment rejects inconsistent grids") {
  const SynthCase c = lematch::generate_case(small_spec(66));
  CaseBundle bundle;
  bundle.case_id = "grid";
  bundle.set0 = c.set0;
  bundle.set1 = c.set1;
  bundle.mask0 = c.mask0;

  SUBCASE("field grid differs from the mask grid") {
    bundle.field = make_field({32, 32, 32}, {2, 2, 2}, {0, 0, 0});
    CHECK_THROWS_AS(enrich_with_volumes(bundle, lematch::io::RunConfig{}), lematch::InputError);
  }
  SUBCASE("ct pair grids differ") {
    bundle.ct0 = make_volume({16, 16, 16}, {1, 1, 1}, {0, 0, 0});
    bundle.ct1_warped = make_volume({16, 16, 16}, {1, 1, 1}, {5, 0, 0});
    CHECK_THROWS_AS(enrich_with_volumes(bundle, lematch::io::RunConfig{}), lematch::InputError);
  }
  SUBCASE("volumes absent is a no-op") {
    enrich_with_volumes(bundle, lematch::io::RunConfig{});
    for (const lematch::LesionInstance& lesion : bundle.set0.lesions)
      CHECK_FALSE(lesion.trust.has_value());
  }
}

TEST_CASE("run_method produces solver byproducts only for uot") {
  const SynthCase c = lematch::generate_case(small_spec(67));
  CaseBundle bundle;
  bundle.set0 = c.set0;
  bundle.set1 = c.set1;
  const lematch::io::RunConfig config;

  const MethodOutput uot = run_method(bundle, Method::Uot, config);
  CHECK(uot.plan.has_value());
  CHECK(uot.cost.has_value());
  CHECK(uot.prior.has_value());
  CHECK(uot.graph.n0 == c.set0.size());

  for (const Method m : {Method::Distance, Method::NormDistance}) {
    const MethodOutput baseline = run_method(bundle, m, config);
    CHECK_FALSE(baseline.plan.has_value());
    CHECK_FALSE(baseline.cost.has_value());
    CHECK_FALSE(baseline.prior.has_value());
    CHECK(baseline.graph.n1 == c.set1.size());
  }
}

TEST_CASE("write_match_outputs writes the files its method produced") {
  const SynthCase c = lematch::generate_case(small_spec(68));
  CaseBundle bundle;
  bundle.set0 = c.set0;
  bundle.set1 = c.set1;
  const lematch::io::RunConfig config;

  const fs::path dir = fresh_dir("lematch_pipe_out");
  const MethodOutput uot = run_method(bundle, Method::Uot, config);
  write_match_outputs(dir / "uot", uot);
  CHECK(lematch::io::read_graph(dir / "uot" / "graph.txt") == uot.graph);
  CHECK(fs::exists(dir / "uot" / "plan.txt"));
  CHECK(fs::exists(dir / "uot" / "cost.txt"));
  CHECK(fs::exists(dir / "uot" / "prior.txt"));

  const MethodOutput dist = run_method(bundle, Method::Distance, config);
  write_match_outputs(dir / "dist", dist);
  CHECK(lematch::io::read_graph(dir / "dist" / "graph.txt") == dist.graph);
  CHECK_FALSE(fs::exists(dir / "dist" / "plan.txt"));
  CHECK_FALSE(fs::exists(dir / "dist" / "cost.txt"));
  CHECK_FALSE(fs::exists(dir / "dist" / "prior.txt"));
}

TEST_CASE("run_bench is deterministic across job counts and writes one row per case and method") {
  const fs::path suite = fresh_dir("lematch_pipe_suite");
  lematch::generate_suite(5, 700, small_spec(0), suite);
  const lematch::io::RunConfig config;
  const std::vector<Method> methods = {Method::Uot, Method::Distance, Method::NormDistance};

  const lematch::BenchResult serial = run_bench(suite, methods, config, 1);
  const lematch::BenchResult threaded = run_bench(suite, methods, config, 3);

  REQUIRE(serial.case_ids.size() == 5);
  CHECK(serial.case_ids.front() == "case_000");
  CHECK(serial.case_ids == threaded.case_ids);
  REQUIRE(serial.reports.size() == 5);
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t m = 0; m < methods.size(); ++m)
      CHECK(lematch::report_scalars(serial.reports[k][m]) ==
            lematch::report_scalars(threaded.reports[k][m]));
  CHECK(serial.method_means == threaded.method_means);
  CHECK((serial.method_means.array() >= 0.0).all());
  CHECK((serial.method_means.array() <= 1.0).all());

  // uot against two baselines on three metrics
  REQUIRE(serial.comparisons.size() == 6);
  for (const lematch::BenchComparison& comparison : serial.comparisons) {
    CHECK(comparison.test.n_used <= 5);
    if (comparison.test.applicable) {
      CHECK(comparison.test.p_value > 0.0);
      CHECK(comparison.test.p_value <= 1.0);
    }
  }

  const fs::path table1 = suite / "bench1.txt";
  const fs::path table2 = suite / "bench2.txt";
  write_bench_table(table1, serial);
  write_bench_table(table2, threaded);
  const std::string text = slurp(table1);
  CHECK(text == slurp(table2));
  CHECK(text.find("cases 5") != std::string::npos);
  CHECK(text.find("mean uot") != std::string::npos);
  CHECK(text.find("wilcoxon edge_f1 uot dist") != std::string::npos);

  std::size_t rows = 0;
  for (std::size_t at = text.find("\ncase "); at != std::string::npos;
       at = text.find("\ncase ", at + 1))
    ++rows;
  CHECK(rows == 15);
}

TEST_CASE("run_bench rejects bad arguments and missing references") {
  const fs::path suite = fresh_dir("lematch_pipe_badsuite");
  const lematch::io::RunConfig config;

  SUBCASE("empty suite directory") {
    CHECK_THROWS_AS(run_bench(suite, {Method::Uot}, config, 1), lematch::InputError);
  }
  SUBCASE("no methods") {
    CHECK_THROWS_AS(run_bench(suite, {}, config, 1), lematch::ConfigError);
  }
  SUBCASE("bad job count") {
    CHECK_THROWS_AS(run_bench(suite, {Method::Uot}, config, 0), lematch::ConfigError);
  }
  SUBCASE("case without a reference graph") {
    const SynthCase c = lematch::generate_case(small_spec(69));
    lematch::write_case(suite / "case_000", c);
    fs::remove(suite / "case_000" / "reference_graph.txt");
    CHECK_THROWS_AS(run_bench(suite, {Method::Uot}, config, 2), lematch::InputError);
  }
}

TEST_CASE("single-case suites mark every comparison as not applicable") {
  const fs::path suite = fresh_dir("lematch_pipe_single");
  lematch::generate_suite(1, 710, small_spec(0), suite);
  const lematch::BenchResult bench =
      run_bench(suite, {Method::Uot, Method::Distance}, lematch::io::RunConfig{}, 1);
  REQUIRE(bench.comparisons.size() == 3);
  for (const lematch::BenchComparison& comparison : bench.comparisons)
    CHECK_FALSE(comparison.test.applicable);

  const fs::path table = suite / "bench.txt";
  write_bench_table(table, bench);
  CHECK(slurp(table).find("n/a") != std::string::npos);
}

TEST_CASE("bench without the uot method has no comparisons") {
  const fs::path suite = fresh_dir("lematch_pipe_nouot");
  lematch::generate_suite(2, 720, small_spec(0), suite);
  const lematch::BenchResult bench =
      run_bench(suite, {Method::Distance, Method::NormDistance}, lematch::io::RunConfig{}, 1);
  CHECK(bench.comparisons.empty());
  CHECK(bench.method_means.rows() == 2);
}