#include "rankone/error.hpp"
#include "rankone/experiments.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace rankone;

namespace {

const char* kModified = R"(# limit scan on the modified Chacon map
construction.catalog = modified-chacon
plan.depth = 11
experiment.scan.kind = limit-scan
experiment.scan.lags = -l{6..8}
)";

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::invalid_argument;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rankone_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("entries and syntax errors") {
    const auto e = parse_config_entries("# c\n\n a.b = 1 # trailing\nx.y=two words\n");
    REQUIRE(e.size() == 2);
    CHECK(e[0].key == "a.b");
    CHECK(e[0].value == "1");
    CHECK(e[0].line == 3);
    CHECK(e[1].value == "two words");
    CHECK(code_of([] { parse_config_entries("a.b 1\n"); }) == ErrorCode::parse_error);
    CHECK(message_of([] { parse_config_entries("a.b = 1\n\n  a$b = 2\n"); }).find("line 3, column 4") !=
          std::string::npos);
    CHECK(code_of([] { parse_config_entries("a.b = 1\na.b = 2\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config_entries("ab = 1\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config_entries("a.b =\n"); }) == ErrorCode::parse_error);
  }

  TEST_CASE("lag expressions") {
    const auto hs = heights(catalog("modified-chacon"), 8);  // 1 4 13 40 121 364 1093 3280
    CHECK(resolve_lags("l5", hs) == std::vector<std::int64_t>{121});
    CHECK(resolve_lags("h5", hs) == std::vector<std::int64_t>{120});
    CHECK(resolve_lags("-2*l4 + 3", hs) == std::vector<std::int64_t>{-77});
    CHECK(resolve_lags("17", hs) == std::vector<std::int64_t>{17});
    CHECK(resolve_lags("-l{2..4}", hs) == std::vector<std::int64_t>{-4, -13, -40});
    CHECK(resolve_lags("2*l{3..4}+1", hs) == std::vector<std::int64_t>{27, 81});
    CHECK(code_of([&] { resolve_lags("l9", hs); }) == ErrorCode::validation_error);
    CHECK(code_of([&] { resolve_lags("l3 l4", hs); }) == ErrorCode::validation_error);
    CHECK(code_of([&] { resolve_lags("x", hs); }) == ErrorCode::validation_error);
  }

  TEST_CASE("minimal catalog plan") {
    const auto plan = parse_config(kModified);
    CHECK(plan.source == "catalog:modified-chacon");
    CHECK(plan.depth == 11);
    CHECK(plan.base_stage == 3);
    CHECK(plan.base_auto);
    REQUIRE(plan.experiments.size() == 1);
    CHECK(plan.experiments[0].lags == std::vector<std::int64_t>{-364, -1093, -3280});
    CHECK(plan.experiments[0].classify.window == 8);
  }

  TEST_CASE("budget picks the deepest fitting depth") {
    const auto plan = parse_config("construction.catalog = chacon\nplan.budget = 1000\n");
    CHECK(plan.depth == 9);  // l_9 = 511, l_10 = 1023
    const auto def = parse_config("construction.catalog = chacon\n");
    CHECK(def.depth == 24);  // default budget 2^24
    PlanOverrides o;
    o.budget = 100;
    CHECK(parse_config("construction.catalog = chacon\nplan.depth = 12\n", o).depth == 6);
  }

  TEST_CASE("inline constructions") {
    const auto plan = parse_config(
        "construction.kind = transformation\nconstruction.h1 = 0\nconstruction.cuts = 3\n"
        "construction.spacers = 0,1,0\nplan.depth = 5\n");
    CHECK(plan.source == "inline");
    CHECK(heights(realize(*plan.schedule, 5)).levels.back() == 121);
    const auto affine = parse_config(
        "construction.cuts_affine = 1, 1\nconstruction.bernoulli = 0.3\nplan.seed = 9\nplan.depth = 6\n");
    CHECK(affine.schedule->is_stochastic());
    CHECK(affine.schedule->cuts(4) == 5);
    CHECK(affine.seed == 9u);
    const auto flow = parse_config(
        "construction.kind = flow\nconstruction.h1 = 1\nconstruction.cuts_affine = 1,1\n"
        "construction.staircase = plain\nplan.depth = 5\n");
    CHECK(flow.is_flow());
    CHECK(flow.base_stage == 3);
  }

  TEST_CASE("validation errors") {
    CHECK(code_of([] {
            parse_config("construction.cuts = 3\nconstruction.bernoulli = 0.5\nplan.depth = 5\n");
          }) == ErrorCode::validation_error);
    CHECK(code_of([] { parse_config("construction.catalog = stochastic-chacon\nplan.depth = 5\n"); }) ==
          ErrorCode::validation_error);
    PlanOverrides seeded;
    seeded.seed = 3;
    CHECK_NOTHROW(parse_config("construction.catalog = stochastic-chacon\nplan.depth = 5\n", seeded));

    const auto cap = message_of([] {
      parse_config("construction.catalog = chacon\nplan.depth = 8\nexperiment.r.kind = rigidity\n"
                   "experiment.r.lags = l8\n");
    });
    CHECK(cap.find("cap l_J/4 = 63") != std::string::npos);

    CHECK(code_of([] { parse_config("construction.catalog = chacon\nplan.bogus = 1\n"); }) ==
          ErrorCode::validation_error);
    CHECK(code_of([] {
            parse_config("construction.catalog = chacon\nexperiment.a.kind = rigidity\n"
                         "experiment.a.lags = 1\nexperiment.a.window = 3\n");
          }) == ErrorCode::validation_error);
    CHECK(code_of([] { parse_config("construction.catalog = chacon\nexperiment.a.kind = dance\n"); }) ==
          ErrorCode::validation_error);
    CHECK(code_of([] { parse_config("construction.catalog = chacon\nexperiment.a.kind = flow-limit\n"); }) ==
          ErrorCode::validation_error);
    CHECK(code_of([] {
            parse_config("construction.catalog = chacon\nexperiment.a.kind = converge\n"
                         "experiment.a.family = nope\n");
          }) == ErrorCode::validation_error);
    CHECK(code_of([] { parse_config("construction.cuts = 1\nconstruction.spacers = 0\n"); }) ==
          ErrorCode::validation_error);
    CHECK(code_of([] { parse_config("other.key = 1\n"); }) == ErrorCode::parse_error);
  }

  TEST_CASE("echo lists every default") {
    const auto echo = parse_config(kModified).echo();
    CHECK(echo["plan"]["j0"] == 3);
    CHECK(echo["plan"]["engine"] == "auto");
    CHECK(echo["plan"]["seed"].is_null());
    CHECK(echo["experiments"][0]["window"] == 8);
    CHECK(echo["experiments"][0]["tolerance"] == 0.03);
    CHECK(echo["construction"]["stages"].size() == 11);
  }
}

TEST_SUITE("runner") {
  TEST_CASE("classifications match the direct classifier") {
    const auto plan = parse_config(kModified);
    const auto report = run_plan(plan);
    REQUIRE(report.all_ok());
    const auto& res = report.experiments[0].result;
    CHECK(res["verdict"] == "identified");

    Workbench bench(std::make_shared<Tower>(realize(catalog("modified-chacon"), 11), 3, 11));
    const auto direct = classify_limit(bench.joining(-1093), bench.window(8), bench.product());
    const auto& row = res["classifications"][1];
    CHECK(row["lag"] == -1093);
    CHECK(row["theta"].get<double>() == direct.theta);
    CHECK(row["coefficients"].get<std::vector<double>>() == direct.coefficients);
    CHECK(direct.coefficient(0) == doctest::Approx(0.5).epsilon(0.06));
  }

  TEST_CASE("deterministic modulo wall time") {
    const auto plan = parse_config(std::string(kModified) +
                                   "experiment.mix.kind = mixing\nexperiment.mix.lags = l{4..8}\n");
    const auto a = run_plan(plan).to_json(false).dump();
    const auto b = run_plan(plan).to_json(false).dump();
    CHECK(a == b);
    CHECK(run_plan(plan).to_json(true).contains("wall_time_seconds"));
  }

  TEST_CASE("failures are isolated") {
    auto plan = parse_config(std::string(kModified) +
                             "experiment.bad.kind = converge\nexperiment.bad.family = identity\n");
    plan.experiments[1].family = "no-such-family";
    const auto report = run_plan(plan);
    REQUIRE(report.experiments.size() == 2);
    CHECK(report.experiments[0].ok);
    CHECK_FALSE(report.experiments[1].ok);
    CHECK(report.experiments[1].error_code == "UnknownFamily");
    const auto j = report.to_json(false);
    CHECK(j["experiments"][1]["status"] == "error");
    CHECK(j["experiments"][0]["status"] == "ok");
  }

  TEST_CASE("every experiment kind runs") {
    const auto plan = parse_config(R"(
construction.catalog = stochastic-chacon
plan.seed = 5
plan.depth = 9
experiment.a.kind = limit-scan
experiment.a.lags = 2*l6
experiment.b.kind = converge
experiment.b.family = stochastic
experiment.b.family_m = 2
experiment.b.q = 2
experiment.c.kind = rigidity
experiment.c.lags = l{3..6}
experiment.d.kind = mixing
experiment.d.lags = l{3..6}
experiment.d.sets = 0+1, *
experiment.e.kind = disjointness
experiment.e.terms = 50
experiment.f.kind = triple
experiment.f.pairs = 0:0, 1:l{4..5}
)");
    const auto report = run_plan(plan);
    CHECK(report.all_ok());
    for (const auto& e : report.experiments) CHECK(e.result.contains("verdict"));
    CHECK_FALSE(report.experiments[0].result["classifications"][0]["best_family"]["name"].get<std::string>().empty());
    CHECK(plan.experiments[5].pairs.size() == 3);
  }

  TEST_CASE("flow plan") {
    const auto plan = parse_config(
        "construction.catalog = staircase-flow\nplan.depth = 9\nexperiment.f.kind = flow-limit\n");
    CHECK(plan.experiments[0].stage == 7);
    const auto report = run_plan(plan);
    REQUIRE(report.all_ok());
    CHECK(report.experiments[0].result["orientation"] == "negative");
    CHECK(report.experiments[0].result["lag"].get<std::string>() == flow_heights(realize_flow(catalog("staircase-flow"), 7)).back().str());
  }
}

TEST_SUITE("report") {
  TEST_CASE("empty experiment list") {
    const auto plan = parse_config("construction.catalog = chacon\nplan.depth = 4\n");
    const auto dir = scratch_dir("empty");
    const auto paths = emit_report(run_plan(plan), dir, "r", ReportFormat::json);
    REQUIRE(paths.size() == 1);
    const auto j = nlohmann::json::parse(slurp(paths[0]));
    CHECK(j["experiments"].is_array());
    CHECK(j["experiments"].empty());
    CHECK(j["schema_version"] == kReportSchema);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("matrix CSV has lags x alphabet^2 rows") {
    const auto plan = parse_config(kModified);
    const auto dir = scratch_dir("csv");
    const auto paths = emit_report(run_plan(plan), dir, "r", ReportFormat::both);
    CHECK(paths.size() == 3);
    const auto m = slurp(dir / "r_scan_matrices.csv");
    CHECK(m.rfind("lag,a,b,value\n", 0) == 0);
    CHECK(lines(m) == 1 + 3 * 14 * 14);
    const auto c = slurp(dir / "r_scan_classification.csv");
    CHECK(c.rfind("lag,coeff_index,coeff,theta,residual\n", 0) == 0);
    CHECK(lines(c) == 1 + 3 * 17);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("JSON round-trips doubles") {
    const auto report = run_plan(parse_config(kModified));
    const auto j = report.to_json(false);
    const auto back = nlohmann::ordered_json::parse(j.dump(2));
    CHECK(back == j);
    for (double x : {0.1, 1.0 / 3, 2.0 / 7 * 1e-300, 123456789.123456789}) {
      CHECK(std::stod(format_double(x)) == x);
      CHECK(nlohmann::json::parse(nlohmann::json(x).dump()).get<double>() == x);
    }
    CHECK(format_double(0.5) == "0.5");
  }

  TEST_CASE("unwritable output") {
    const auto report = run_plan(parse_config("construction.catalog = chacon\nplan.depth = 4\n"));
    const auto dir = scratch_dir("io");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    CHECK(code_of([&] { emit_report(report, dir / "file" / "sub", "r", ReportFormat::json); }) ==
          ErrorCode::io_error);
    std::filesystem::remove_all(dir);
  }
}
