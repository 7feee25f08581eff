#pragma once

// Declarative experiment plans: a line-oriented `section.key = value` config
// is parsed into a resolved plan, run against one tower, and reported as a
// schema-versioned JSON document and/or CSV tables.

#include "rankone/diagnostics.hpp"
#include "rankone/flow.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rankone {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kReportSchema = 1;

enum class ExperimentKind { limit_scan, converge, rigidity, mixing, disjointness, triple, flow_limit };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind(const std::string& name);

enum class ReportFormat { json, csv, both };
ReportFormat report_format(const std::string& name);

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // 1-based column of the value
};

/// Splits the text into entries. Throws ParseError("line L, column C: ...").
std::vector<ConfigEntry> parse_config_entries(const std::string& text);

/// Lag expressions: integers and terms in l<j> (= l_j) or h<j> (= l_j - 1),
/// e.g. "l9", "-2*l9", "h9+1". A stage range "l{6..9}" expands the whole
/// expression once per stage.
std::vector<std::int64_t> resolve_lags(const std::string& expression, const HeightsTable& heights);

struct ExperimentSpec {
  std::string id;
  ExperimentKind kind = ExperimentKind::limit_scan;
  std::vector<std::string> lag_expressions;
  std::vector<std::int64_t> lags;

  // limit-scan
  ClassifyOptions classify;
  std::optional<Rational> family_a;
  int geometric_terms = 20;
  // converge
  std::string family;
  FamilyParams family_params;
  int first_stage = 0, last_stage = 0;
  std::int64_t q = 1;
  std::int64_t offset = 0;
  // rigidity, converge, disjointness, triple
  double tolerance = 0.05;
  // mixing
  std::vector<LevelSet> sets;
  // disjointness
  CesaroOptions cesaro;
  // triple
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  LevelSet A, B, C;
  // flow-limit
  int stage = 0;
  FlowLimitOptions flow;
};

struct PlanOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
};

struct ExperimentPlan {
  std::optional<ValidatedSchedule> schedule;
  std::string source;  // "catalog:<name>" or "inline"
  std::optional<std::uint64_t> seed;
  int base_stage = 1;
  bool base_auto = true;
  int depth = 1;
  std::optional<std::uint64_t> budget;
  Engine engine = Engine::automatic;
  unsigned threads = 1;
  FlowOptions flow_options;
  std::vector<ExperimentSpec> experiments;
  std::filesystem::path output_dir = ".";
  std::string output_name = "report";
  ReportFormat format = ReportFormat::json;

  bool is_flow() const { return schedule && schedule->kind() == Kind::flow; }
  /// Fully resolved parameters, including every default.
  nlohmann::ordered_json echo() const;
};

/// Parses and validates. ParseError for syntax, ValidationError otherwise.
ExperimentPlan parse_config(const std::string& text, const PlanOverrides& overrides = {});

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentRecord {
  std::string id;
  ExperimentKind kind = ExperimentKind::limit_scan;
  bool ok = false;
  std::string error_code;
  std::string error_message;
  nlohmann::ordered_json result;
  std::vector<Table> tables;
};

struct Report {
  nlohmann::ordered_json plan;
  std::vector<ExperimentRecord> experiments;
  double wall_time = 0.0;

  bool all_ok() const;
  /// Deterministic document; wall time only when requested.
  nlohmann::ordered_json to_json(bool include_wall_time = true) const;
};

/// Runs every experiment in declaration order; a failing experiment becomes
/// an error record and the others still run.
Report run_plan(const ExperimentPlan& plan);

/// Writes <name>.json and/or <name>_<id>_<table>.csv into `dir`. Returns the
/// written paths. Throws IoError.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& dir,
                                               const std::string& name, ReportFormat format);

/// Shortest round-trip decimal.
std::string format_double(double value);

}  // namespace rankone
