#include "rankone/rankone.h"

#include "rankone/error.hpp"
#include "rankone/experiments.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

using namespace rankone;

struct rankone_tower {
  std::unique_ptr<Workbench> bench;
};

struct rankone_plan {
  ExperimentPlan plan;
};

struct rankone_report {
  Report report;
  std::filesystem::path dir;
  std::string name;
  ReportFormat format = ReportFormat::json;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_error_name;

rankone_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return RANKONE_ERR_PARSE;
    case ErrorCode::validation_error:
    case ErrorCode::non_positive_cut:
    case ErrorCode::negative_spacer:
    case ErrorCode::malformed_rule:
    case ErrorCode::bounds_violated:
    case ErrorCode::unknown_name:
    case ErrorCode::unrealized_stochastic:
    case ErrorCode::unknown_family: return RANKONE_ERR_VALIDATION;
    case ErrorCode::io_error: return RANKONE_ERR_IO;
    case ErrorCode::invalid_argument: return RANKONE_ERR_ARGUMENT;
    default: return RANKONE_ERR_RUNTIME;
  }
}

rankone_status set_error(rankone_status status, std::string name, std::string message) {
  last_error_name = std::move(name);
  last_error = std::move(message);
  return status;
}

template <class F>
rankone_status guarded(F&& f) {
  last_error.clear();
  last_error_name.clear();
  try {
    f();
    return RANKONE_OK;
  } catch (const Error& e) {
    return set_error(status_for(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(RANKONE_ERR_INTERNAL, "OutOfMemory", "allocation failed");
  } catch (const std::exception& e) {
    return set_error(RANKONE_ERR_INTERNAL, "InternalError", e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

PlanOverrides overrides_from(const rankone_overrides* o) {
  PlanOverrides out;
  if (o && o->has_seed) out.seed = o->seed;
  if (o && o->has_budget) out.budget = o->budget;
  return out;
}

}  // namespace

extern "C" {

const char* rankone_version(void) { return kVersion; }
const char* rankone_last_error(void) { return last_error.c_str(); }
const char* rankone_last_error_name(void) { return last_error_name.c_str(); }
void rankone_string_free(char* s) { std::free(s); }

size_t rankone_catalog_count(void) { return catalog_names().size(); }

const char* rankone_catalog_name(size_t index) {
  static const std::vector<std::string> names = catalog_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

rankone_status rankone_heights_json(const char* catalog_name, int depth, uint64_t seed, char** out_json) {
  return guarded([&] {
    need(catalog_name, "catalog_name");
    need(out_json, "out_json");
    if (depth < 1) fail(ErrorCode::invalid_argument, "depth must be >= 1");
    const auto s = catalog(catalog_name);
    nlohmann::json arr = nlohmann::json::array();
    if (s.kind() == Kind::flow) {
      for (const auto& h : flow_heights(realize_flow(s, depth))) arr.push_back(h.str());
    } else {
      const auto r = s.is_stochastic() ? realize_stochastic(s, seed, depth) : realize(s, depth);
      for (const auto& l : heights(r).levels) arr.push_back(l.str());
    }
    *out_json = dup_string(arr.dump());
  });
}

rankone_status rankone_tower_create(const char* catalog_name, int base_stage, int depth, uint64_t seed,
                                    rankone_tower** out) {
  return guarded([&] {
    need(catalog_name, "catalog_name");
    need(out, "out");
    if (depth < 1) fail(ErrorCode::invalid_argument, "depth must be >= 1");
    const auto s = catalog(catalog_name);
    if (s.kind() == Kind::flow) fail(ErrorCode::invalid_argument, "towers are built for transformations only");
    const auto r = s.is_stochastic() ? realize_stochastic(s, seed, depth) : realize(s, depth);
    const int base = base_stage > 0 ? base_stage : default_base_stage(r);
    auto t = std::make_unique<rankone_tower>();
    t->bench = std::make_unique<Workbench>(std::make_shared<Tower>(r, base, depth));
    *out = t.release();
  });
}

void rankone_tower_destroy(rankone_tower* tower) { delete tower; }

size_t rankone_tower_alphabet_size(const rankone_tower* tower) {
  return tower ? tower->bench->tower().alphabet().size() : 0;
}

uint64_t rankone_tower_length(const rankone_tower* tower) {
  return tower ? tower->bench->tower().length(tower->bench->tower().depth()) : 0;
}

int rankone_tower_base_stage(const rankone_tower* tower) {
  return tower ? tower->bench->tower().base_stage() : 0;
}

rankone_status rankone_lag_counts(rankone_tower* tower, int64_t lag, uint64_t* out, size_t capacity) {
  return guarded([&] {
    need(tower, "tower");
    need(out, "out");
    const auto& t = tower->bench->tower();
    const std::size_t a = t.alphabet().size();
    if (capacity < a * a) fail(ErrorCode::invalid_argument, "output buffer holds fewer than size^2 entries");
    const std::int64_t mag = lag < 0 ? -lag : lag;
    const auto table = lag_counts_block(t, std::span<const std::int64_t>(&mag, 1));
    const auto c = table.at(lag);
    std::copy(c.begin(), c.end(), out);
  });
}

rankone_status rankone_corr(rankone_tower* tower, int64_t lag, double* out, size_t capacity) {
  return guarded([&] {
    need(tower, "tower");
    need(out, "out");
    const auto& d = tower->bench->corr(lag);
    if (capacity < d.values.size())
      fail(ErrorCode::invalid_argument, "output buffer holds fewer than size^2 entries");
    std::copy(d.values.begin(), d.values.end(), out);
  });
}

rankone_status rankone_plan_parse(const char* text, const rankone_overrides* overrides, rankone_plan** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    auto p = std::make_unique<rankone_plan>();
    p->plan = parse_config(text, overrides_from(overrides));
    *out = p.release();
  });
}

rankone_status rankone_plan_load(const char* path, const rankone_overrides* overrides, rankone_plan** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, std::string("cannot read '") + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    auto p = std::make_unique<rankone_plan>();
    p->plan = parse_config(text.str(), overrides_from(overrides));
    *out = p.release();
  });
}

void rankone_plan_destroy(rankone_plan* plan) { delete plan; }

rankone_status rankone_plan_echo_json(const rankone_plan* plan, char** out_json) {
  return guarded([&] {
    need(plan, "plan");
    need(out_json, "out_json");
    *out_json = dup_string(plan->plan.echo().dump(2));
  });
}

rankone_status rankone_plan_set_output(rankone_plan* plan, const char* dir, const char* name, int format) {
  return guarded([&] {
    need(plan, "plan");
    if (dir) plan->plan.output_dir = dir;
    if (name) {
      if (!*name) fail(ErrorCode::invalid_argument, "report name must not be empty");
      plan->plan.output_name = name;
    }
    if (format >= 0) {
      if (format > RANKONE_FORMAT_BOTH) fail(ErrorCode::invalid_argument, "unknown format");
      plan->plan.format = static_cast<ReportFormat>(format);
    }
  });
}

rankone_status rankone_plan_run(const rankone_plan* plan, rankone_report** out) {
  return guarded([&] {
    need(plan, "plan");
    need(out, "out");
    auto r = std::make_unique<rankone_report>();
    r->report = run_plan(plan->plan);
    r->dir = plan->plan.output_dir;
    r->name = plan->plan.output_name;
    r->format = plan->plan.format;
    *out = r.release();
  });
}

void rankone_report_destroy(rankone_report* report) { delete report; }

size_t rankone_report_experiment_count(const rankone_report* report) {
  return report ? report->report.experiments.size() : 0;
}

size_t rankone_report_failures(const rankone_report* report) {
  if (!report) return 0;
  std::size_t n = 0;
  for (const auto& e : report->report.experiments) n += e.ok ? 0 : 1;
  return n;
}

rankone_status rankone_report_json(const rankone_report* report, int include_wall_time, char** out_json) {
  return guarded([&] {
    need(report, "report");
    need(out_json, "out_json");
    *out_json = dup_string(report->report.to_json(include_wall_time != 0).dump(2));
  });
}

rankone_status rankone_report_emit(const rankone_report* report, char** out_paths) {
  return guarded([&] {
    need(report, "report");
    const auto paths = emit_report(report->report, report->dir, report->name, report->format);
    if (out_paths) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : paths) arr.push_back(p.string());
      *out_paths = dup_string(arr.dump());
    }
  });
}

}  // extern "C"
