#include "rankone/experiments.hpp"

#include "rankone/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace rankone {

using nlohmann::ordered_json;

// ---- small parsers ----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void invalid(const std::string& where, const std::string& msg) {
  fail(ErrorCode::validation_error, where + ": " + msg);
}

std::int64_t parse_int(const std::string& where, const std::string& text) {
  std::int64_t v = 0;
  const auto t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    invalid(where, "expected an integer, got '" + t + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& where, const std::string& text) {
  std::uint64_t v = 0;
  const auto t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    invalid(where, "expected an unsigned integer, got '" + t + "'");
  return v;
}

double parse_double(const std::string& where, const std::string& text) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    invalid(where, "expected a number, got '" + t + "'");
  return v;
}

/// "p/q", an integer, or an exact decimal such as "0.3".
Rational parse_rational(const std::string& where, const std::string& text) {
  const auto t = trim(text);
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    const auto den = parse_int(where, t.substr(slash + 1));
    if (den == 0) invalid(where, "zero denominator");
    return Rational(BigInt(parse_int(where, t.substr(0, slash))), BigInt(den));
  }
  const auto dot = t.find('.');
  if (dot == std::string::npos) return Rational(BigInt(parse_int(where, t)));
  std::string digits = t.substr(0, dot) + t.substr(dot + 1);
  const auto frac = t.size() - dot - 1;
  if (frac == 0 || frac > 18) invalid(where, "bad decimal '" + t + "'");
  const bool negative = !digits.empty() && digits[0] == '-';
  if (negative || (!digits.empty() && digits[0] == '+')) digits.erase(0, 1);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
    invalid(where, "bad decimal '" + t + "'");
  BigInt num(digits);
  BigInt den = 1;
  for (std::size_t i = 0; i < frac; ++i) den *= 10;
  return Rational(negative ? BigInt(-num) : num, den);
}

bool parse_bool(const std::string& where, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  invalid(where, "expected true or false, got '" + t + "'");
}

std::vector<std::int64_t> parse_int_list(const std::string& where, const std::string& text) {
  std::vector<std::int64_t> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_int(where, item));
  return out;
}

std::string rational_string(const Rational& q) { return q.str(); }

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, p);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::limit_scan: return "limit-scan";
    case ExperimentKind::converge: return "converge";
    case ExperimentKind::rigidity: return "rigidity";
    case ExperimentKind::mixing: return "mixing";
    case ExperimentKind::disjointness: return "disjointness";
    case ExperimentKind::triple: return "triple";
    case ExperimentKind::flow_limit: return "flow-limit";
  }
  return "?";
}

ExperimentKind experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::limit_scan, ExperimentKind::converge, ExperimentKind::rigidity,
                 ExperimentKind::mixing, ExperimentKind::disjointness, ExperimentKind::triple,
                 ExperimentKind::flow_limit})
    if (to_string(k) == name) return k;
  fail(ErrorCode::validation_error, "unknown experiment kind '" + name + "'");
}

ReportFormat report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "both") return ReportFormat::both;
  fail(ErrorCode::validation_error, "format must be json, csv or both, got '" + name + "'");
}

// ---- config text ------------------------------------------------------------

std::vector<ConfigEntry> parse_config_entries(const std::string& text) {
  std::vector<ConfigEntry> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  auto error = [&](int col, const std::string& msg) {
    fail(ErrorCode::parse_error,
         "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string body = raw.substr(0, raw.find('#'));
    if (trim(body).empty()) continue;
    const auto eq = body.find('=');
    const auto first = body.find_first_not_of(" \t");
    if (eq == std::string::npos) error(static_cast<int>(first) + 1, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) error(static_cast<int>(first) + 1, "missing key");
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char c = key[i];
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-'))
        error(static_cast<int>(first + i) + 1, std::string("invalid character '") + c + "' in key");
    }
    if (key.find('.') == std::string::npos)
      error(static_cast<int>(first) + 1, "key '" + key + "' has no section");
    if (!seen.insert(key).second) error(static_cast<int>(first) + 1, "duplicate key '" + key + "'");
    const auto vstart = body.find_first_not_of(" \t", eq + 1);
    const std::string value = vstart == std::string::npos ? std::string() : trim(body.substr(vstart));
    if (value.empty()) error(static_cast<int>(eq) + 2, "missing value for '" + key + "'");
    out.push_back({key, value, line, static_cast<int>(vstart) + 1});
  }
  return out;
}

// ---- lag expressions --------------------------------------------------------

namespace {

BigInt eval_lag_expression(const std::string& expr, const HeightsTable& heights) {
  // expr := ['+'|'-'] term (('+'|'-') term)* ; term := int ['*' ref] | ref
  // ref := ('l'|'h') int
  std::size_t i = 0;
  const std::string s = [&] {
    std::string t;
    for (char c : expr)
      if (c != ' ' && c != '\t') t.push_back(c);
    return t;
  }();
  auto bad = [&](const std::string& msg) -> BigInt {
    fail(ErrorCode::validation_error, "lag '" + expr + "': " + msg);
  };
  if (s.empty()) return bad("empty expression");
  auto read_int = [&]() -> std::int64_t {
    const std::size_t b = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (b == i) bad("expected a number at offset " + std::to_string(b));
    return std::stoll(s.substr(b, i - b));
  };
  auto read_ref = [&]() -> BigInt {
    const char kind = s[i++];
    const auto j = read_int();
    if (j < 1 || j > heights.depth())
      bad("stage " + std::to_string(j) + " outside 1.." + std::to_string(heights.depth()));
    BigInt v = heights.at(static_cast<int>(j));
    return kind == 'h' ? BigInt(v - 1) : v;
  };
  BigInt total = 0;
  bool first = true;
  while (i < s.size() || first) {
    int sign = 1;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    } else if (!first) {
      bad("expected '+' or '-' at offset " + std::to_string(i));
    }
    first = false;
    if (i >= s.size()) bad("dangling sign");
    BigInt term;
    if (s[i] == 'l' || s[i] == 'h') {
      term = read_ref();
    } else {
      term = read_int();
      if (i < s.size() && s[i] == '*') {
        ++i;
        if (i >= s.size() || (s[i] != 'l' && s[i] != 'h')) bad("expected l<j> or h<j> after '*'");
        term *= read_ref();
      }
    }
    total += sign * term;
  }
  return total;
}

}  // namespace

std::vector<std::int64_t> resolve_lags(const std::string& expression, const HeightsTable& heights) {
  const auto open = expression.find('{');
  std::vector<std::string> expanded;
  if (open == std::string::npos) {
    expanded.push_back(expression);
  } else {
    const auto close = expression.find('}', open);
    const auto dots = expression.find("..", open);
    if (close == std::string::npos || dots == std::string::npos || dots > close)
      fail(ErrorCode::validation_error, "lag '" + expression + "': malformed stage range");
    const std::string range = expression.substr(open, close - open + 1);
    const auto a = parse_int("lag range", expression.substr(open + 1, dots - open - 1));
    const auto b = parse_int("lag range", expression.substr(dots + 2, close - dots - 2));
    if (a > b) fail(ErrorCode::validation_error, "lag '" + expression + "': empty stage range");
    for (auto j = a; j <= b; ++j) {
      std::string e = expression;
      for (auto pos = e.find(range); pos != std::string::npos; pos = e.find(range))
        e.replace(pos, range.size(), std::to_string(j));
      if (e.find('{') != std::string::npos)
        fail(ErrorCode::validation_error, "lag '" + expression + "': one stage range per expression");
      expanded.push_back(e);
    }
  }
  std::vector<std::int64_t> out;
  for (const auto& e : expanded) {
    const BigInt v = eval_lag_expression(e, heights);
    if (v > BigInt(std::numeric_limits<std::int64_t>::max()) ||
        v < BigInt(std::numeric_limits<std::int64_t>::min()))
      fail(ErrorCode::validation_error, "lag '" + e + "' does not fit 64 bits");
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

// ---- plan -------------------------------------------------------------------

namespace {

LevelSet parse_level_set(const std::string& where, const std::string& text, const Alphabet& alphabet) {
  LevelSet set;
  for (const auto& item : split(text, '+')) {
    if (item == "*") {
      set.push_back(alphabet.spacer());
      continue;
    }
    const auto v = parse_int(where, item);
    if (v < 0 || static_cast<std::uint64_t>(v) >= alphabet.base_levels)
      invalid(where, "level " + item + " outside 0.." + std::to_string(alphabet.base_levels - 1));
    set.push_back(static_cast<Symbol>(v));
  }
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

std::string level_set_text(const LevelSet& set, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += '+';
    out += set[i] == alphabet.spacer() ? std::string("*") : std::to_string(set[i]);
  }
  return out;
}

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::automatic: return "auto";
    case Engine::naive: return "naive";
    case Engine::block: return "block";
  }
  return "?";
}

std::string format_name(ReportFormat f) {
  switch (f) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::both: return "both";
  }
  return "?";
}

RealizedSchedule realize_any(const ExperimentPlan& plan, int depth) {
  return plan.schedule->is_stochastic() ? realize_stochastic(*plan.schedule, *plan.seed, depth)
                                        : realize(*plan.schedule, depth);
}

ValidatedSchedule build_construction(const std::map<std::string, ConfigEntry>& c, std::string& source) {
  auto has = [&](const char* k) { return c.count(std::string("construction.") + k) > 0; };
  auto get = [&](const char* k) { return c.at(std::string("construction.") + k).value; };
  auto where = [&](const char* k) {
    const auto& e = c.at(std::string("construction.") + k);
    return "construction." + std::string(k) + " (line " + std::to_string(e.line) + ")";
  };
  try {
    if (has("catalog")) {
      for (const auto& [key, e] : c)
        if (key != "construction.catalog")
          invalid(key, "catalog constructions take no other construction keys");
      source = "catalog:" + get("catalog");
      return catalog(get("catalog"));
    }
    source = "inline";
    ConstructionSchedule s;
    s.name = has("name") ? get("name") : "inline";
    if (has("kind")) {
      const auto k = get("kind");
      if (k == "transformation")
        s.kind = Kind::transformation;
      else if (k == "flow")
        s.kind = Kind::flow;
      else
        invalid(where("kind"), "expected transformation or flow");
    }
    s.h1 = has("h1") ? parse_rational(where("h1"), get("h1")) : Rational(s.kind == Kind::flow ? 1 : 0);
    if (s.kind == Kind::transformation && denominator(s.h1) != 1)
      invalid(where("h1"), "transformations need an integer h1");
    if (has("cuts") == has("cuts_affine")) invalid("construction", "give exactly one of cuts, cuts_affine");
    if (has("cuts")) {
      const auto rs = parse_int_list(where("cuts"), get("cuts"));
      s.cuts = rs.size() == 1 ? CutRule::constant(rs[0]) : CutRule::list(rs);
    } else {
      const auto ab = parse_int_list(where("cuts_affine"), get("cuts_affine"));
      if (ab.size() != 2) invalid(where("cuts_affine"), "expected 'slope, offset'");
      s.cuts = CutRule::affine(ab[0], ab[1]);
    }
    const int rules = has("spacers") + has("spacer_stages") + has("bernoulli") + has("staircase");
    if (rules != 1)
      invalid("construction", "give exactly one of spacers, spacer_stages, bernoulli, staircase");
    if (has("spacers")) s.spacers = SpacerRule::repeat(parse_int_list(where("spacers"), get("spacers")));
    if (has("spacer_stages")) {
      std::vector<std::vector<std::int64_t>> stages;
      for (const auto& st : split(get("spacer_stages"), ';'))
        stages.push_back(parse_int_list(where("spacer_stages"), st));
      s.spacers = SpacerRule::explicit_stages(std::move(stages));
    }
    if (has("bernoulli")) s.spacers = SpacerRule::bernoulli(parse_double(where("bernoulli"), get("bernoulli")));
    if (has("staircase")) {
      const auto v = trim(get("staircase"));
      if (v != "plain" && v != "divide-by-stage")
        invalid(where("staircase"), "expected plain or divide-by-stage");
      s.spacers = SpacerRule::staircase(v == "divide-by-stage");
    }
    if (has("bound_spacer") || has("bound_cut") || has("bound_derivative")) {
      if (!has("bound_spacer") || !has("bound_cut"))
        invalid("construction", "bounds need both bound_spacer and bound_cut");
      Bounds b;
      b.spacer = parse_int(where("bound_spacer"), get("bound_spacer"));
      b.cut = parse_int(where("bound_cut"), get("bound_cut"));
      if (has("bound_derivative"))
        b.derivative = parse_int(where("bound_derivative"), get("bound_derivative"));
      s.bounds = b;
    }
    static const std::set<std::string> known{
        "construction.kind", "construction.name", "construction.h1", "construction.cuts",
        "construction.cuts_affine", "construction.spacers", "construction.spacer_stages",
        "construction.bernoulli", "construction.staircase", "construction.bound_spacer",
        "construction.bound_cut", "construction.bound_derivative"};
    for (const auto& [key, e] : c)
      if (!known.count(key)) invalid(key, "unknown construction key");
    return validate(std::move(s));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::validation_error) throw;
    fail(ErrorCode::validation_error, std::string("construction: ") + e.what());
  }
}

void check_cap(const std::string& where, std::int64_t lag, std::uint64_t length) {
  const std::uint64_t cap = length / 4;
  const std::uint64_t mag = lag < 0 ? static_cast<std::uint64_t>(-lag) : static_cast<std::uint64_t>(lag);
  if (mag > cap)
    invalid(where, "lag " + std::to_string(lag) + " exceeds the cap l_J/4 = " + std::to_string(cap));
}

struct ParamReader {
  std::string id;
  std::map<std::string, ConfigEntry> params;
  std::set<std::string> used{"kind"};

  bool has(const std::string& k) const { return params.count(k) > 0; }
  const std::string& get(const std::string& k) {
    used.insert(k);
    return params.at(k).value;
  }
  std::string where(const std::string& k) const {
    return "experiment." + id + "." + k + " (line " + std::to_string(params.at(k).line) + ")";
  }
  void finish() const {
    for (const auto& [k, e] : params)
      if (!used.count(k))
        invalid("experiment." + id + "." + k + " (line " + std::to_string(e.line) + ")",
                "unknown parameter for this experiment kind");
  }
};

}  // namespace

ExperimentPlan parse_config(const std::string& text, const PlanOverrides& overrides) {
  const auto entries = parse_config_entries(text);
  std::map<std::string, ConfigEntry> construction, plan_keys, output;
  std::map<std::string, std::map<std::string, ConfigEntry>> experiments;
  std::vector<std::string> order;
  for (const auto& e : entries) {
    const auto dot = e.key.find('.');
    const std::string section = e.key.substr(0, dot);
    if (section == "construction") {
      construction.emplace(e.key, e);
    } else if (section == "plan") {
      plan_keys.emplace(e.key.substr(dot + 1), e);
    } else if (section == "output") {
      output.emplace(e.key.substr(dot + 1), e);
    } else if (section == "experiment") {
      const auto rest = e.key.substr(dot + 1);
      const auto dot2 = rest.find('.');
      if (dot2 == std::string::npos || dot2 == 0)
        fail(ErrorCode::parse_error, "line " + std::to_string(e.line) +
                                         ", column 1: expected experiment.<id>.<parameter>");
      const auto id = rest.substr(0, dot2);
      if (!experiments.count(id)) order.push_back(id);
      experiments[id].emplace(rest.substr(dot2 + 1), e);
    } else {
      fail(ErrorCode::parse_error,
           "line " + std::to_string(e.line) + ", column 1: unknown section '" + section + "'");
    }
  }
  if (construction.empty()) fail(ErrorCode::validation_error, "missing construction.* keys");

  ExperimentPlan plan;
  plan.schedule = build_construction(construction, plan.source);

  auto plan_where = [&](const std::string& k) {
    return "plan." + k + " (line " + std::to_string(plan_keys.at(k).line) + ")";
  };
  static const std::set<std::string> plan_known{"j0", "depth", "budget", "seed", "engine",
                                                "threads", "slabs", "time_bits"};
  for (const auto& [k, e] : plan_keys)
    if (!plan_known.count(k)) invalid("plan." + k, "unknown plan key");
  if (plan_keys.count("seed")) plan.seed = parse_u64(plan_where("seed"), plan_keys.at("seed").value);
  if (overrides.seed) plan.seed = overrides.seed;
  if (plan.schedule->is_stochastic() && !plan.seed)
    fail(ErrorCode::validation_error,
         "plan.seed: schedule '" + plan.schedule->name() + "' has random spacers and needs a seed");
  if (plan_keys.count("engine")) {
    const auto v = plan_keys.at("engine").value;
    if (v == "auto")
      plan.engine = Engine::automatic;
    else if (v == "naive")
      plan.engine = Engine::naive;
    else if (v == "block")
      plan.engine = Engine::block;
    else
      invalid(plan_where("engine"), "expected auto, naive or block");
  }
  if (plan_keys.count("threads")) {
    const auto t = parse_int(plan_where("threads"), plan_keys.at("threads").value);
    if (t < 1 || t > 256) invalid(plan_where("threads"), "threads must lie in 1..256");
    plan.threads = static_cast<unsigned>(t);
  }
  if (plan_keys.count("slabs")) {
    const auto v = parse_int(plan_where("slabs"), plan_keys.at("slabs").value);
    if (v < 2 || v > 1024) invalid(plan_where("slabs"), "slab count must lie in 2..1024");
    plan.flow_options.slabs = static_cast<std::size_t>(v);
  }
  if (plan_keys.count("time_bits"))
    plan.flow_options.time_bits =
        static_cast<int>(parse_int(plan_where("time_bits"), plan_keys.at("time_bits").value));

  // depth: explicit, or the largest J whose size fits the budget
  constexpr int kMaxDepth = 64;
  int depth = 0;  // 0: chosen from the budget
  if (plan_keys.count("depth")) {
    const auto d = parse_int(plan_where("depth"), plan_keys.at("depth").value);
    if (d < 1 || d > kMaxDepth) invalid(plan_where("depth"), "depth must lie in 1..64");
    depth = static_cast<int>(d);
  }
  if (plan_keys.count("budget")) plan.budget = parse_u64(plan_where("budget"), plan_keys.at("budget").value);
  if (overrides.budget) {
    plan.budget = overrides.budget;
    depth = 0;
  }
  if (!depth && !plan.budget) plan.budget = std::uint64_t{1} << 24;
  if (depth && plan.budget) invalid("plan", "give either depth or budget, not both");

  std::optional<int> j0;
  if (plan_keys.count("j0") && plan_keys.at("j0").value != "auto") {
    const auto v = parse_int(plan_where("j0"), plan_keys.at("j0").value);
    if (v < 1) invalid(plan_where("j0"), "j0 must be >= 1");
    j0 = static_cast<int>(v);
  }
  plan.base_auto = !j0;

  if (plan.is_flow()) {
    const RealizedFlow full = realize_flow(*plan.schedule, kMaxDepth);
    const int base = j0 ? *j0 : default_flow_base_stage(full);
    if (!depth) {
      // largest J whose base-copy count prod_{k=j0}^{J-1} r_k fits the budget
      BigInt copies = 1;
      int J = base;
      while (J < kMaxDepth) {
        copies *= full.stage(J).cuts;
        if (copies > BigInt(*plan.budget)) break;
        ++J;
      }
      depth = J;
    }
    plan.depth = depth;
    plan.base_stage = base;
    if (plan.base_stage > plan.depth) invalid("plan.j0", "base stage exceeds the depth");
  } else {
    if (!depth) {
      int J = 1;
      const auto hs = heights(realize_any(plan, kMaxDepth));
      while (J < kMaxDepth && hs.at(J + 1) <= BigInt(*plan.budget) &&
             hs.at(J + 1) < BigInt(kMaxWordLength))
        ++J;
      depth = J;
    }
    plan.depth = depth;
    const auto realized = realize_any(plan, plan.depth);
    plan.base_stage = j0 ? *j0 : default_base_stage(realized);
    if (plan.base_stage > plan.depth) invalid("plan.j0", "base stage exceeds the depth");
    if (heights(realized).levels.back() >= BigInt(kMaxWordLength))
      invalid("plan.depth", "word length l_J exceeds 2^62");
  }

  if (output.count("dir")) plan.output_dir = output.at("dir").value;
  if (output.count("name")) plan.output_name = output.at("name").value;
  if (output.count("format")) plan.format = report_format(output.at("format").value);
  for (const auto& [k, e] : output)
    if (k != "dir" && k != "name" && k != "format") invalid("output." + k, "unknown output key");

  // experiments
  std::optional<HeightsTable> hs;
  std::uint64_t length = 0;
  std::optional<Alphabet> alphabet;
  std::optional<RealizedFlow> flow;
  if (plan.is_flow()) {
    flow = realize_flow(*plan.schedule, plan.depth);
  } else {
    const auto realized = realize_any(plan, plan.depth);
    hs = heights(realized);
    length = *to_u64(hs->levels.back());
    alphabet = Alphabet{*to_u64(hs->at(plan.base_stage))};
    if (alphabet->base_levels > kMaxBaseLevels)
      invalid("plan.j0", "base stage has more than " + std::to_string(kMaxBaseLevels) + " levels");
  }

  for (const auto& id : order) {
    ParamReader r{id, experiments.at(id)};
    if (!r.has("kind")) invalid("experiment." + id, "missing kind");
    ExperimentSpec x;
    x.id = id;
    x.kind = experiment_kind(r.params.at("kind").value);
    const bool flow_kind = x.kind == ExperimentKind::flow_limit;
    if (flow_kind != plan.is_flow())
      invalid("experiment." + id, to_string(x.kind) + " does not apply to a " +
                                      (plan.is_flow() ? "flow" : "transformation"));
    auto lags = [&](bool required) {
      if (!r.has("lags")) {
        if (required) invalid("experiment." + id, "missing lags");
        return;
      }
      for (const auto& item : split(r.get("lags"), ',')) {
        x.lag_expressions.push_back(item);
        for (auto v : resolve_lags(item, *hs)) {
          check_cap(r.where("lags"), v, length);
          x.lags.push_back(v);
        }
      }
    };
    auto set_param = [&](const char* k, LevelSet& dst) {
      dst = r.has(k) ? parse_level_set(r.where(k), r.get(k), *alphabet) : LevelSet{0};
    };
    auto dbl = [&](const char* k, double& dst) {
      if (r.has(k)) dst = parse_double(r.where(k), r.get(k));
    };
    auto i64 = [&](const char* k, std::int64_t& dst) {
      if (r.has(k)) dst = parse_int(r.where(k), r.get(k));
    };

    switch (x.kind) {
      case ExperimentKind::limit_scan: {
        lags(true);
        x.tolerance = 0.03;
        dbl("tolerance", x.tolerance);
        x.classify.tolerance = x.tolerance;
        if (r.has("window")) x.classify.window = static_cast<int>(parse_int(r.where("window"), r.get("window")));
        if (x.classify.window < 0 || x.classify.window > 64) invalid(r.where("window"), "window must lie in 0..64");
        check_cap("experiment." + id + ".window", x.classify.window, length);
        if (r.has("family_a"))
          x.family_a = parse_rational(r.where("family_a"), r.get("family_a"));
        else if (plan.schedule->is_stochastic())
          x.family_a = parse_rational("bernoulli",
                                      format_double(plan.schedule->schedule().spacers.zero_probability));
        std::int64_t terms = x.geometric_terms;
        i64("geometric_terms", terms);
        x.geometric_terms = static_cast<int>(terms);
        break;
      }
      case ExperimentKind::converge: {
        if (!r.has("family")) invalid("experiment." + id, "missing family");
        x.family = r.get("family");
        const auto names = family_names();
        if (std::find(names.begin(), names.end(), x.family) == names.end())
          invalid(r.where("family"), "unknown operator family '" + x.family + "'");
        i64("family_m", x.family_params.m);
        i64("family_n", x.family_params.n);
        i64("family_k", x.family_params.k);
        i64("family_terms", x.family_params.terms);
        if (r.has("family_a"))
          x.family_params.a = parse_rational(r.where("family_a"), r.get("family_a"));
        else if (plan.schedule->is_stochastic())
          x.family_params.a = parse_rational("bernoulli",
                                             format_double(plan.schedule->schedule().spacers.zero_probability));
        i64("q", x.q);
        i64("offset", x.offset);
        dbl("tolerance", x.tolerance);
        if (r.has("stages")) {
          const auto v = r.get("stages");
          const auto dots = v.find("..");
          if (dots == std::string::npos) invalid(r.where("stages"), "expected 'first..last'");
          x.first_stage = static_cast<int>(parse_int(r.where("stages"), v.substr(0, dots)));
          x.last_stage = static_cast<int>(parse_int(r.where("stages"), v.substr(dots + 2)));
        } else {
          x.first_stage = plan.base_stage;
          x.last_stage = plan.base_stage;
          for (int j = plan.base_stage; j <= plan.depth; ++j) {
            const BigInt lag = BigInt(x.q) * hs->at(j) + x.offset;
            if (boost::multiprecision::abs(lag) > BigInt(length / 4)) break;
            x.last_stage = j;
          }
        }
        if (x.first_stage < plan.base_stage || x.last_stage > plan.depth || x.first_stage > x.last_stage)
          invalid("experiment." + id + ".stages", "stages must lie in j0..J");
        for (int j = x.first_stage; j <= x.last_stage; ++j) {
          const BigInt lag = BigInt(x.q) * hs->at(j) + x.offset;
          if (boost::multiprecision::abs(lag) > BigInt(length / 4))
            invalid("experiment." + id + ".stages",
                    "lag q*l_" + std::to_string(j) + " + offset exceeds the cap l_J/4 = " +
                        std::to_string(length / 4));
          x.lags.push_back(static_cast<std::int64_t>(lag));
        }
        break;
      }
      case ExperimentKind::rigidity:
        lags(true);
        dbl("tolerance", x.tolerance);
        break;
      case ExperimentKind::mixing:
        lags(true);
        if (r.has("sets"))
          for (const auto& item : split(r.get("sets"), ','))
            x.sets.push_back(parse_level_set(r.where("sets"), item, *alphabet));
        break;
      case ExperimentKind::disjointness: {
        x.tolerance = 0.01;
        dbl("tolerance", x.tolerance);
        i64("p", x.cesaro.p);
        i64("q", x.cesaro.q);
        i64("terms", x.cesaro.terms);
        std::int64_t checkpoints = static_cast<std::int64_t>(x.cesaro.checkpoints);
        i64("checkpoints", checkpoints);
        if (checkpoints < 1) invalid("experiment." + id + ".checkpoints", "must be >= 1");
        x.cesaro.checkpoints = static_cast<std::size_t>(checkpoints);
        if (x.cesaro.p < 1 || x.cesaro.q < 1 || x.cesaro.terms < 1)
          invalid("experiment." + id, "p, q and terms must be positive");
        check_cap("experiment." + id, std::max(x.cesaro.p, x.cesaro.q) * x.cesaro.terms, length);
        set_param("A", x.cesaro.A);
        set_param("B", x.cesaro.B);
        set_param("C", x.cesaro.C);
        set_param("D", x.cesaro.D);
        break;
      }
      case ExperimentKind::triple: {
        x.tolerance = 0.01;
        dbl("tolerance", x.tolerance);
        if (!r.has("pairs")) invalid("experiment." + id, "missing pairs");
        for (const auto& item : split(r.get("pairs"), ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) invalid(r.where("pairs"), "expected m:n, got '" + item + "'");
          const auto ms = resolve_lags(item.substr(0, colon), *hs);
          const auto ns = resolve_lags(item.substr(colon + 1), *hs);
          // a single value on one side pairs with every stage of the other
          const std::size_t count = std::max(ms.size(), ns.size());
          if ((ms.size() != count && ms.size() != 1) || (ns.size() != count && ns.size() != 1))
            invalid(r.where("pairs"), "stage ranges differ in '" + item + "'");
          for (std::size_t i = 0; i < count; ++i) {
            const auto m = ms[ms.size() == 1 ? 0 : i];
            const auto n = ns[ns.size() == 1 ? 0 : i];
            check_cap(r.where("pairs"), m, length);
            check_cap(r.where("pairs"), n, length);
            x.pairs.emplace_back(m, n);
          }
          x.lag_expressions.push_back(item);
        }
        set_param("A", x.A);
        set_param("B", x.B);
        set_param("C", x.C);
        break;
      }
      case ExperimentKind::flow_limit: {
        x.tolerance = x.flow.tolerance;
        dbl("tolerance", x.tolerance);
        x.flow.tolerance = x.tolerance;
        i64("q", x.q);
        if (x.q < 1) invalid("experiment." + id + ".q", "q must be >= 1");
        x.stage = std::max(plan.base_stage, plan.depth - 2);
        if (r.has("stage")) x.stage = static_cast<int>(parse_int(r.where("stage"), r.get("stage")));
        if (x.stage < plan.base_stage || x.stage >= plan.depth)
          invalid("experiment." + id + ".stage", "stage must satisfy j0 <= j < J");
        const auto hts = flow_heights(*flow);
        const Rational lag = hts.at(static_cast<std::size_t>(x.stage - 1)) * x.q;
        if (lag * 4 > hts.back())
          invalid("experiment." + id, "q*h_j = " + lag.str() + " exceeds the cap H_J/4 = " +
                                          Rational(hts.back() / 4).str());
        dbl("quadrature_tolerance", x.flow.pm.tolerance);
        i64("initial_intervals", x.flow.pm.initial_intervals);
        if (r.has("max_halvings"))
          x.flow.pm.max_halvings = static_cast<int>(parse_int(r.where("max_halvings"), r.get("max_halvings")));
        if (r.has("fit")) x.flow.fit_family = parse_bool(r.where("fit"), r.get("fit"));
        if (r.has("grid_step")) x.flow.grid_step = parse_rational(r.where("grid_step"), r.get("grid_step"));
        break;
      }
    }
    r.finish();
    plan.experiments.push_back(std::move(x));
  }
  return plan;
}

ordered_json ExperimentPlan::echo() const {
  ordered_json j;
  const auto& s = schedule->schedule();
  j["construction"] = {{"source", source},
                       {"name", s.name},
                       {"kind", s.kind == Kind::flow ? "flow" : "transformation"},
                       {"h1", rational_string(s.h1)},
                       {"stochastic", schedule->is_stochastic()}};
  if (schedule->is_stochastic())
    j["construction"]["zero_probability"] = s.spacers.zero_probability;
  ordered_json stages = ordered_json::array();
  if (is_flow()) {
    const auto fl = realize_flow(*schedule, depth);
    const auto hts = flow_heights(fl);
    for (int k = 1; k <= depth; ++k) {
      ordered_json st{{"stage", k}, {"height", rational_string(hts[static_cast<std::size_t>(k - 1)])}};
      if (k < depth) {
        st["cuts"] = fl.stage(k).cuts;
        ordered_json sp = ordered_json::array();
        for (const auto& v : fl.stage(k).spacers) sp.push_back(rational_string(v));
        st["spacers"] = sp;
      }
      stages.push_back(st);
    }
  } else {
    const auto realized = realize_any(*this, depth);
    const auto hs = heights(realized);
    for (int k = 1; k <= depth; ++k) {
      ordered_json st{{"stage", k}, {"levels", hs.at(k).str()}};
      if (k < depth) {
        st["cuts"] = realized.stage(k).cuts;
        st["spacers"] = realized.stage(k).spacers;
      }
      stages.push_back(st);
    }
  }
  j["construction"]["stages"] = stages;
  j["plan"] = {{"j0", base_stage},
               {"j0_auto", base_auto},
               {"depth", depth},
               {"budget", budget ? ordered_json(*budget) : ordered_json(nullptr)},
               {"seed", seed ? ordered_json(*seed) : ordered_json(nullptr)},
               {"engine", engine_name(engine)},
               {"threads", threads}};
  if (is_flow()) {
    j["plan"]["slabs"] = flow_options.slabs;
    j["plan"]["time_bits"] = flow_options.time_bits;
  }
  j["output"] = {{"dir", output_dir.string()}, {"name", output_name}, {"format", format_name(format)}};

  Alphabet alphabet{1};
  if (!is_flow()) alphabet = Alphabet{*to_u64(heights(realize_any(*this, depth)).at(base_stage))};
  ordered_json xs = ordered_json::array();
  for (const auto& x : experiments) {
    ordered_json e{{"id", x.id}, {"kind", to_string(x.kind)}};
    switch (x.kind) {
      case ExperimentKind::limit_scan:
        e["lag_expressions"] = x.lag_expressions;
        e["lags"] = x.lags;
        e["window"] = x.classify.window;
        e["tolerance"] = x.classify.tolerance;
        e["family_a"] = x.family_a ? ordered_json(rational_string(*x.family_a)) : ordered_json(nullptr);
        e["geometric_terms"] = x.geometric_terms;
        break;
      case ExperimentKind::converge:
        e["family"] = x.family;
        e["family_params"] = {{"m", x.family_params.m},
                              {"n", x.family_params.n},
                              {"k", x.family_params.k},
                              {"terms", x.family_params.terms},
                              {"a", rational_string(x.family_params.a)}};
        e["stages"] = {x.first_stage, x.last_stage};
        e["q"] = x.q;
        e["offset"] = x.offset;
        e["lags"] = x.lags;
        e["tolerance"] = x.tolerance;
        break;
      case ExperimentKind::rigidity:
        e["lag_expressions"] = x.lag_expressions;
        e["lags"] = x.lags;
        e["tolerance"] = x.tolerance;
        break;
      case ExperimentKind::mixing: {
        e["lag_expressions"] = x.lag_expressions;
        e["lags"] = x.lags;
        ordered_json sets = ordered_json::array();
        for (const auto& s : x.sets) sets.push_back(level_set_text(s, alphabet));
        e["sets"] = x.sets.empty() ? ordered_json("all single levels") : sets;
        break;
      }
      case ExperimentKind::disjointness:
        e["p"] = x.cesaro.p;
        e["q"] = x.cesaro.q;
        e["terms"] = x.cesaro.terms;
        e["checkpoints"] = x.cesaro.checkpoints;
        e["A"] = level_set_text(x.cesaro.A, alphabet);
        e["B"] = level_set_text(x.cesaro.B, alphabet);
        e["C"] = level_set_text(x.cesaro.C, alphabet);
        e["D"] = level_set_text(x.cesaro.D, alphabet);
        e["tolerance"] = x.tolerance;
        break;
      case ExperimentKind::triple: {
        ordered_json pairs = ordered_json::array();
        for (const auto& [m, n] : x.pairs) pairs.push_back({m, n});
        e["pair_expressions"] = x.lag_expressions;
        e["pairs"] = pairs;
        e["A"] = level_set_text(x.A, alphabet);
        e["B"] = level_set_text(x.B, alphabet);
        e["C"] = level_set_text(x.C, alphabet);
        e["tolerance"] = x.tolerance;
        break;
      }
      case ExperimentKind::flow_limit:
        e["q"] = x.q;
        e["stage"] = x.stage;
        e["tolerance"] = x.flow.tolerance;
        e["quadrature_tolerance"] = x.flow.pm.tolerance;
        e["initial_intervals"] = x.flow.pm.initial_intervals;
        e["max_halvings"] = x.flow.pm.max_halvings;
        e["fit"] = x.flow.fit_family;
        e["grid_step"] = rational_string(x.flow.grid_step);
        break;
    }
    xs.push_back(e);
  }
  j["experiments"] = xs;
  return j;
}

// ---- running ----------------------------------------------------------------

namespace {

ordered_json matrix_json(const std::vector<double>& values, std::size_t a) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < a; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < a; ++j) row.push_back(values[i * a + j]);
    rows.push_back(row);
  }
  return rows;
}

Table matrix_table(const std::string& name, const std::vector<std::pair<std::string, const std::vector<double>*>>& ms,
                   std::size_t a) {
  Table t{name, {"lag", "a", "b", "value"}, {}};
  for (const auto& [lag, values] : ms)
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < a; ++j)
        t.rows.push_back({lag, std::to_string(i), std::to_string(j), format_double((*values)[i * a + j])});
  return t;
}

ordered_json expression_json(const OperatorExpression& e) {
  ordered_json coeffs = ordered_json::object();
  for (const auto& [k, c] : e.coefficients) coeffs[std::to_string(k)] = rational_string(c);
  return {{"coefficients", coeffs}, {"theta", rational_string(e.theta)}};
}

void run_limit_scan(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  LimitScanOptions o;
  o.classify = x.classify;
  o.stochastic_a = x.family_a;
  o.geometric_terms = x.geometric_terms;
  const auto report = limit_scan(bench, x.lags, o);
  const std::size_t a = bench.tower().alphabet().size();
  ordered_json lags = ordered_json::array();
  Table cls{"classification", {"lag", "coeff_index", "coeff", "theta", "residual"}, {}};
  std::vector<JoiningMatrix> keep;
  ordered_json mats = ordered_json::array();
  for (const auto& e : report.lags) {
    lags.push_back({{"lag", e.lag},
                    {"coefficients", e.fit.coefficients},
                    {"theta", e.fit.theta},
                    {"residual_max", e.fit.residual_max},
                    {"residual_frobenius", e.fit.residual_frobenius},
                    {"identified", e.fit.identified},
                    {"iterations", e.fit.iterations},
                    {"boundary_bound", e.boundary_bound},
                    {"best_family",
                     {{"name", e.best.family},
                      {"expression", expression_json(e.best.expression)},
                      {"distance", e.best.distance}}}});
    for (int i = -e.fit.window; i <= e.fit.window; ++i)
      cls.rows.push_back({std::to_string(e.lag), std::to_string(i), format_double(e.fit.coefficient(i)),
                          format_double(e.fit.theta), format_double(e.fit.residual_max)});
    keep.push_back(bench.joining(e.lag));
    mats.push_back({{"lag", e.lag}, {"values", matrix_json(keep.back().values, a)}});
  }
  std::vector<std::pair<std::string, const std::vector<double>*>> ms;
  for (std::size_t i = 0; i < keep.size(); ++i)
    ms.emplace_back(std::to_string(report.lags[i].lag), &keep[i].values);
  rec.tables.push_back(matrix_table("matrices", ms, a));
  rec.tables.push_back(std::move(cls));
  rec.result = {{"classifications", lags},
                {"identified", report.identified},
                {"total", report.lags.size()},
                {"worst_residual", report.worst_residual},
                {"verdict", report.identified == report.lags.size() ? "identified" : "unidentified"},
                {"matrices", mats}};
}

void run_converge(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  const OperatorExpression target = build_family(x.family, x.family_params);
  const auto report = convergence_scan(bench, target, x.family, x.first_stage, x.last_stage, x.q, x.offset);
  ordered_json entries = ordered_json::array();
  Table t{"distances", {"stage", "lag", "distance", "boundary_bound"}, {}};
  for (const auto& e : report.entries) {
    entries.push_back({{"stage", e.stage}, {"lag", e.lag}, {"distance", e.distance},
                       {"boundary_bound", e.boundary_bound}});
    t.rows.push_back({std::to_string(e.stage), std::to_string(e.lag), format_double(e.distance),
                      format_double(e.boundary_bound)});
  }
  const double last = report.entries.empty() ? 0.0 : report.entries.back().distance;
  rec.tables.push_back(std::move(t));
  rec.result = {{"target", expression_json(target)},
                {"entries", entries},
                {"decreasing", report.decreasing},
                {"final_distance", last},
                {"verdict", last <= x.tolerance ? "converged" : "not-converged"}};
}

void run_rigidity(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  const auto report = rigidity_scan(bench, x.lags, x.tolerance);
  ordered_json entries = ordered_json::array();
  Table t{"distances", {"lag", "l1", "max_abs", "boundary_bound", "excess"}, {}};
  for (const auto& e : report.entries) {
    entries.push_back({{"lag", e.lag}, {"l1", e.l1}, {"max_abs", e.max_abs},
                       {"boundary_bound", e.boundary_bound}, {"excess", e.excess}});
    t.rows.push_back({std::to_string(e.lag), format_double(e.l1), format_double(e.max_abs),
                      format_double(e.boundary_bound), format_double(e.excess)});
  }
  rec.tables.push_back(std::move(t));
  rec.result = {{"entries", entries},
                {"vanishing", report.vanishing},
                {"minimum_l1", report.minimum_l1},
                {"verdict", report.vanishing ? "rigid" : "not-rigid"}};
}

void run_mixing(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  const auto report = mixing_diagnostics(bench, x.lags, x.sets);
  ordered_json sets = ordered_json::array();
  Table t{"returns", {"set", "measure", "max_return", "argmax", "ratio"}, {}};
  for (const auto& s : report.sets) {
    sets.push_back({{"set", s.label}, {"measure", s.measure}, {"max_return", s.max_return},
                    {"argmax", s.argmax}, {"ratio", s.ratio}});
    t.rows.push_back({s.label, format_double(s.measure), format_double(s.max_return),
                      std::to_string(s.argmax), format_double(s.ratio)});
  }
  rec.tables.push_back(std::move(t));
  rec.result = {{"sets", sets},
                {"alpha_hat", report.alpha_hat},
                {"alpha_pair", report.alpha_pair},
                {"alpha_lag", report.alpha_lag},
                {"max_return_ratio", report.max_return_ratio},
                {"verdict", report.max_return_ratio < 1.0 ? "returns-below-measure" : "full-return"}};
}

void run_disjointness(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  const auto r = cesaro_disjointness_probe(bench, x.cesaro);
  ordered_json curve = ordered_json::array();
  Table t{"curve", {"terms", "deviation"}, {}};
  for (const auto& [n, d] : r.curve) {
    curve.push_back({n, d});
    t.rows.push_back({std::to_string(n), format_double(d)});
  }
  rec.tables.push_back(std::move(t));
  rec.result = {{"control", r.control},
                {"target", r.target},
                {"average", r.average},
                {"deviation", r.deviation},
                {"curve", curve},
                {"verdict", r.deviation <= x.tolerance ? "consistent" : "inconsistent"}};
}

void run_triple(Workbench& bench, const ExperimentSpec& x, ExperimentRecord& rec) {
  const auto r = triple_corr_probe(bench.tower(), x.pairs, x.A, x.B, x.C);
  ordered_json entries = ordered_json::array();
  Table t{"triples", {"m", "n", "joint", "product", "deviation"}, {}};
  for (const auto& e : r.entries) {
    entries.push_back({{"m", e.m}, {"n", e.n}, {"joint", e.joint}, {"product", e.product},
                       {"deviation", e.deviation}});
    t.rows.push_back({std::to_string(e.m), std::to_string(e.n), format_double(e.joint),
                      format_double(e.product), format_double(e.deviation)});
  }
  rec.tables.push_back(std::move(t));
  rec.result = {{"entries", entries},
                {"max_deviation", r.max_deviation},
                {"verdict", r.max_deviation <= x.tolerance ? "independent" : "correlated"}};
}

void run_flow_limit(FlowCorrelator& corr, const ExperimentSpec& x, ExperimentRecord& rec) {
  const auto r = flow_limit_check(corr, x.q, x.stage, x.flow);
  rec.result = {{"q", r.q},
                {"stage", r.stage},
                {"lag", rational_string(r.lag)},
                {"residual_negative", r.residual_negative},
                {"residual_positive", r.residual_positive},
                {"orientation", to_string(r.orientation)},
                {"residual", r.residual},
                {"identity_gap", r.identity_gap},
                {"quadrature_error", r.quadrature_error},
                {"distance_to_product", r.distance_to_product},
                {"distance_to_identity", r.distance_to_identity},
                {"verdict", r.within_tolerance ? "within-tolerance" : "outside-tolerance"}};
  if (r.best_fit)
    rec.result["best_fit"] = {{"shift", rational_string(r.best_fit->shift)},
                              {"lengths", r.best_fit->lengths},
                              {"distance", r.best_fit->distance}};
  const JoiningMatrix& d = corr.corr(r.lag);
  rec.result["matrix"] = matrix_json(d.values, d.alphabet_size);
  Table t{"summary", {"key", "value"}, {}};
  for (const char* k : {"residual_negative", "residual_positive", "residual", "identity_gap",
                        "quadrature_error", "distance_to_product", "distance_to_identity"})
    t.rows.push_back({k, format_double(rec.result[k].get<double>())});
  t.rows.push_back({"orientation", to_string(r.orientation)});
  rec.tables.push_back(std::move(t));
  rec.tables.push_back(matrix_table("matrices", {{rational_string(r.lag), &d.values}}, d.alphabet_size));
}

}  // namespace

bool Report::all_ok() const {
  return std::all_of(experiments.begin(), experiments.end(), [](const auto& e) { return e.ok; });
}

ordered_json Report::to_json(bool include_wall_time) const {
  ordered_json j;
  j["schema_version"] = kReportSchema;
  j["version"] = std::string("rankone ") + kVersion;
  j["plan"] = plan;
  ordered_json xs = ordered_json::array();
  for (const auto& e : experiments) {
    ordered_json x{{"id", e.id}, {"kind", to_string(e.kind)}, {"status", e.ok ? "ok" : "error"}};
    if (e.ok)
      x["result"] = e.result;
    else
      x["error"] = {{"code", e.error_code}, {"message", e.error_message}};
    xs.push_back(x);
  }
  j["experiments"] = xs;
  if (include_wall_time) j["wall_time_seconds"] = wall_time;
  return j;
}

Report run_plan(const ExperimentPlan& plan) {
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.plan = plan.echo();

  std::unique_ptr<Workbench> bench;
  std::unique_ptr<FlowCorrelator> flow;
  std::optional<std::pair<std::string, std::string>> setup_error;
  try {
    if (plan.is_flow()) {
      const auto fl = realize_flow(*plan.schedule, plan.depth);
      flow = std::make_unique<FlowCorrelator>(
          std::make_shared<FlowTower>(fl, plan.base_stage, plan.depth, plan.flow_options));
    } else {
      const auto realized = realize_any(plan, plan.depth);
      NaiveOptions naive;
      naive.threads = plan.threads;
      bench = std::make_unique<Workbench>(
          std::make_shared<Tower>(realized, plan.base_stage, plan.depth), plan.engine, naive);
    }
  } catch (const Error& e) {
    setup_error.emplace(to_string(e.code()), e.what());
  }

  for (const auto& x : plan.experiments) {
    ExperimentRecord rec;
    rec.id = x.id;
    rec.kind = x.kind;
    if (setup_error) {
      rec.error_code = setup_error->first;
      rec.error_message = setup_error->second;
      report.experiments.push_back(std::move(rec));
      continue;
    }
    try {
      switch (x.kind) {
        case ExperimentKind::limit_scan: run_limit_scan(*bench, x, rec); break;
        case ExperimentKind::converge: run_converge(*bench, x, rec); break;
        case ExperimentKind::rigidity: run_rigidity(*bench, x, rec); break;
        case ExperimentKind::mixing: run_mixing(*bench, x, rec); break;
        case ExperimentKind::disjointness: run_disjointness(*bench, x, rec); break;
        case ExperimentKind::triple: run_triple(*bench, x, rec); break;
        case ExperimentKind::flow_limit: run_flow_limit(*flow, x, rec); break;
      }
      rec.ok = true;
    } catch (const Error& e) {
      rec.error_code = to_string(e.code());
      rec.error_message = e.what();
      rec.result = nullptr;
      rec.tables.clear();
    } catch (const std::exception& e) {
      rec.error_code = "InternalError";
      rec.error_message = e.what();
      rec.result = nullptr;
      rec.tables.clear();
    }
    report.experiments.push_back(std::move(rec));
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---- output -----------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) fail(ErrorCode::io_error, "failed writing '" + path.string() + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& dir,
                                               const std::string& name, ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  if (format != ReportFormat::csv) {
    const auto path = dir / (name + ".json");
    write_file(path, report.to_json().dump(2) + "\n");
    written.push_back(path);
  }
  if (format != ReportFormat::json) {
    for (const auto& e : report.experiments) {
      for (const auto& t : e.tables) {
        std::string text;
        for (std::size_t i = 0; i < t.header.size(); ++i) text += (i ? "," : "") + t.header[i];
        text += '\n';
        for (const auto& row : t.rows) {
          for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + csv_field(row[i]);
          text += '\n';
        }
        const auto path = dir / (name + "_" + e.id + "_" + t.name + ".csv");
        write_file(path, text);
        written.push_back(path);
      }
    }
  }
  return written;
}

}  // namespace rankone
