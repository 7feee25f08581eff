#include "rankone/schedule.hpp"

#include "rankone/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace rankone {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::non_positive_cut: return "NonPositiveCut";
    case ErrorCode::negative_spacer: return "NegativeSpacer";
    case ErrorCode::malformed_rule: return "MalformedRule";
    case ErrorCode::bounds_violated: return "BoundsViolated";
    case ErrorCode::unrealized_stochastic: return "UnrealizedStochastic";
    case ErrorCode::unknown_name: return "UnknownName";
    case ErrorCode::depth_over_budget: return "DepthOverBudget";
    case ErrorCode::window_too_long: return "WindowTooLong";
    case ErrorCode::lag_out_of_range: return "LagOutOfRange";
    case ErrorCode::missing_lag: return "MissingLag";
    case ErrorCode::missing_basis_lag: return "MissingBasisLag";
    case ErrorCode::unknown_family: return "UnknownFamily";
    case ErrorCode::solver_divergence: return "SolverDivergence";
    case ErrorCode::segment_budget_exceeded: return "SegmentBudgetExceeded";
    case ErrorCode::time_out_of_range: return "TimeOutOfRange";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::validation_error: return "ValidationError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

// ---- rules ---------------------------------------------------------------

std::int64_t CutRule::at(int stage) const {
  require(stage >= 1, ErrorCode::invalid_argument, "stage index must be >= 1");
  switch (type) {
    case Type::constant:
      return value;
    case Type::list:
      require(!values.empty(), ErrorCode::malformed_rule, "empty cut list");
      return values[std::min<std::size_t>(static_cast<std::size_t>(stage - 1), values.size() - 1)];
    case Type::affine:
      return slope * stage + offset;
  }
  return value;
}

CutRule CutRule::constant(std::int64_t r) {
  CutRule rule;
  rule.type = Type::constant;
  rule.value = r;
  return rule;
}

CutRule CutRule::list(std::vector<std::int64_t> rs) {
  CutRule rule;
  rule.type = Type::list;
  rule.values = std::move(rs);
  return rule;
}

CutRule CutRule::affine(std::int64_t slope, std::int64_t offset) {
  CutRule rule;
  rule.type = Type::affine;
  rule.slope = slope;
  rule.offset = offset;
  return rule;
}

SpacerRule SpacerRule::repeat(std::vector<std::int64_t> pattern) {
  SpacerRule rule;
  rule.type = Type::pattern;
  rule.pattern = std::move(pattern);
  return rule;
}

SpacerRule SpacerRule::explicit_stages(std::vector<std::vector<std::int64_t>> stages) {
  SpacerRule rule;
  rule.type = Type::per_stage;
  rule.stages = std::move(stages);
  return rule;
}

SpacerRule SpacerRule::bernoulli(double zero_probability) {
  SpacerRule rule;
  rule.type = Type::bernoulli;
  rule.zero_probability = zero_probability;
  return rule;
}

SpacerRule SpacerRule::staircase(bool divide_by_stage) {
  SpacerRule rule;
  rule.type = Type::staircase;
  rule.divide_by_stage = divide_by_stage;
  return rule;
}

namespace {

std::vector<std::int64_t> integer_spacers(const ConstructionSchedule& s, int stage) {
  switch (s.spacers.type) {
    case SpacerRule::Type::pattern:
      return s.spacers.pattern;
    case SpacerRule::Type::per_stage:
      require(!s.spacers.stages.empty(), ErrorCode::malformed_rule, "empty spacer stage list");
      return s.spacers.stages[std::min<std::size_t>(static_cast<std::size_t>(stage - 1),
                                                    s.spacers.stages.size() - 1)];
    case SpacerRule::Type::bernoulli:
      fail(ErrorCode::unrealized_stochastic,
           "schedule '" + s.name + "' has random spacers; realize it with a seed first");
    case SpacerRule::Type::staircase:
      fail(ErrorCode::malformed_rule, "staircase spacers are real-valued (flows only)");
  }
  return {};
}

std::vector<Rational> rational_spacers(const ConstructionSchedule& s, int stage) {
  if (s.spacers.type != SpacerRule::Type::staircase) {
    std::vector<Rational> out;
    for (auto v : integer_spacers(s, stage)) out.emplace_back(v);
    return out;
  }
  const std::int64_t r = s.cuts.at(stage);
  const std::int64_t denom = s.spacers.divide_by_stage ? r * stage : r;
  std::vector<Rational> out;
  out.reserve(static_cast<std::size_t>(r));
  for (std::int64_t i = 1; i <= r; ++i) out.emplace_back(Rational(i - 1, denom));
  return out;
}

bool is_integer(const Rational& q) { return denominator(q) == 1; }

}  // namespace

std::vector<std::int64_t> ValidatedSchedule::spacers(int stage) const {
  return integer_spacers(schedule_, stage);
}

std::vector<Rational> ValidatedSchedule::flow_spacers(int stage) const {
  return rational_spacers(schedule_, stage);
}

std::int64_t Stage::spacer_sum() const {
  return std::accumulate(spacers.begin(), spacers.end(), std::int64_t{0});
}

// ---- validation ----------------------------------------------------------

ValidatedSchedule validate(ConstructionSchedule s) {
  const auto& sp = s.spacers;
  if (s.kind == Kind::transformation) {
    require(s.h1 >= 0 && is_integer(s.h1), ErrorCode::malformed_rule,
            "h1 must be a nonnegative integer for transformations");
    require(sp.type != SpacerRule::Type::staircase, ErrorCode::malformed_rule,
            "staircase spacers are only defined for flows");
  } else {
    require(s.h1 > 0, ErrorCode::malformed_rule, "flow h1 must be positive");
    require(sp.type != SpacerRule::Type::bernoulli, ErrorCode::malformed_rule,
            "bernoulli spacers are only defined for transformations");
  }
  if (s.cuts.type == CutRule::Type::list)
    require(!s.cuts.values.empty(), ErrorCode::malformed_rule, "empty cut list");
  if (sp.type == SpacerRule::Type::pattern)
    require(!sp.pattern.empty(), ErrorCode::malformed_rule, "empty spacer pattern");
  if (sp.type == SpacerRule::Type::per_stage)
    require(!sp.stages.empty(), ErrorCode::malformed_rule, "empty spacer stage list");
  if (sp.type == SpacerRule::Type::bernoulli)
    require(sp.zero_probability > 0.0 && sp.zero_probability < 1.0, ErrorCode::malformed_rule,
            "bernoulli parameter a must satisfy 0 < a < 1");
  if (s.bounds) {
    require(s.bounds->spacer > 0 && s.bounds->cut > 3, ErrorCode::malformed_rule,
            "declared bounds must satisfy s > 0 and r > 3");
  }

  for (int j = 1; j <= kValidationStages; ++j) {
    const std::int64_t r = s.cuts.at(j);
    require(r >= 2, ErrorCode::non_positive_cut,
            "r_" + std::to_string(j) + " = " + std::to_string(r) + " < 2");
    if (s.bounds) {
      require(r > 2 && r < s.bounds->cut, ErrorCode::bounds_violated,
              "r_" + std::to_string(j) + " = " + std::to_string(r) + " outside (2, " +
                  std::to_string(s.bounds->cut) + ")");
    }
    std::vector<Rational> spacers;
    if (sp.type == SpacerRule::Type::bernoulli) {
      spacers.assign(static_cast<std::size_t>(r), Rational(1));  // worst case draw
    } else {
      if (sp.type != SpacerRule::Type::staircase) {
        const auto ints = integer_spacers(s, j);
        require(static_cast<std::int64_t>(ints.size()) == r, ErrorCode::malformed_rule,
                "stage " + std::to_string(j) + " has " + std::to_string(ints.size()) +
                    " spacers but r_j = " + std::to_string(r));
      }
      spacers = rational_spacers(s, j);
    }
    for (std::size_t i = 0; i < spacers.size(); ++i) {
      require(spacers[i] >= 0, ErrorCode::negative_spacer,
              "s_" + std::to_string(j) + "(" + std::to_string(i + 1) + ") < 0");
      if (s.bounds) {
        require(spacers[i] < s.bounds->spacer, ErrorCode::bounds_violated,
                "s_" + std::to_string(j) + "(" + std::to_string(i + 1) + ") >= " +
                    std::to_string(s.bounds->spacer));
        if (s.bounds->derivative && i + 1 < spacers.size()) {
          Rational diff = spacers[i + 1] - spacers[i];
          if (diff < 0) diff = -diff;
          require(diff < *s.bounds->derivative, ErrorCode::bounds_violated,
                  "spacer derivative bound violated at stage " + std::to_string(j));
        }
      }
    }
  }
  return ValidatedSchedule(std::move(s));
}

// ---- realization ---------------------------------------------------------

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
  std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const noexcept {
  return static_cast<double>(at(counter) >> 11) * 0x1.0p-53;
}

RealizedSchedule realize(const ValidatedSchedule& schedule, int depth) {
  require(depth >= 1, ErrorCode::invalid_argument, "depth must be >= 1");
  require(schedule.kind() == Kind::transformation, ErrorCode::malformed_rule,
          "use realize_flow for flow schedules");
  RealizedSchedule out;
  out.name = schedule.name();
  out.h1 = static_cast<std::int64_t>(numerator(schedule.schedule().h1));
  for (int j = 1; j < depth; ++j) {
    Stage st{schedule.cuts(j), schedule.spacers(j)};
    require(static_cast<std::int64_t>(st.spacers.size()) == st.cuts, ErrorCode::malformed_rule,
            "stage " + std::to_string(j) + " spacer count differs from r_j");
    require(std::all_of(st.spacers.begin(), st.spacers.end(), [](auto v) { return v >= 0; }),
            ErrorCode::negative_spacer, "negative spacer at stage " + std::to_string(j));
    require(st.cuts >= 2, ErrorCode::non_positive_cut, "r_j < 2 at stage " + std::to_string(j));
    out.stages.push_back(std::move(st));
  }
  return out;
}

RealizedSchedule realize_stochastic(const ValidatedSchedule& schedule, std::uint64_t seed,
                                    int depth) {
  require(depth >= 1, ErrorCode::invalid_argument, "depth must be >= 1");
  require(schedule.is_stochastic(), ErrorCode::invalid_argument,
          "realize_stochastic needs a bernoulli spacer rule");
  const double a = schedule.schedule().spacers.zero_probability;
  const CounterRng rng(seed);
  RealizedSchedule out;
  out.name = schedule.name();
  out.h1 = static_cast<std::int64_t>(numerator(schedule.schedule().h1));
  out.seed = seed;
  std::uint64_t counter = 0;
  for (int j = 1; j < depth; ++j) {
    Stage st;
    st.cuts = schedule.cuts(j);
    require(st.cuts >= 2, ErrorCode::non_positive_cut, "r_j < 2 at stage " + std::to_string(j));
    st.spacers.reserve(static_cast<std::size_t>(st.cuts));
    for (std::int64_t i = 0; i < st.cuts; ++i) st.spacers.push_back(rng.uniform(counter++) < a ? 0 : 1);
    out.stages.push_back(std::move(st));
  }
  return out;
}

RealizedFlow realize_flow(const ValidatedSchedule& schedule, int depth) {
  require(depth >= 1, ErrorCode::invalid_argument, "depth must be >= 1");
  require(schedule.kind() == Kind::flow, ErrorCode::malformed_rule,
          "realize_flow needs a flow schedule");
  RealizedFlow out;
  out.name = schedule.name();
  out.h1 = schedule.schedule().h1;
  for (int j = 1; j < depth; ++j) {
    FlowStage st{schedule.cuts(j), schedule.flow_spacers(j)};
    require(st.cuts >= 2, ErrorCode::non_positive_cut, "r_j < 2 at stage " + std::to_string(j));
    out.stages.push_back(std::move(st));
  }
  return out;
}

// ---- heights -------------------------------------------------------------

HeightsTable heights(const RealizedSchedule& realized) {
  HeightsTable table;
  table.levels.reserve(realized.stages.size() + 1);
  table.levels.emplace_back(realized.levels1());
  for (const auto& st : realized.stages) {
    const BigInt& prev = table.levels.back();
    table.levels.push_back(prev * st.cuts + st.spacer_sum());
  }
  return table;
}

HeightsTable heights(const ValidatedSchedule& schedule, int depth) {
  require(depth >= 1, ErrorCode::invalid_argument, "depth must be >= 1");
  require(!schedule.is_stochastic(), ErrorCode::unrealized_stochastic,
          "schedule '" + schedule.name() + "' must be realized with a seed first");
  require(schedule.kind() == Kind::transformation, ErrorCode::malformed_rule,
          "use flow_heights for flow schedules");
  return heights(realize(schedule, depth));
}

std::vector<Rational> flow_heights(const RealizedFlow& flow) {
  std::vector<Rational> hs{flow.h1};
  for (const auto& st : flow.stages) {
    Rational next = hs.back() * st.cuts;
    for (const auto& s : st.spacers) next += s;
    hs.push_back(next);
  }
  return hs;
}

ObservableMass observable_mass(const RealizedSchedule& realized, int base_stage) {
  require(base_stage >= 1 && base_stage <= realized.depth(), ErrorCode::invalid_argument,
          "base stage must satisfy 1 <= j0 <= J");
  BigInt product = 1;
  for (int k = base_stage; k < realized.depth(); ++k) product *= realized.stage(k).cuts;
  return {heights(realized).levels.back(), Rational(BigInt(1), product)};
}

std::optional<std::uint64_t> to_u64(const BigInt& value) {
  if (value < 0 || value > BigInt(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
  return static_cast<std::uint64_t>(value);
}

// ---- catalog -------------------------------------------------------------

std::vector<std::string> catalog_names() {
  return {"chacon",          "modified-chacon",   "odometer5",       "dyadic-odometer",
          "spaced-odometer5", "stochastic-chacon", "staircase-flow"};
}

ValidatedSchedule catalog(const std::string& name) {
  ConstructionSchedule s;
  s.name = name;
  if (name == "chacon") {
    s.cuts = CutRule::constant(2);
    s.spacers = SpacerRule::repeat({0, 1});
  } else if (name == "modified-chacon") {
    s.cuts = CutRule::constant(3);
    s.spacers = SpacerRule::repeat({0, 1, 0});
  } else if (name == "odometer5") {
    s.cuts = CutRule::constant(5);
    s.spacers = SpacerRule::repeat({0, 0, 0, 0, 0});
  } else if (name == "dyadic-odometer") {
    s.cuts = CutRule::constant(2);
    s.spacers = SpacerRule::repeat({0, 0});
  } else if (name == "spaced-odometer5") {
    s.cuts = CutRule::constant(5);
    s.spacers = SpacerRule::repeat({2, 2, 2, 2, 0});
  } else if (name.rfind("stochastic-chacon", 0) == 0) {
    double a = 0.5;
    const auto rest = name.substr(std::string("stochastic-chacon").size());
    if (!rest.empty()) {
      require(rest.size() > 2 && rest.front() == '(' && rest.back() == ')',
              ErrorCode::unknown_name, "unknown catalog entry '" + name + "'");
      const std::string inner = rest.substr(1, rest.size() - 2);
      char* end = nullptr;
      a = std::strtod(inner.c_str(), &end);
      require(end != inner.c_str() && *end == '\0', ErrorCode::unknown_name,
              "bad parameter in '" + name + "'");
    }
    s.cuts = CutRule::affine(1, 1);
    s.spacers = SpacerRule::bernoulli(a);
  } else if (name == "staircase-flow") {
    s.kind = Kind::flow;
    s.h1 = 1;
    s.cuts = CutRule::affine(1, 1);
    s.spacers = SpacerRule::staircase();
  } else {
    fail(ErrorCode::unknown_name, "unknown catalog entry '" + name + "'");
  }
  return validate(std::move(s));
}

}  // namespace rankone
