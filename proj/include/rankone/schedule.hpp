#pragma once

// Construction schedules for rank-one cutting-and-stacking systems: the
// declarative recipe, its validation, exact heights, stochastic realization
// and the catalog of standard examples.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rankone {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class Kind { transformation, flow };

struct CutRule {
  enum class Type { constant, list, affine };

  Type type = Type::constant;
  std::int64_t value = 2;            // constant
  std::vector<std::int64_t> values;  // list; the last entry repeats
  std::int64_t slope = 1;            // affine: r_j = slope * j + offset
  std::int64_t offset = 1;

  /// r_j for stage j >= 1.
  std::int64_t at(int stage) const;

  static CutRule constant(std::int64_t r);
  static CutRule list(std::vector<std::int64_t> rs);
  static CutRule affine(std::int64_t slope, std::int64_t offset);
};

struct SpacerRule {
  enum class Type { pattern, per_stage, bernoulli, staircase };

  Type type = Type::pattern;
  std::vector<std::int64_t> pattern;              // same vector every stage
  std::vector<std::vector<std::int64_t>> stages;  // explicit; last repeats
  double zero_probability = 0.5;                  // bernoulli: Prob(s = 0)
  // staircase: s_j(i) = (i-1)/r_j, or (i-1)/(j r_j) when divide_by_stage.
  bool divide_by_stage = false;

  static SpacerRule repeat(std::vector<std::int64_t> pattern);
  static SpacerRule explicit_stages(std::vector<std::vector<std::int64_t>> stages);
  static SpacerRule bernoulli(double zero_probability);
  static SpacerRule staircase(bool divide_by_stage = false);
};

struct Bounds {
  std::int64_t spacer = 0;  // s_j(i) < spacer
  std::int64_t cut = 0;     // 2 < r_j < cut
  std::optional<std::int64_t> derivative;  // |s_j(i+1) - s_j(i)| < derivative
};

struct ConstructionSchedule {
  std::string name;
  Kind kind = Kind::transformation;
  Rational h1 = 0;
  CutRule cuts;
  SpacerRule spacers;
  std::optional<Bounds> bounds;
};

/// A schedule that passed validation. Only `validate` constructs one.
class ValidatedSchedule {
 public:
  const ConstructionSchedule& schedule() const noexcept { return schedule_; }
  const std::string& name() const noexcept { return schedule_.name; }
  Kind kind() const noexcept { return schedule_.kind; }
  bool is_stochastic() const noexcept {
    return schedule_.spacers.type == SpacerRule::Type::bernoulli;
  }
  std::int64_t cuts(int stage) const { return schedule_.cuts.at(stage); }
  /// Integer spacer vector of a deterministic transformation schedule.
  std::vector<std::int64_t> spacers(int stage) const;
  /// Exact spacer durations of a deterministic flow schedule.
  std::vector<Rational> flow_spacers(int stage) const;

 private:
  friend ValidatedSchedule validate(ConstructionSchedule schedule);
  explicit ValidatedSchedule(ConstructionSchedule s) : schedule_(std::move(s)) {}
  ConstructionSchedule schedule_;
};

/// Number of leading stages checked against the declared bounds.
inline constexpr int kValidationStages = 64;

ValidatedSchedule validate(ConstructionSchedule schedule);

struct Stage {
  std::int64_t cuts = 0;
  std::vector<std::int64_t> spacers;

  std::int64_t spacer_sum() const;
};

/// Materialized integer stages 1..depth-1 of a transformation; enough to
/// build the tower up to stage `depth`.
struct RealizedSchedule {
  std::string name;
  std::int64_t h1 = 0;
  std::vector<Stage> stages;  // stages[j-1] is stage j
  std::optional<std::uint64_t> seed;

  int depth() const noexcept { return static_cast<int>(stages.size()) + 1; }
  std::int64_t levels1() const noexcept { return h1 + 1; }
  const Stage& stage(int j) const { return stages.at(static_cast<std::size_t>(j - 1)); }
};

struct FlowStage {
  std::int64_t cuts = 0;
  std::vector<Rational> spacers;
};

struct RealizedFlow {
  std::string name;
  Rational h1 = 1;
  std::vector<FlowStage> stages;

  int depth() const noexcept { return static_cast<int>(stages.size()) + 1; }
  const FlowStage& stage(int j) const { return stages.at(static_cast<std::size_t>(j - 1)); }
};

/// Level counts l_1..l_J (l_j = h_j + 1) of a transformation.
struct HeightsTable {
  std::vector<BigInt> levels;  // levels[j-1] = l_j

  const BigInt& at(int stage) const { return levels.at(static_cast<std::size_t>(stage - 1)); }
  int depth() const noexcept { return static_cast<int>(levels.size()); }
};

/// Materialize a deterministic transformation schedule up to stage J.
RealizedSchedule realize(const ValidatedSchedule& schedule, int depth);
/// Materialize a Bernoulli-spacer schedule. Pure in (schedule, seed, depth);
/// the draws of stage j do not depend on depth, so realizations are prefixes
/// of each other.
RealizedSchedule realize_stochastic(const ValidatedSchedule& schedule, std::uint64_t seed,
                                    int depth);
RealizedFlow realize_flow(const ValidatedSchedule& schedule, int depth);

HeightsTable heights(const ValidatedSchedule& schedule, int depth);
HeightsTable heights(const RealizedSchedule& realized);
std::vector<Rational> flow_heights(const RealizedFlow& flow);

struct ObservableMass {
  BigInt word_length;   // l_J
  Rational width_ratio;  // 1 / prod_{k=j0}^{J-1} r_k
};

ObservableMass observable_mass(const RealizedSchedule& realized, int base_stage);

/// Counter-based generator: output k is splitmix64's finalizer applied to
/// seed + (k + 1) * 0x9E3779B97F4A7C15.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t at(std::uint64_t counter) const noexcept;
  /// Uniform double in [0, 1) from the top 53 bits of at(counter).
  double uniform(std::uint64_t counter) const noexcept;

 private:
  std::uint64_t seed_;
};

std::vector<std::string> catalog_names();
/// Accepts the names from catalog_names(); "stochastic-chacon" also takes a
/// parameter, e.g. "stochastic-chacon(0.3)".
ValidatedSchedule catalog(const std::string& name);

/// l_J as uint64, or nullopt when it does not fit.
std::optional<std::uint64_t> to_u64(const BigInt& value);

}  // namespace rankone
