#pragma once

// Rank-one flows with rational spacer durations. Time is measured in integer
// ticks on a common grid fine enough for every height, spacer, slab boundary
// and dyadic quadrature node used here, so every correlation is exact.

#include "rankone/lab.hpp"
#include "rankone/schedule.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rankone {

using Ticks = __int128;

std::string ticks_to_string(Ticks value);

struct FlowOptions {
  std::size_t slabs = 16;                   // L
  int time_bits = 16;                       // dyadic refinement of the tick grid
  std::uint64_t segment_budget = 10'000'000;
};

/// Hierarchical view of the depth-J column over base stage j0. The base
/// column [0, h_{j0}) is cut into L equal slabs; spacer time is the extra
/// symbol L.
class FlowTower {
 public:
  FlowTower(const RealizedFlow& flow, int base_stage, int depth, FlowOptions options = {});
  FlowTower(const RealizedFlow& flow, int base_stage, FlowOptions options = {})
      : FlowTower(flow, base_stage, flow.depth(), options) {}

  const std::string& name() const noexcept { return name_; }
  int base_stage() const noexcept { return base_; }
  int depth() const noexcept { return depth_; }
  std::size_t slabs() const noexcept { return slabs_; }
  std::size_t alphabet_size() const noexcept { return slabs_ + 1; }
  std::size_t spacer_symbol() const noexcept { return slabs_; }
  const FlowOptions& options() const noexcept { return options_; }

  /// Ticks per unit of time.
  const BigInt& resolution() const noexcept { return resolution_; }
  /// Throws TimeOutOfRange when t is not on the tick grid.
  Ticks to_ticks(const Rational& t) const;
  Rational to_time(Ticks t) const;

  const Rational& height(int k) const { return heights_.at(index(k)); }
  const Rational& height() const { return heights_.back(); }
  Ticks length(int k) const { return lengths_.at(index(k)); }
  Ticks length() const { return lengths_.back(); }
  Ticks slab_width() const noexcept { return slab_width_; }

  std::size_t copies(int k) const { return starts_.at(index(k)).size(); }
  Ticks copy_start(int k, std::size_t i) const { return starts_.at(index(k)).at(i); }
  Ticks spacer(int k, std::size_t i) const { return spacers_.at(index(k)).at(i); }

  /// Time spent in each slab (and the spacer) by the depth-k column.
  const std::vector<Ticks>& histogram(int k) const { return hist_.at(index(k)); }
  /// Same over the sub-interval [0, t) of the depth-k column.
  void add_prefix_histogram(int k, Ticks t, Ticks* acc) const;
  /// Slab masses normalized by the column height.
  std::vector<double> measures() const;

 private:
  std::size_t index(int k) const;

  std::string name_;
  int base_ = 1;
  int depth_ = 1;
  std::size_t slabs_ = 16;
  FlowOptions options_;
  BigInt resolution_;
  Ticks slab_width_ = 0;
  std::vector<Rational> heights_;
  std::vector<Ticks> lengths_;
  std::vector<std::vector<Ticks>> starts_;
  std::vector<std::vector<Ticks>> spacers_;
  std::vector<std::vector<Ticks>> hist_;
};

int default_flow_base_stage(const RealizedFlow& flow);

// ---- segments ---------------------------------------------------------------

struct Segment {
  std::int64_t duration = 0;  // ticks
  bool spacer = false;
};

struct SegmentList {
  std::shared_ptr<const FlowTower> tower;
  std::vector<Segment> segments;

  Ticks total() const;
  std::size_t base_copies() const;
};

/// Base copies of duration h_{j0} interleaved with the nonzero spacers.
/// Throws SegmentBudgetExceeded.
SegmentList flow_segments(std::shared_ptr<const FlowTower> tower);
/// label,numerator,denominator per segment.
void write_segments_csv(const SegmentList& list, std::ostream& out);

// ---- correlations -----------------------------------------------------------

/// Exact D(t): pair measure in ticks of {u : phi(u) in a, phi(u + t) in b}.
struct FlowCorr {
  Rational t;
  Ticks lag = 0;  // t in ticks
  std::size_t alphabet_size = 0;
  std::vector<Ticks> measure;
  Ticks total = 0;  // column length in ticks

  Rational entry(std::size_t a, std::size_t b) const;
  JoiningMatrix joining() const;
};

/// One sweep over the segment list. |t| < H_J.
FlowCorr flow_corr(const SegmentList& segments, const Rational& t);
/// Same values from the hierarchical recursion.
FlowCorr flow_corr_block(const FlowTower& tower, const Rational& t);

/// Caching evaluator of t -> D(t) over one tower.
class FlowCorrelator {
 public:
  explicit FlowCorrelator(std::shared_ptr<const FlowTower> tower);

  const FlowTower& tower() const noexcept { return *tower_; }
  std::shared_ptr<const FlowTower> shared_tower() const noexcept { return tower_; }
  const JoiningMatrix& corr(const Rational& t);
  const JoiningMatrix& corr_ticks(Ticks t);
  const JoiningMatrix& product() const noexcept { return product_; }
  std::size_t evaluations() const noexcept { return cache_.size(); }

 private:
  std::shared_ptr<const FlowTower> tower_;
  JoiningMatrix product_;
  std::map<Ticks, JoiningMatrix> cache_;
};

// ---- P_m integrals ----------------------------------------------------------

enum class Orientation {
  negative,  // integral of D(t) over [-m, 0]
  positive,  // integral of D(t) over [0, m]
  shifted,   // integral of D(t - m) over [0, m], midpoint nodes
};

std::string to_string(Orientation o);

struct PmOptions {
  Orientation orientation = Orientation::negative;
  std::int64_t initial_intervals = 4;  // delta = m / initial_intervals
  double tolerance = 1e-4;             // max-abs between successive estimates
  int max_halvings = 12;
};

struct PmResult {
  Rational m;
  Orientation orientation = Orientation::negative;
  JoiningMatrix integral;  // not normalized: total mass close to m
  double quadrature_error = 0.0;
  int halvings = 0;
  Rational step;
  std::vector<double> differences;  // between successive estimates

  JoiningMatrix normalized() const;
};

/// Composite rule with step halving until successive estimates agree.
/// Throws NoConvergence.
PmResult flow_Pm_matrix(FlowCorrelator& corr, const Rational& m, PmOptions options = {});

// ---- limit check ------------------------------------------------------------

struct FlowFit {
  Rational shift;                   // a
  std::vector<std::int64_t> lengths;  // m_i
  double distance = 0.0;
};

struct FlowLimitOptions {
  PmOptions pm;
  double tolerance = 0.05;
  bool fit_family = true;
  Rational grid_step = Rational(1, 16);
};

struct FlowLimitReport {
  std::int64_t q = 1;
  int stage = 0;
  Rational lag;
  double residual_negative = 0.0;
  double residual_positive = 0.0;
  Orientation orientation = Orientation::negative;
  double residual = 0.0;
  double identity_gap = 0.0;  // |J(int_{-q}^0) - J(T_{-q} int_0^q)| / q
  double quadrature_error = 0.0;
  double distance_to_product = 0.0;
  double distance_to_identity = 0.0;
  bool within_tolerance = false;
  std::optional<FlowFit> best_fit;
};

/// Compares D(q h_j) with P_q / q in both orientations.
FlowLimitReport flow_limit_check(FlowCorrelator& corr, std::int64_t q, int stage,
                                 FlowLimitOptions options = {});

}  // namespace rankone
