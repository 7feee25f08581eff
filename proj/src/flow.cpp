#include "rankone/flow.hpp"

#include "rankone/error.hpp"
#include "hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rankone {

namespace {

constexpr int kTickBitBudget = 100;  // column length in ticks stays below 2^100

BigInt to_big(Ticks v) {
  const bool negative = v < 0;
  unsigned __int128 u = negative ? static_cast<unsigned __int128>(-(v + 1)) + 1
                                 : static_cast<unsigned __int128>(v);
  BigInt out = static_cast<std::uint64_t>(u >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(u);
  return negative ? BigInt(-out) : out;
}

Ticks from_big(const BigInt& v) {
  require(v == 0 || boost::multiprecision::msb(v < 0 ? BigInt(-v) : v) < 120,
          ErrorCode::time_out_of_range, "time value exceeds the tick range");
  const bool negative = v < 0;
  const BigInt mag = negative ? BigInt(-v) : v;
  const BigInt mask = (BigInt(1) << 64) - 1;
  const auto lo = static_cast<std::uint64_t>(mag & mask);
  const auto hi = static_cast<std::uint64_t>(mag >> 64);
  const Ticks t = static_cast<Ticks>((static_cast<unsigned __int128>(hi) << 64) | lo);
  return negative ? -t : t;
}

BigInt lcm_big(const BigInt& a, const BigInt& b) { return a / boost::multiprecision::gcd(a, b) * b; }

}  // namespace

std::string ticks_to_string(Ticks value) {
  if (value == 0) return "0";
  const bool negative = value < 0;
  unsigned __int128 u = negative ? static_cast<unsigned __int128>(-(value + 1)) + 1
                                 : static_cast<unsigned __int128>(value);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (negative) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

// ---- FlowTower --------------------------------------------------------------

FlowTower::FlowTower(const RealizedFlow& flow, int base_stage, int depth, FlowOptions options)
    : name_(flow.name), base_(base_stage), depth_(depth), slabs_(options.slabs), options_(options) {
  require(base_stage >= 1 && base_stage <= depth && depth <= flow.depth(),
          ErrorCode::invalid_argument, "need 1 <= j0 <= J <= realized depth");
  require(options.slabs >= 2, ErrorCode::invalid_argument, "slab count L must be >= 2");
  require(options.time_bits >= 0 && options.time_bits <= 40, ErrorCode::invalid_argument,
          "time_bits must lie in [0, 40]");
  const auto all = flow_heights(flow);
  heights_.assign(all.begin() + (base_stage - 1), all.begin() + depth);

  BigInt den = denominator(heights_.front());
  for (int k = base_stage; k < depth; ++k)
    for (const auto& s : flow.stage(k).spacers) den = lcm_big(den, denominator(s));
  resolution_ = den * BigInt(static_cast<std::uint64_t>(slabs_)) * (BigInt(1) << options.time_bits);
  const BigInt top = numerator(Rational(heights_.back() * resolution_));
  require(boost::multiprecision::msb(top) < kTickBitBudget, ErrorCode::depth_over_budget,
          "column too long for the tick grid; lower J or time_bits");

  for (const auto& h : heights_) lengths_.push_back(to_ticks(h));
  slab_width_ = lengths_.front() / static_cast<Ticks>(slabs_);

  std::vector<Ticks> base(alphabet_size(), 0);
  for (std::size_t s = 0; s < slabs_; ++s) base[s] = slab_width_;
  hist_.push_back(std::move(base));
  for (int k = base_stage; k < depth; ++k) {
    const auto& st = flow.stage(k);
    std::vector<Ticks> starts, gaps;
    Ticks pos = 0;
    const Ticks len = lengths_[static_cast<std::size_t>(k - base_stage)];
    for (std::int64_t i = 0; i < st.cuts; ++i) {
      starts.push_back(pos);
      const Ticks gap = to_ticks(st.spacers.at(static_cast<std::size_t>(i)));
      gaps.push_back(gap);
      pos += len + gap;
    }
    std::vector<Ticks> h(alphabet_size(), 0);
    const auto& prev = hist_.back();
    for (std::size_t s = 0; s < h.size(); ++s) h[s] = prev[s] * static_cast<Ticks>(st.cuts);
    for (auto g : gaps) h[spacer_symbol()] += g;
    starts_.push_back(std::move(starts));
    spacers_.push_back(std::move(gaps));
    hist_.push_back(std::move(h));
  }
  starts_.emplace_back();  // top level has no copies
  spacers_.emplace_back();
}

std::size_t FlowTower::index(int k) const {
  require(k >= base_ && k <= depth_, ErrorCode::invalid_argument,
          "stage " + std::to_string(k) + " outside [j0, J]");
  return static_cast<std::size_t>(k - base_);
}

Ticks FlowTower::to_ticks(const Rational& t) const {
  const Rational scaled = Rational(t * resolution_);
  require(denominator(scaled) == 1, ErrorCode::time_out_of_range,
          "time value is not on the tick grid");
  return from_big(numerator(scaled));
}

Rational FlowTower::to_time(Ticks t) const { return Rational(to_big(t), resolution_); }

void FlowTower::add_prefix_histogram(int k, Ticks t, Ticks* acc) const {
  for (;;) {
    if (t <= 0) return;
    if (k == base_) {
      for (std::size_t s = 0; s < slabs_; ++s) {
        const Ticks lo = static_cast<Ticks>(s) * slab_width_;
        acc[s] += std::clamp<Ticks>(t - lo, 0, slab_width_);
      }
      return;
    }
    const auto& starts = starts_[index(k - 1)];
    const auto& gaps = spacers_[index(k - 1)];
    const Ticks len = length(k - 1);
    const auto it = std::upper_bound(starts.begin(), starts.end(), t);
    const auto i = static_cast<std::size_t>(it - starts.begin()) - 1;
    const auto& full = hist_[index(k - 1)];
    for (std::size_t s = 0; s < full.size(); ++s) acc[s] += full[s] * static_cast<Ticks>(i);
    for (std::size_t c = 0; c < i; ++c) acc[spacer_symbol()] += gaps[c];
    const Ticks inner = t - starts[i];
    if (inner >= len) {
      for (std::size_t s = 0; s < full.size(); ++s) acc[s] += full[s];
      acc[spacer_symbol()] += inner - len;
      return;
    }
    --k;
    t = inner;
  }
}

std::vector<double> FlowTower::measures() const {
  std::vector<double> mu;
  const auto total = static_cast<double>(length());
  for (auto v : hist_.back()) mu.push_back(static_cast<double>(v) / total);
  return mu;
}

int default_flow_base_stage(const RealizedFlow& flow) {
  const auto hs = flow_heights(flow);
  for (std::size_t k = 0; k < hs.size(); ++k)
    if (hs[k] >= 8) return static_cast<int>(k) + 1;
  return static_cast<int>(hs.size());
}

// ---- segments ---------------------------------------------------------------

Ticks SegmentList::total() const {
  Ticks t = 0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

std::size_t SegmentList::base_copies() const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [](const Segment& s) { return !s.spacer; }));
}

namespace {

void emit_segments(const FlowTower& t, int k, std::vector<Segment>& out) {
  if (k == t.base_stage()) {
    out.push_back({static_cast<std::int64_t>(t.length(k)), false});
    return;
  }
  for (std::size_t i = 0; i < t.copies(k - 1); ++i) {
    emit_segments(t, k - 1, out);
    const Ticks g = t.spacer(k - 1, i);
    if (g > 0) out.push_back({static_cast<std::int64_t>(g), true});
  }
}

}  // namespace

SegmentList flow_segments(std::shared_ptr<const FlowTower> tower) {
  const FlowTower& t = *tower;
  BigInt copies = 1, count = 1;
  for (int k = t.base_stage(); k < t.depth(); ++k) {
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < t.copies(k); ++i) nonzero += t.spacer(k, i) > 0;
    copies *= t.copies(k);
    count = count * t.copies(k) + nonzero;
  }
  require(copies <= BigInt(t.options().segment_budget), ErrorCode::segment_budget_exceeded,
          "base-copy count " + copies.str() + " exceeds the budget of " +
              std::to_string(t.options().segment_budget));
  require(t.length(t.base_stage()) <= std::numeric_limits<std::int64_t>::max(),
          ErrorCode::segment_budget_exceeded, "base duration does not fit 64-bit ticks");
  SegmentList list;
  list.tower = std::move(tower);
  list.segments.reserve(static_cast<std::size_t>(count));
  emit_segments(t, t.depth(), list.segments);
  return list;
}

void write_segments_csv(const SegmentList& list, std::ostream& out) {
  out << "label,numerator,denominator\n";
  for (const auto& s : list.segments) {
    const Rational d = list.tower->to_time(s.duration);
    out << (s.spacer ? "spacer" : "base") << ',' << numerator(d) << ',' << denominator(d) << '\n';
  }
}

// ---- correlations -----------------------------------------------------------

Rational FlowCorr::entry(std::size_t a, std::size_t b) const {
  return Rational(to_big(measure.at(a * alphabet_size + b)), to_big(total));
}

JoiningMatrix FlowCorr::joining() const {
  JoiningMatrix j;
  j.alphabet_size = alphabet_size;
  const auto len = static_cast<double>(total);
  for (auto v : measure) j.values.push_back(static_cast<double>(v) / len);
  j.boundary_bound = std::abs(static_cast<double>(lag)) / len;
  return j;
}

namespace {

void transpose_in_place(std::vector<Ticks>& m, std::size_t a) {
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = i + 1; j < a; ++j) std::swap(m[i * a + j], m[j * a + i]);
}

// Slab masses of the base offsets [o, o + len) added to column `col` (or row).
void add_slab_run(Ticks o, Ticks len, Ticks w, std::size_t a, std::size_t fixed, bool as_row,
                  std::vector<Ticks>& m) {
  while (len > 0) {
    const auto s = static_cast<std::size_t>(o / w);
    const Ticks step = std::min(len, w - o % w);
    if (as_row)
      m[fixed * a + s] += step;
    else
      m[s * a + fixed] += step;
    o += step;
    len -= step;
  }
}

void add_slab_pairs(Ticks o1, Ticks o2, Ticks len, Ticks w, std::size_t a, std::vector<Ticks>& m) {
  while (len > 0) {
    const auto s1 = static_cast<std::size_t>(o1 / w);
    const auto s2 = static_cast<std::size_t>(o2 / w);
    const Ticks step = std::min({len, w - o1 % w, w - o2 % w});
    m[s1 * a + s2] += step;
    o1 += step;
    o2 += step;
    len -= step;
  }
}

void check_time(const FlowTower& t, Ticks lag) {
  require(lag > -t.length() && lag < t.length(), ErrorCode::time_out_of_range,
          "|t| must be < H_J");
}

}  // namespace

FlowCorr flow_corr(const SegmentList& list, const Rational& time) {
  const FlowTower& tower = *list.tower;
  const Ticks lag = tower.to_ticks(time);
  check_time(tower, lag);
  const Ticks d = lag < 0 ? -lag : lag;
  const std::size_t a = tower.alphabet_size();
  const std::size_t sp = tower.spacer_symbol();
  const Ticks w = tower.slab_width();
  const Ticks total = tower.length();

  FlowCorr out;
  out.t = time;
  out.lag = lag;
  out.alphabet_size = a;
  out.total = total;
  out.measure.assign(a * a, 0);
  const auto& seg = list.segments;
  if (seg.empty()) return out;

  std::size_t i = 0, j = 0;
  Ticks start_i = 0, start_j = 0;
  while (start_j + seg[j].duration <= d) {
    start_j += seg[j].duration;
    ++j;
  }
  Ticks u = 0;
  const Ticks stop = total - d;
  while (u < stop) {
    const Ticks end_i = start_i + seg[i].duration;
    const Ticks end_j = start_j + seg[j].duration;
    const Ticks next = std::min({end_i, end_j - d, stop});
    const Ticks len = next - u;
    const bool left_spacer = seg[i].spacer, right_spacer = seg[j].spacer;
    const Ticks o1 = u - start_i, o2 = u + d - start_j;
    if (!left_spacer && !right_spacer)
      add_slab_pairs(o1, o2, len, w, a, out.measure);
    else if (!left_spacer)
      add_slab_run(o1, len, w, a, sp, false, out.measure);
    else if (!right_spacer)
      add_slab_run(o2, len, w, a, sp, true, out.measure);
    else
      out.measure[sp * a + sp] += len;
    u = next;
    if (u == end_i && i + 1 < seg.size()) {
      start_i = end_i;
      ++i;
    }
    if (u + d == end_j && j + 1 < seg.size()) {
      start_j = end_j;
      ++j;
    }
  }
  if (lag < 0) transpose_in_place(out.measure, a);
  return out;
}

namespace {

struct FlowGeometry {
  using Length = Ticks;
  using Value = Ticks;

  const FlowTower& tower;

  int base() const { return tower.base_stage(); }
  int depth() const { return tower.depth(); }
  std::size_t alphabet() const { return tower.alphabet_size(); }
  std::size_t spacer_symbol() const { return tower.spacer_symbol(); }
  Length length(int k) const { return tower.length(k); }
  std::size_t copies(int k) const { return tower.copies(k); }
  Length copy_start(int k, std::size_t i) const { return tower.copy_start(k, i); }
  Length spacer(int k, std::size_t i) const { return tower.spacer(k, i); }

  void add_base_pairs(Length d, Value* m) const {
    const std::size_t a = alphabet();
    const std::size_t L = tower.slabs();
    const Ticks w = tower.slab_width();
    for (std::size_t x = 0; x < L; ++x) {
      const Ticks lo_x = static_cast<Ticks>(x) * w;
      for (std::size_t y = x; y < L; ++y) {
        const Ticks lo_y = static_cast<Ticks>(y) * w;
        const Ticks lo = std::max(lo_x, lo_y - d);
        const Ticks hi = std::min(lo_x + w, lo_y + w - d);
        if (hi > lo) m[x * a + y] += hi - lo;
      }
    }
  }
  void add_histogram(int k, Length b, Length e, Value* acc) const {
    std::vector<Ticks> hi(alphabet(), 0), lo(alphabet(), 0);
    tower.add_prefix_histogram(k, e, hi.data());
    tower.add_prefix_histogram(k, b, lo.data());
    for (std::size_t s = 0; s < hi.size(); ++s) acc[s] += hi[s] - lo[s];
  }
  void add_full_histogram(int k, Value* acc) const {
    const auto& h = tower.histogram(k);
    for (std::size_t s = 0; s < h.size(); ++s) acc[s] += h[s];
  }
};

std::vector<Ticks> block_measure(const FlowTower& tower, Ticks lag) {
  check_time(tower, lag);
  const FlowGeometry g{tower};
  const detail::HierarchicalPairs<FlowGeometry> pairs(g);
  auto m = pairs.compute(lag < 0 ? -lag : lag);
  if (lag < 0) transpose_in_place(m, tower.alphabet_size());
  return m;
}

}  // namespace

FlowCorr flow_corr_block(const FlowTower& tower, const Rational& time) {
  FlowCorr out;
  out.t = time;
  out.alphabet_size = tower.alphabet_size();
  out.total = tower.length();
  out.lag = tower.to_ticks(time);
  out.measure = block_measure(tower, out.lag);
  return out;
}

FlowCorrelator::FlowCorrelator(std::shared_ptr<const FlowTower> tower) : tower_(std::move(tower)) {
  const auto mu = tower_->measures();
  product_.alphabet_size = mu.size();
  product_.construction = tower_->name();
  product_.depth = tower_->depth();
  for (double x : mu)
    for (double y : mu) product_.values.push_back(x * y);
}

const JoiningMatrix& FlowCorrelator::corr_ticks(Ticks t) {
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;
  FlowCorr c;
  c.t = tower_->to_time(t);
  c.lag = t;
  c.alphabet_size = tower_->alphabet_size();
  c.total = tower_->length();
  c.measure = block_measure(*tower_, t);
  JoiningMatrix j = c.joining();
  j.construction = tower_->name();
  j.depth = tower_->depth();
  return cache_.emplace(t, std::move(j)).first->second;
}

const JoiningMatrix& FlowCorrelator::corr(const Rational& t) { return corr_ticks(tower_->to_ticks(t)); }

// ---- P_m integrals ----------------------------------------------------------

std::string to_string(Orientation o) {
  switch (o) {
    case Orientation::negative: return "negative";
    case Orientation::positive: return "positive";
    case Orientation::shifted: return "shifted";
  }
  return "?";
}

JoiningMatrix PmResult::normalized() const {
  JoiningMatrix j = integral;
  if (m == 0) return j;
  const double s = static_cast<double>(m);
  for (auto& v : j.values) v /= s;
  return j;
}

namespace {

JoiningMatrix quadrature(FlowCorrelator& corr, Ticks m, std::int64_t n, Orientation o) {
  const std::size_t a = corr.tower().alphabet_size();
  JoiningMatrix acc;
  acc.alphabet_size = a;
  acc.values.assign(a * a, 0.0);
  const double step = static_cast<double>(corr.tower().to_time(m)) / static_cast<double>(n);
  auto add = [&](Ticks t, double weight) {
    const auto& d = corr.corr_ticks(t);
    for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += weight * d.values[i];
    acc.boundary_bound = std::max(acc.boundary_bound, d.boundary_bound);
  };
  const Ticks h = m / n;
  require(h * n == m, ErrorCode::time_out_of_range, "quadrature step is not on the tick grid");
  if (o == Orientation::shifted) {
    require(h % 2 == 0, ErrorCode::time_out_of_range, "midpoint node is not on the tick grid");
    for (std::int64_t k = 0; k < n; ++k) add(h * k + h / 2 - m, step);
    return acc;
  }
  const Ticks lo = o == Orientation::negative ? -m : 0;
  for (std::int64_t k = 0; k <= n; ++k) add(lo + h * k, (k == 0 || k == n) ? step / 2 : step);
  return acc;
}

}  // namespace

PmResult flow_Pm_matrix(FlowCorrelator& corr, const Rational& m, PmOptions options) {
  require(m >= 0, ErrorCode::invalid_argument, "m must be >= 0");
  require(options.initial_intervals > 0, ErrorCode::invalid_argument,
          "initial interval count must be positive");
  const FlowTower& tower = corr.tower();
  PmResult r;
  r.m = m;
  r.orientation = options.orientation;
  const std::size_t a = tower.alphabet_size();
  if (m == 0) {
    r.integral.alphabet_size = a;
    r.integral.values.assign(a * a, 0.0);
    return r;
  }
  const Ticks mt = tower.to_ticks(m);
  require(mt < tower.length(), ErrorCode::time_out_of_range, "m must be < H_J");
  std::int64_t n = options.initial_intervals;
  JoiningMatrix prev = quadrature(corr, mt, n, options.orientation);
  for (int i = 1; i <= options.max_halvings; ++i) {
    n *= 2;
    JoiningMatrix next = quadrature(corr, mt, n, options.orientation);
    const double diff = max_abs_distance(next, prev);
    r.differences.push_back(diff);
    prev = std::move(next);
    if (diff < options.tolerance) {
      r.integral = std::move(prev);
      r.integral.construction = tower.name();
      r.integral.depth = tower.depth();
      r.quadrature_error = diff;
      r.halvings = i;
      r.step = m / n;
      return r;
    }
  }
  fail(ErrorCode::no_convergence, "quadrature did not reach tolerance after " +
                                      std::to_string(options.max_halvings) + " halvings");
}

// ---- limit check ------------------------------------------------------------

namespace {

// Discrete law of -(U_1 + ... + U_k) (negative) or U_1 + ... + U_k (positive)
// for U_i uniform on [0, m_i], on a grid of `per_unit` nodes per unit time.
std::map<std::int64_t, double> uniform_sum_law(const std::vector<std::int64_t>& lengths,
                                               std::int64_t per_unit, bool negative) {
  std::map<std::int64_t, double> law{{0, 1.0}};
  for (auto len : lengths) {
    const std::int64_t n = len * per_unit;
    std::map<std::int64_t, double> next;
    for (const auto& [x, p] : law)
      for (std::int64_t k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 0.5 / static_cast<double>(n) : 1.0 / static_cast<double>(n);
        next[x + (negative ? -k : k)] += p * w;
      }
    law.swap(next);
  }
  return law;
}

}  // namespace

FlowLimitReport flow_limit_check(FlowCorrelator& corr, std::int64_t q, int stage,
                                 FlowLimitOptions options) {
  const FlowTower& tower = corr.tower();
  require(q >= 1, ErrorCode::invalid_argument, "q must be >= 1");
  require(stage >= tower.base_stage() && stage < tower.depth(), ErrorCode::invalid_argument,
          "stage j must satisfy j0 <= j < J");
  FlowLimitReport r;
  r.q = q;
  r.stage = stage;
  r.lag = tower.height(stage) * q;
  const Ticks lag = tower.to_ticks(r.lag);
  require(lag <= tower.length() / 4, ErrorCode::lag_out_of_range,
          "q h_j exceeds a quarter of the column");
  const JoiningMatrix target = corr.corr_ticks(lag);

  PmOptions pm = options.pm;
  pm.orientation = Orientation::negative;
  const PmResult neg = flow_Pm_matrix(corr, Rational(q), pm);
  pm.orientation = Orientation::positive;
  const PmResult pos = flow_Pm_matrix(corr, Rational(q), pm);
  pm.orientation = Orientation::shifted;
  const PmResult shifted = flow_Pm_matrix(corr, Rational(q), pm);

  r.residual_negative = max_abs_distance(target, neg.normalized());
  r.residual_positive = max_abs_distance(target, pos.normalized());
  r.orientation =
      r.residual_negative <= r.residual_positive ? Orientation::negative : Orientation::positive;
  r.residual = std::min(r.residual_negative, r.residual_positive);
  r.identity_gap = max_abs_distance(neg.normalized(), shifted.normalized());
  r.quadrature_error = std::max({neg.quadrature_error, pos.quadrature_error,
                                 shifted.quadrature_error});
  r.distance_to_product = max_abs_distance(target, corr.product());
  r.distance_to_identity = max_abs_distance(target, corr.corr_ticks(0));
  r.within_tolerance = r.residual <= options.tolerance;

  if (options.fit_family) {
    const Rational g = options.grid_step;
    require(g > 0 && numerator(g) == 1, ErrorCode::invalid_argument,
            "fit grid step must be 1/n");
    const auto per_unit = static_cast<std::int64_t>(denominator(g));
    const bool negative = r.orientation == Orientation::negative;
    const std::vector<std::vector<std::int64_t>> sets{{}, {1}, {2}, {3}, {1, 1}, {1, 2}};
    const Ticks unit = tower.to_ticks(g);
    FlowFit best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::int64_t a4 = -8; a4 <= 8; ++a4) {
      const Rational shift(a4, 4);
      const Ticks shift_ticks = tower.to_ticks(shift);
      for (const auto& set : sets) {
        const auto law = uniform_sum_law(set, per_unit, negative);
        JoiningMatrix fit;
        fit.alphabet_size = tower.alphabet_size();
        fit.values.assign(target.values.size(), 0.0);
        bool in_range = true;
        for (const auto& [x, p] : law) {
          const Ticks t = shift_ticks + unit * x;
          if (t <= -tower.length() / 4 || t >= tower.length() / 4) {
            in_range = false;
            break;
          }
          const auto& d = corr.corr_ticks(t);
          for (std::size_t i = 0; i < fit.values.size(); ++i) fit.values[i] += p * d.values[i];
        }
        if (!in_range) continue;
        const double dist = max_abs_distance(target, fit);
        if (dist < best.distance) best = FlowFit{shift, set, dist};
      }
    }
    if (std::isfinite(best.distance)) r.best_fit = best;
  }
  return r;
}

}  // namespace rankone
