// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "rankone/counts.hpp"
#include "rankone/diagnostics.hpp"
#include "rankone/experiments.hpp"
#include "rankone/flow.hpp"
#include "rankone/lab.hpp"
#include "rankone/operator.hpp"
#include "rankone/schedule.hpp"
#include "rankone/word.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rankone;

namespace {

// Tolerances, fixed here and nowhere else.
constexpr double kHeightsSeconds = 1.0;
constexpr double kOracleSeconds = 30.0;
constexpr double kModifiedCoeffLo = 0.47, kModifiedCoeffHi = 0.53;
constexpr double kModifiedTheta = 0.03, kModifiedResidual = 0.03;
constexpr double kModifiedSeconds = 10.0;
constexpr double kGeometricDistance = 0.03, kGeometricCoeff = 0.02;
constexpr double kStochasticDistance = 0.05;
constexpr double kRigidSlack = 1e-12, kNonRigidFloor = 0.2;
constexpr double kScanResidual = 0.05;
constexpr double kFlowResidual = 0.05, kFlowIdentity = 1e-3;
constexpr double kBlockSeconds = 5.0, kNaiveSeconds = 60.0;
constexpr double kDepthGap = 1e-4;
// |lag| / l_W for the word that carries a lag: mass lost past the word end.
constexpr double kBoundary = 1e-2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<Tower> tower(const std::string& name, int depth, int base = 0) {
  const auto r = realize(catalog(name), depth);
  return std::make_shared<Tower>(r, base > 0 ? base : default_base_stage(r), depth);
}

// Least depth J with l_base / l_J <= gap.
int depth_for_gap(const std::string& name, int base, double gap) {
  const auto h = heights(catalog(name), 64);
  for (int J = base + 1; J <= h.depth(); ++J)
    if (static_cast<double>(h.at(base)) / static_cast<double>(h.at(J)) <= gap) return J;
  return h.depth();
}

// Least word depth W whose word is long enough that D(lag l_stage) loses at
// most kBoundary of its mass past the end.
int word_depth(const std::string& name, int stage) {
  const auto h = heights(catalog(name), 64);
  int W = stage + 1;
  while (static_cast<double>(h.at(stage)) / static_cast<double>(h.at(W)) > kBoundary) ++W;
  return W;
}

// ---- 1 -----------------------------------------------------------------------

Outcome heights_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int J = 200;
  bool ok = true;
  for (const std::string name : {"chacon", "modified-chacon", "spaced-odometer5"}) {
    const auto s = catalog(name);
    const auto h = heights(s, J);
    ok = ok && h.depth() == J;
    BigInt l = boost::multiprecision::numerator(s.schedule().h1) + 1;
    for (int j = 1; j <= J && ok; ++j) {
      ok = h.at(j) == l;
      BigInt spacer = 0;
      for (auto x : s.spacers(j)) spacer += x;
      l = l * s.cuts(j) + spacer;
    }
  }
  const auto ch = heights(catalog("chacon"), J);
  const auto mc = heights(catalog("modified-chacon"), J);
  BigInt two = 1, three = 1;
  for (int j = 1; j <= J && ok; ++j) {
    two *= 2;
    three *= 3;
    ok = ch.at(j) == two - 1 && mc.at(j) == (three - 1) / 2;
  }
  ok = ok && ch.at(5) == 31 && mc.at(4) == 40;
  const double dt = seconds_since(t0);
  return {ok && dt < kHeightsSeconds, (Detail() << "depth " << J << ", " << dt << " s").str()};
}

// ---- 2 -----------------------------------------------------------------------

std::vector<std::int64_t> oracle_lags(std::uint64_t length, std::uint64_t previous, std::mt19937_64& rng) {
  std::vector<std::int64_t> lags;
  for (std::uint64_t l : {previous - 1, previous, previous + 1})
    if (l < length) lags.push_back(static_cast<std::int64_t>(l));
  while (lags.size() < 50) lags.push_back(static_cast<std::int64_t>(rng() % length));
  return lags;
}

Outcome counter_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t towers = 0, comparisons = 0, mismatches = 0;
  for (const auto& name : catalog_names()) {
    const auto s = catalog(name);
    if (s.kind() == Kind::flow) {
      for (int J = 2;; ++J) {
        const auto fl = realize_flow(s, J);
        if (flow_heights(fl).back() > 100000) break;
        FlowOptions o;
        o.slabs = 6;
        const auto t = std::make_shared<FlowTower>(fl, std::min(default_flow_base_stage(fl), J - 1), J, o);
        const auto segs = flow_segments(t);
        const auto lags = oracle_lags(static_cast<std::uint64_t>(t->length()),
                                      static_cast<std::uint64_t>(t->length(J - 1)), rng);
        ++towers;
        for (auto lag : lags)
          for (Ticks signed_lag : {static_cast<Ticks>(lag), -static_cast<Ticks>(lag)}) {
            ++comparisons;
            const auto time = t->to_time(signed_lag);
            if (flow_corr(segs, time).measure != flow_corr_block(*t, time).measure) ++mismatches;
          }
      }
      continue;
    }
    for (int J = 2;; ++J) {
      const auto r = s.is_stochastic() ? realize_stochastic(s, 1234, J) : realize(s, J);
      const auto h = heights(r);
      if (h.at(J) > 100000) break;
      const Tower t(r, std::min(default_base_stage(r), J - 1), J);
      const auto lags = oracle_lags(t.length(), t.length(J - 1), rng);
      const auto naive = lag_counts_naive(t, lags);
      const auto block = lag_counts_block(t, lags);
      ++towers;
      for (auto lag : lags) {
        comparisons += 2;
        mismatches += naive.at(lag) != block.at(lag);
        mismatches += naive.at(-lag) != block.at(-lag);
      }
    }
  }
  const double dt = seconds_since(t0);
  return {mismatches == 0 && dt < kOracleSeconds,
          (Detail() << towers << " towers, " << comparisons << " lags, " << mismatches << " mismatches, " << dt
                    << " s")
              .str()};
}

// ---- 3 -----------------------------------------------------------------------

Outcome modified_chacon_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = realize(catalog("modified-chacon"), 40);
  const int base = default_base_stage(r);
  const int J = depth_for_gap("modified-chacon", base, kDepthGap);
  const int W = word_depth("modified-chacon", J - 1);
  Workbench bench(std::make_shared<Tower>(realize(catalog("modified-chacon"), W), base, W));
  const auto lag = -static_cast<std::int64_t>(bench.tower().length(J - 1));
  const auto c = classify_limit(bench.joining(lag), bench.window(8), bench.product());
  const double c0 = c.coefficient(0), c1 = c.coefficient(1);
  const double dt = seconds_since(t0);
  const bool ok = c0 >= kModifiedCoeffLo && c0 <= kModifiedCoeffHi && c1 >= kModifiedCoeffLo &&
                  c1 <= kModifiedCoeffHi && c.theta <= kModifiedTheta && c.residual_max <= kModifiedResidual &&
                  dt < kModifiedSeconds;
  return {ok, (Detail() << "j0 " << base << ", J " << J << ", word depth " << W << ", c0 " << c0 << ", c1 " << c1 << ", theta "
                        << c.theta << ", residual " << c.residual_max << ", " << dt << " s")
                  .str()};
}

// ---- 4 -----------------------------------------------------------------------

Outcome chacon_geometric() {
  const auto r = realize(catalog("chacon"), 40);
  const int base = default_base_stage(r);
  const int J = depth_for_gap("chacon", base, kDepthGap);
  const int W = word_depth("chacon", J - 1);
  Workbench bench(std::make_shared<Tower>(realize(catalog("chacon"), W), base, W));
  const auto lag = -static_cast<std::int64_t>(bench.tower().length(J - 1));
  FamilyParams p;
  p.terms = 20;
  const auto family = build_family("chacon-geometric", p);
  const auto target = joining_matrix(family, bench.basis_for(family), bench.product());
  const auto observed = bench.joining(lag);
  const double distance = max_abs_distance(observed, target);
  const auto c = classify_limit(observed, bench.window(8), bench.product());
  double worst = 0.0;
  for (int i = 0; i <= 4; ++i) worst = std::max(worst, std::abs(c.coefficient(i) - std::ldexp(1.0, -(i + 1))));
  return {distance <= kGeometricDistance && worst <= kGeometricCoeff,
          (Detail() << "j0 " << base << ", J " << J << ", word depth " << W << ", distance " << distance << ", worst coefficient error "
                    << worst)
              .str()};
}

// ---- 5 -----------------------------------------------------------------------

Outcome stochastic_chacon() {
  constexpr int J = 11;
  constexpr int j = J - 3;
  const Rational half(1, 2);
  const auto s = catalog("stochastic-chacon");
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u, 5u, 8u}) {
    const auto r = realize_stochastic(s, seed, J);
    Workbench bench(std::make_shared<Tower>(r, default_base_stage(r), J));
    for (std::int64_t q = 1; q <= 3; ++q) {
      FamilyParams p;
      p.m = q;
      p.a = half;
      const auto target = build_family("stochastic", p);
      const auto lag = q * static_cast<std::int64_t>(bench.tower().length(j));
      const double d =
          max_abs_distance(bench.joining(lag), joining_matrix(target, bench.basis_for(target), bench.product()));
      worst = std::max(worst, d);
      ok = ok && d <= kStochasticDistance;
    }
  }
  FamilyParams pp;
  pp.m = pp.n = 1;
  pp.a = half;
  OperatorExpression expected;
  expected.coefficients = {{-1, Rational(1, 4)}, {0, Rational(1, 2)}, {1, Rational(1, 4)}};
  const bool algebra = build_family("stochastic", pp) == expected;
  return {ok && algebra, (Detail() << "J " << J << ", j " << j << ", 5 seeds, q 1..3, worst distance " << worst
                                   << ", P P* exact " << (algebra ? "yes" : "no"))
                             .str()};
}

// ---- 6 -----------------------------------------------------------------------

Outcome corollary_collapse() {
  int checked = 0;
  bool ok = true;
  for (std::int64_t m = 0; m <= 8; ++m)
    for (std::int64_t n = 0; m + n <= 8; ++n) {
      FamilyParams p;
      p.m = m;
      p.n = n;
      p.a = Rational(1, 2);
      // T^{-m} ((I + T)/2)^{m+n} by the binomial theorem
      OperatorExpression rhs;
      const std::int64_t N = m + n;
      BigInt binom = 1;
      const BigInt scale = BigInt(1) << N;
      for (std::int64_t k = 0; k <= N; ++k) {
        rhs.coefficients[k - m] = Rational(binom, scale);
        binom = binom * (N - k) / (k + 1);
      }
      ok = ok && build_family("stochastic", p) == rhs;
      ++checked;
    }
  return {ok, (Detail() << checked << " pairs (m, n) with m + n <= 8, exact").str()};
}

// ---- 7 -----------------------------------------------------------------------

Outcome rigidity_contrast() {
  constexpr int J = 16;
  auto odo_tower = tower("dyadic-odometer", J);
  Workbench odo(odo_tower);
  const int base = odo_tower->base_stage();
  std::vector<std::int64_t> lags;
  for (int j = base; j <= J - 3; ++j) lags.push_back(static_cast<std::int64_t>(odo_tower->length(j)));
  const auto rigid = rigidity_scan(odo, lags);
  bool ok = true;
  double worst_margin = -1.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double bound = static_cast<double>(lags[i]) / static_cast<double>(odo_tower->length());
    worst_margin = std::max(worst_margin, rigid.entries[i].l1 - bound);
    ok = ok && rigid.entries[i].l1 <= bound + kRigidSlack;
  }

  // modified Chacon at the lags l_j of the same stages j
  auto mc_tower = tower("modified-chacon", 12);
  Workbench mc(mc_tower);
  std::vector<std::int64_t> mc_lags;
  for (int j = base; j <= 12 - 3; ++j) mc_lags.push_back(static_cast<std::int64_t>(mc_tower->length(j)));
  const auto loose = rigidity_scan(mc, mc_lags);
  ok = ok && loose.minimum_l1 >= kNonRigidFloor;
  return {ok, (Detail() << "odometer stages " << base << ".." << J - 3 << " worst l1 - l_j/l_J " << worst_margin
                        << "; modified Chacon minimum l1 " << loose.minimum_l1)
                  .str()};
}

// ---- 8 -----------------------------------------------------------------------

Outcome limit_scan_consistency() {
  constexpr int J = 12;
  auto t = tower("modified-chacon", J);
  Workbench bench(t);
  std::vector<std::int64_t> lags;
  for (int j = t->base_stage() + 2; j <= J - 3; ++j) {
    const auto l = static_cast<std::int64_t>(t->length(j));
    for (std::int64_t x : {l, l + 1, 2 * l}) {
      lags.push_back(x);
      lags.push_back(-x);
    }
  }
  bench.prefetch(lags);
  const auto basis = bench.window(8);
  double worst = 0.0;
  for (auto lag : lags)
    worst = std::max(worst, classify_limit(bench.joining(lag), basis, bench.product()).residual_max);
  return {worst <= kScanResidual, (Detail() << lags.size() << " lags over stages " << t->base_stage() + 2 << ".."
                                            << J - 3 << ", worst residual " << worst)
                                      .str()};
}

// ---- 9 -----------------------------------------------------------------------

Outcome flow_limit() {
  const auto s = catalog("staircase-flow");
  const auto probe = realize_flow(s, 40);
  const int base = default_flow_base_stage(probe);
  const auto h = flow_heights(probe);
  int J = base + 1;
  while (static_cast<double>(h.at(static_cast<std::size_t>(base - 1)) / h.at(static_cast<std::size_t>(J - 1))) >
         kDepthGap)
    ++J;
  FlowCorrelator corr(std::make_shared<FlowTower>(realize_flow(s, J), base, J));
  const int stage = std::max(base, J - 2);
  const auto r = flow_limit_check(corr, 1, stage);
  return {r.residual <= kFlowResidual && r.identity_gap <= kFlowIdentity,
          (Detail() << "j0 " << base << ", J " << J << ", stage " << stage << ", orientation "
                    << to_string(r.orientation) << ", residual " << r.residual << ", identity gap "
                    << r.identity_gap)
              .str()};
}

// ---- 10 ----------------------------------------------------------------------

Outcome performance() {
  constexpr int big = 36;  // l_J = 2^36 - 1
  const auto t_big = tower("chacon", big);
  auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::int64_t> top{static_cast<std::int64_t>(t_big->length(big - 1))};
  const auto block = lag_counts_block(*t_big, top);
  const auto plus = corr_matrix(block, top[0]);
  const auto minus = corr_matrix(block, -top[0]);
  const double block_s = seconds_since(t0);
  const bool block_ok = t_big->length() >= (std::uint64_t{1} << 35) && plus.sum() > 0 && minus.sum() > 0;

  constexpr int mid = 30;  // l_J = 2^30 - 1 > 10^9
  const auto t_mid = tower("chacon", mid);
  const std::vector<std::int64_t> lags{static_cast<std::int64_t>(t_mid->length(mid - 1)), 1};
  t0 = std::chrono::steady_clock::now();
  NaiveOptions seq;
  const auto a = lag_counts_naive(*t_mid, lags, seq);
  const double naive_s = seconds_since(t0);
  NaiveOptions par;
  par.threads = 4;
  const auto b = lag_counts_naive(*t_mid, lags, par);
  const auto c = lag_counts_block(*t_mid, lags);
  bool same = true;
  for (auto lag : lags) same = same && a.at(lag) == b.at(lag) && a.at(lag) == c.at(lag);
  return {block_ok && block_s < kBlockSeconds && naive_s < kNaiveSeconds && same,
          (Detail() << "block at l_J = " << t_big->length() << ": " << block_s << " s; naive at l_J = "
                    << t_mid->length() << ": " << naive_s << " s; threads 1 vs 4 vs block identical "
                    << (same ? "yes" : "no"))
              .str()};
}

// ---- 11 ----------------------------------------------------------------------

Outcome reproducibility() {
  const std::string text = R"(construction.catalog = stochastic-chacon
plan.depth = 10
experiment.scan.kind = limit-scan
experiment.scan.lags = l{6..7}, -l7
experiment.conv.kind = converge
experiment.conv.family = stochastic
experiment.rig.kind = rigidity
experiment.rig.lags = l{4..7}
experiment.mix.kind = mixing
experiment.mix.lags = l{4..7}
experiment.dis.kind = disjointness
experiment.tri.kind = triple
experiment.tri.pairs = 1:l{4..6}
)";
  PlanOverrides o;
  o.seed = 42;
  const auto dump = [&](const PlanOverrides& ov) { return run_plan(parse_config(text, ov)).to_json(false).dump(2); };
  const auto first = dump(o);
  const auto second = dump(o);
  PlanOverrides other;
  other.seed = 43;
  const auto third = dump(other);

  const std::string flow = "construction.catalog = staircase-flow\nplan.depth = 9\nexperiment.f.kind = flow-limit\n";
  const auto f1 = run_plan(parse_config(flow)).to_json(false).dump(2);
  const auto f2 = run_plan(parse_config(flow)).to_json(false).dump(2);
  const bool ok = first == second && f1 == f2 && first != third;
  return {ok, (Detail() << "seed 42 twice identical " << (first == second ? "yes" : "no")
                        << ", flow plan identical " << (f1 == f2 ? "yes" : "no") << ", seed 43 differs "
                        << (first != third ? "yes" : "no") << ", " << first.size() << " bytes")
                  .str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"heights exactness", heights_exactness},
      {"counter oracle equivalence", counter_oracle},
      {"modified Chacon limit", modified_chacon_limit},
      {"classic Chacon geometric limit", chacon_geometric},
      {"stochastic Chacon limit", stochastic_chacon},
      {"binomial collapse at a = 1/2", corollary_collapse},
      {"rigidity contrast", rigidity_contrast},
      {"limit-scan consistency", limit_scan_consistency},
      {"flow limit", flow_limit},
      {"performance", performance},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("%s %2zu %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
