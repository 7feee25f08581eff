#include "rankone/diagnostics.hpp"

#include "rankone/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rankone {

double set_measure(const LevelMeasures& measures, const LevelSet& set) {
  double m = 0.0;
  for (auto s : set) m += measures.mass(s);
  return m;
}

double set_corr(const CorrMatrix& d, const LevelSet& A, const LevelSet& B) {
  double s = 0.0;
  for (auto a : A)
    for (auto b : B) s += d(a, b);
  return s;
}

std::string set_label(const Alphabet& alphabet, const LevelSet& set) {
  std::string out = "{";
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += ',';
    out += alphabet.label(set[i]);
  }
  return out + "}";
}

namespace {

void check_set(const Alphabet& alphabet, const LevelSet& set) {
  require(!set.empty(), ErrorCode::invalid_argument, "empty level set");
  for (auto s : set)
    require(s < alphabet.size(), ErrorCode::invalid_argument,
            "level " + std::to_string(s) + " outside the alphabet");
}

std::int64_t abs64(std::int64_t v) { return v < 0 ? -v : v; }

std::string stochastic_label(const char* name, std::int64_t m, std::int64_t n, std::int64_t k) {
  std::ostringstream os;
  os << name << "(m=" << m << ",n=" << n << ",k=" << k << ")";
  return os.str();
}

}  // namespace

// ---- limit scan -------------------------------------------------------------

std::vector<FamilyMatch> candidate_families(const LimitScanOptions& options, std::int64_t max_lag) {
  std::vector<FamilyMatch> out;
  auto add = [&](std::string name, OperatorExpression e) {
    if (abs64(e.min_power()) > max_lag || abs64(e.max_power()) > max_lag) return;
    out.push_back(FamilyMatch{std::move(name), std::move(e), 0.0});
  };
  const int K = options.classify.window;
  add("identity", build_family("identity", {}));
  add("theta", build_family("theta", {}));
  add("modified-chacon-limit", build_family("modified-chacon-limit", {}));
  add("modified-chacon-limit-adjoint", op_adjoint(build_family("modified-chacon-limit", {})));
  FamilyParams geo;
  geo.terms = options.geometric_terms;
  add("chacon-geometric", build_family("chacon-geometric", geo));
  add("chacon-geometric-adjoint", op_adjoint(build_family("chacon-geometric", geo)));
  for (int k = -K; k <= K; ++k) {
    if (k == 0) continue;
    FamilyParams p;
    p.k = k;
    add("shift(k=" + std::to_string(k) + ")", build_family("shift", p));
  }
  if (options.stochastic_a) {
    for (int m = 0; m <= 6; ++m)
      for (int n = 0; m + n <= 6; ++n) {
        if (m + n == 0) continue;
        for (int k = -K; k <= K; ++k) {
          FamilyParams p;
          p.m = m;
          p.n = n;
          p.k = k;
          p.a = *options.stochastic_a;
          add(stochastic_label("stochastic", m, n, k), build_family("stochastic", p));
        }
      }
  }
  return out;
}

FamilyMatch best_family(Workbench& bench, const JoiningMatrix& target,
                        const LimitScanOptions& options) {
  const auto max_lag = static_cast<std::int64_t>(bench.tower().length() / 4);
  auto candidates = candidate_families(options, max_lag);
  require(!candidates.empty(), ErrorCode::invalid_argument, "no candidate family fits the word");
  std::int64_t lo = 0, hi = 0;
  for (const auto& c : candidates) {
    lo = std::min(lo, c.expression.min_power());
    hi = std::max(hi, c.expression.max_power());
  }
  const Basis basis = bench.basis(lo, hi);
  FamilyMatch best;
  best.distance = std::numeric_limits<double>::infinity();
  for (auto& c : candidates) {
    c.distance = max_abs_distance(joining_matrix(c.expression, basis, bench.product()), target);
    if (c.distance < best.distance) best = c;
  }
  return best;
}

LimitScanReport limit_scan(Workbench& bench, const std::vector<std::int64_t>& lags,
                           const LimitScanOptions& options) {
  LimitScanReport report;
  const Basis basis = bench.window(options.classify.window);
  bench.prefetch(lags);
  for (auto lag : lags) {
    LagClassification entry;
    entry.lag = lag;
    const JoiningMatrix target = bench.joining(lag);
    entry.boundary_bound = target.boundary_bound;
    entry.fit = classify_limit(target, basis, bench.product(), options.classify);
    entry.best = best_family(bench, target, options);
    if (entry.fit.identified) ++report.identified;
    report.worst_residual = std::max(report.worst_residual, entry.fit.residual_max);
    report.lags.push_back(std::move(entry));
  }
  return report;
}

// ---- rigidity ---------------------------------------------------------------

RigidityReport rigidity_scan(Workbench& bench, const std::vector<std::int64_t>& lags,
                             double vanish_tolerance) {
  RigidityReport report;
  report.vanish_tolerance = vanish_tolerance;
  bench.prefetch(lags);
  const JoiningMatrix d0 = bench.joining(0);
  report.minimum_l1 = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (auto lag : lags) {
    const JoiningMatrix d = bench.joining(lag);
    const double l1 = l1_distance(d, d0);
    RigidityEntry e{lag, l1, max_abs_distance(d, d0), d.boundary_bound,
                    std::max(0.0, l1 - 2.0 * d.boundary_bound)};
    if (!report.entries.empty() && e.excess > report.entries.back().excess + 1e-12) monotone = false;
    report.minimum_l1 = std::min(report.minimum_l1, e.l1);
    report.entries.push_back(e);
  }
  if (report.entries.empty()) report.minimum_l1 = 0.0;
  report.vanishing =
      monotone && !report.entries.empty() && report.entries.back().excess <= vanish_tolerance;
  return report;
}

// ---- mixing -----------------------------------------------------------------

MixingReport mixing_diagnostics(Workbench& bench, const std::vector<std::int64_t>& lags,
                                std::vector<LevelSet> sets) {
  require(!lags.empty(), ErrorCode::invalid_argument, "mixing diagnostics need lags");
  const auto& alphabet = bench.tower().alphabet();
  const auto& mu = bench.measures();
  if (sets.empty()) {
    for (Symbol s = 0; s < alphabet.size(); ++s) {
      const double m = mu.mass(s);
      if (m > 0.0 && m < 1.0) sets.push_back({s});
    }
  }
  for (const auto& s : sets) check_set(alphabet, s);
  bench.prefetch(lags);

  MixingReport report;
  report.lags = lags;
  report.alpha_hat = std::numeric_limits<double>::infinity();
  for (const auto& A : sets) {
    SetReturn r;
    r.label = set_label(alphabet, A);
    r.measure = set_measure(mu, A);
    r.max_return = -1.0;
    for (auto lag : lags) {
      const double v = set_corr(bench.corr(lag), A, A);
      if (v > r.max_return) {
        r.max_return = v;
        r.argmax = lag;
      }
    }
    r.ratio = r.measure > 0.0 ? r.max_return / r.measure : 0.0;
    report.max_return_ratio = std::max(report.max_return_ratio, r.ratio);
    report.sets.push_back(std::move(r));
  }
  for (const auto& A : sets)
    for (const auto& B : sets) {
      const double denom = set_measure(mu, A) * set_measure(mu, B);
      if (denom <= 0.0) continue;
      for (auto lag : lags) {
        // mu(A and T^n B) = D(-n)[A][B]
        const double v = set_corr(bench.corr(-lag), A, B) / denom;
        if (v < report.alpha_hat) {
          report.alpha_hat = v;
          report.alpha_pair = set_label(alphabet, A) + "x" + set_label(alphabet, B);
          report.alpha_lag = lag;
        }
      }
    }
  if (!std::isfinite(report.alpha_hat)) report.alpha_hat = 0.0;
  return report;
}

// ---- Cesaro probe -----------------------------------------------------------

CesaroReport cesaro_disjointness_probe(Workbench& bench, CesaroOptions o) {
  require(o.p > 0 && o.q > 0, ErrorCode::invalid_argument, "p and q must be positive");
  require(o.terms > 0, ErrorCode::invalid_argument, "N must be positive");
  const auto& alphabet = bench.tower().alphabet();
  for (LevelSet* s : {&o.A, &o.B, &o.C, &o.D}) {
    if (s->empty()) *s = {0};
    check_set(alphabet, *s);
  }
  const auto limit = static_cast<std::int64_t>(bench.tower().length());
  require(std::max(o.p, o.q) * o.terms < limit, ErrorCode::lag_out_of_range,
          "max(p, q) * N must stay below the word length");

  std::vector<std::int64_t> lags;
  for (std::int64_t n = 1; n <= o.terms; ++n) {
    lags.push_back(o.p * n);
    lags.push_back(o.q * n);
  }
  bench.prefetch(lags);

  const auto& mu = bench.measures();
  CesaroReport r;
  r.p = o.p;
  r.q = o.q;
  r.terms = o.terms;
  r.control = o.p == o.q;
  r.target = set_measure(mu, o.A) * set_measure(mu, o.B) * set_measure(mu, o.C) *
             set_measure(mu, o.D);
  const std::size_t marks = std::max<std::size_t>(o.checkpoints, 1);
  std::int64_t next_mark = 1;
  double acc = 0.0;
  for (std::int64_t n = 1; n <= o.terms; ++n) {
    acc += set_corr(bench.corr(o.p * n), o.A, o.B) * set_corr(bench.corr(o.q * n), o.C, o.D);
    if (n >= next_mark || n == o.terms) {
      r.curve.emplace_back(n, std::abs(acc / static_cast<double>(n) - r.target));
      next_mark = std::max<std::int64_t>(n + 1, static_cast<std::int64_t>(
          std::ceil(static_cast<double>(n) * std::pow(static_cast<double>(o.terms),
                                                      1.0 / static_cast<double>(marks)))));
    }
  }
  r.average = acc / static_cast<double>(o.terms);
  r.deviation = std::abs(r.average - r.target);
  return r;
}

// ---- triple correlations ----------------------------------------------------

std::uint64_t triple_count(const Tower& tower, std::int64_t m, std::int64_t n, const LevelSet& A,
                           const LevelSet& B, const LevelSet& C) {
  const auto& alphabet = tower.alphabet();
  check_set(alphabet, A);
  check_set(alphabet, B);
  check_set(alphabet, C);
  const auto length = static_cast<std::int64_t>(tower.length());
  const std::int64_t lo = std::max<std::int64_t>({0, -m, -n});
  const std::int64_t hi = length - std::max<std::int64_t>({0, m, n});
  require(hi > lo, ErrorCode::lag_out_of_range, "triple lags exceed the word length");

  std::vector<std::uint8_t> inA(alphabet.size(), 0), inB(alphabet.size(), 0), inC(alphabet.size(), 0);
  for (auto s : A) inA[s] = 1;
  for (auto s : B) inB[s] = 1;
  for (auto s : C) inC[s] = 1;

  constexpr std::int64_t kBlock = 1 << 16;
  std::vector<Symbol> a(kBlock), b(kBlock), c(kBlock);
  std::uint64_t count = 0;
  for (std::int64_t p = lo; p < hi; p += kBlock) {
    const auto len = static_cast<std::size_t>(std::min(kBlock, hi - p));
    tower.extract(static_cast<std::uint64_t>(p), std::span<Symbol>(a.data(), len));
    tower.extract(static_cast<std::uint64_t>(p + m), std::span<Symbol>(b.data(), len));
    tower.extract(static_cast<std::uint64_t>(p + n), std::span<Symbol>(c.data(), len));
    for (std::size_t i = 0; i < len; ++i) count += inA[a[i]] & inB[b[i]] & inC[c[i]];
  }
  return count;
}

TripleReport triple_corr_probe(const Tower& tower,
                               const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
                               const LevelSet& A, const LevelSet& B, const LevelSet& C) {
  const LevelMeasures mu = level_measures(tower);
  const double product = set_measure(mu, A) * set_measure(mu, B) * set_measure(mu, C);
  const auto length = static_cast<double>(tower.length());
  TripleReport report;
  for (const auto& [m, n] : pairs) {
    TripleEntry e;
    e.m = m;
    e.n = n;
    e.joint = static_cast<double>(triple_count(tower, m, n, A, B, C)) / length;
    e.product = product;
    e.deviation = std::abs(e.joint - e.product);
    report.max_deviation = std::max(report.max_deviation, e.deviation);
    report.entries.push_back(e);
  }
  return report;
}

// ---- convergence ------------------------------------------------------------

ConvergenceReport convergence_scan(Workbench& bench, const OperatorExpression& target,
                                   std::string family, int first_stage, int last_stage,
                                   std::int64_t q, std::int64_t m) {
  const Tower& tower = bench.tower();
  require(first_stage >= tower.base_stage() && last_stage <= tower.depth() &&
              first_stage <= last_stage,
          ErrorCode::invalid_argument, "convergence stages outside the tower");
  const auto limit = static_cast<std::int64_t>(tower.length() / 4);
  ConvergenceReport report;
  report.family = std::move(family);
  const Basis basis = bench.basis_for(target);
  const JoiningMatrix expected = joining_matrix(target, basis, bench.product());
  std::vector<std::int64_t> lags;
  for (int j = first_stage; j <= last_stage; ++j) {
    const std::int64_t lag = q * static_cast<std::int64_t>(tower.length(j)) + m;
    require(abs64(lag) <= limit, ErrorCode::lag_out_of_range,
            "lag " + std::to_string(lag) + " exceeds a quarter of the word length");
    lags.push_back(lag);
  }
  bench.prefetch(lags);
  bool decreasing = true;
  for (int j = first_stage; j <= last_stage; ++j) {
    const std::int64_t lag = lags[static_cast<std::size_t>(j - first_stage)];
    const JoiningMatrix d = bench.joining(lag);
    ConvergenceEntry e{j, lag, max_abs_distance(d, expected), d.boundary_bound};
    if (!report.entries.empty() && e.distance > report.entries.back().distance + 1e-12)
      decreasing = false;
    report.entries.push_back(e);
  }
  report.decreasing = decreasing;
  return report;
}

}  // namespace rankone
