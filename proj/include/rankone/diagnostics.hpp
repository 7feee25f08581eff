#pragma once

// Experiments over one tower: weak-limit scans, rigidity, mixing proxies,
// Cesaro averages of paired correlations and triple correlations.

#include "rankone/lab.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rankone {

/// A union of levels, e.g. {0, 3} or the spacer level alone.
using LevelSet = std::vector<Symbol>;

double set_measure(const LevelMeasures& measures, const LevelSet& set);
/// sum over a in A, b in B of D[a][b].
double set_corr(const CorrMatrix& d, const LevelSet& A, const LevelSet& B);
std::string set_label(const Alphabet& alphabet, const LevelSet& set);

// ---- limit scan -------------------------------------------------------------

struct FamilyMatch {
  std::string family;
  OperatorExpression expression;
  double distance = 0.0;  // max-abs distance to the measured D(n)
};

struct LimitScanOptions {
  ClassifyOptions classify;
  /// Parameter a of the stochastic families; when set, the candidate list
  /// gains P^m P*^n T^k and its adjoint for m + n <= 6, |k| <= window.
  std::optional<Rational> stochastic_a;
  int geometric_terms = 20;
};

struct LagClassification {
  std::int64_t lag = 0;
  Classification fit;
  FamilyMatch best;
  double boundary_bound = 0.0;
};

struct LimitScanReport {
  std::vector<LagClassification> lags;
  std::size_t identified = 0;
  double worst_residual = 0.0;
};

/// Candidate families with a basis in reach of the tower.
std::vector<FamilyMatch> candidate_families(const LimitScanOptions& options, std::int64_t max_lag);
FamilyMatch best_family(Workbench& bench, const JoiningMatrix& target,
                        const LimitScanOptions& options);

LimitScanReport limit_scan(Workbench& bench, const std::vector<std::int64_t>& lags,
                           const LimitScanOptions& options = {});

// ---- rigidity ---------------------------------------------------------------

struct RigidityEntry {
  std::int64_t lag = 0;
  double l1 = 0.0;       // sum |D(n) - D(0)|
  double max_abs = 0.0;  // max |D(n) - D(0)|
  double boundary_bound = 0.0;
  double excess = 0.0;   // max(0, l1 - 2 |lag| / l_J): what seams cannot explain
};

struct RigidityReport {
  std::vector<RigidityEntry> entries;
  double vanish_tolerance = 0.0;
  bool vanishing = false;  // excess non-increasing and last excess below tolerance
  double minimum_l1 = 0.0;
};

RigidityReport rigidity_scan(Workbench& bench, const std::vector<std::int64_t>& lags,
                             double vanish_tolerance = 0.05);

// ---- mixing -----------------------------------------------------------------

struct SetReturn {
  std::string label;
  double measure = 0.0;
  double max_return = 0.0;  // max_n mu(A and T^n A)
  std::int64_t argmax = 0;
  double ratio = 0.0;       // max_return / measure
};

struct MixingReport {
  std::vector<std::int64_t> lags;
  std::vector<SetReturn> sets;
  /// min over pairs (A, B) and lags of mu(A and T^n B) / (mu(A) mu(B)).
  double alpha_hat = 0.0;
  std::string alpha_pair;
  std::int64_t alpha_lag = 0;
  /// max over sets of max_n mu(A and T^n A) / mu(A).
  double max_return_ratio = 0.0;
};

/// Empty `sets` means every single level of measure strictly between 0 and 1.
MixingReport mixing_diagnostics(Workbench& bench, const std::vector<std::int64_t>& lags,
                                std::vector<LevelSet> sets = {});

// ---- Cesaro probe -----------------------------------------------------------

struct CesaroOptions {
  std::int64_t p = 1;
  std::int64_t q = 2;
  std::int64_t terms = 256;  // N
  LevelSet A, B, C, D;       // empty: level 0
  std::size_t checkpoints = 8;
};

struct CesaroReport {
  std::int64_t p = 0, q = 0, terms = 0;
  bool control = false;  // p == q
  double target = 0.0;   // mu(A) mu(B) mu(C) mu(D)
  double average = 0.0;
  double deviation = 0.0;
  std::vector<std::pair<std::int64_t, double>> curve;  // (N', |avg_N' - target|)
};

/// (1/N) sum_{n=1}^N mu(A and T^{-pn} B) mu(C and T^{-qn} D).
CesaroReport cesaro_disjointness_probe(Workbench& bench, CesaroOptions options);

// ---- triple correlations ----------------------------------------------------

struct TripleEntry {
  std::int64_t m = 0, n = 0;
  double joint = 0.0;    // mu(A and T^{-m} B and T^{-n} C)
  double product = 0.0;  // mu(A) mu(B) mu(C)
  double deviation = 0.0;
};

struct TripleReport {
  std::vector<TripleEntry> entries;
  double max_deviation = 0.0;
};

/// Streams W_J once per pair with three cursors.
TripleReport triple_corr_probe(const Tower& tower, const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
                               const LevelSet& A, const LevelSet& B, const LevelSet& C);

/// Exact count of positions p with W[p] in A, W[p+m] in B, W[p+n] in C.
std::uint64_t triple_count(const Tower& tower, std::int64_t m, std::int64_t n, const LevelSet& A,
                           const LevelSet& B, const LevelSet& C);

// ---- convergence ------------------------------------------------------------

struct ConvergenceEntry {
  int stage = 0;
  std::int64_t lag = 0;
  double distance = 0.0;  // max-abs distance of D(lag) to J(target)
  double boundary_bound = 0.0;
};

struct ConvergenceReport {
  std::string family;
  std::vector<ConvergenceEntry> entries;
  bool decreasing = false;
};

/// Distance of D(q l_j + m) to J(target) for each stage j in [first, last].
ConvergenceReport convergence_scan(Workbench& bench, const OperatorExpression& target,
                                   std::string family, int first_stage, int last_stage,
                                   std::int64_t q = 1, std::int64_t m = 0);

}  // namespace rankone
