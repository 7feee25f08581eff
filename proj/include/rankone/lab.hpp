#pragma once

// Empirical joining matrices on the level algebra and the weak-limit
// classifier: a target matrix is fitted as sum_i c_i D(i) + theta * Pi over a
// window |i| <= K, with c, theta >= 0 summing to one.

#include "rankone/counts.hpp"
#include "rankone/operator.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rankone {

struct JoiningMatrix {
  std::size_t alphabet_size = 0;
  std::vector<double> values;
  int depth = 0;
  std::string construction;
  double boundary_bound = 0.0;

  double operator()(std::size_t a, std::size_t b) const { return values[a * alphabet_size + b]; }
  double sum() const;
};

JoiningMatrix to_joining(const CorrMatrix& d, std::string construction = {});
/// Pi[a][b] = mu(a) mu(b).
JoiningMatrix product_matrix(const LevelMeasures& measures, int depth = 0,
                             std::string construction = {});

double max_abs_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs);
double l1_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs);
double frobenius_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs);

using Basis = std::map<std::int64_t, CorrMatrix>;

/// J(E) = sum_i c_i D(i) + theta * Pi. Throws MissingBasisLag.
JoiningMatrix joining_matrix(const OperatorExpression& e, const Basis& basis,
                             const JoiningMatrix& product);

struct ClassifyOptions {
  int window = 8;
  double tolerance = 0.03;  // max-abs residual for "identified"
};

struct Classification {
  int window = 8;
  std::vector<double> coefficients;  // coefficients[i + window] for T^i
  double theta = 0.0;
  double residual_max = 0.0;
  double residual_frobenius = 0.0;
  double tolerance = 0.0;
  bool identified = false;
  int iterations = 0;

  double coefficient(std::int64_t power) const;
};

Classification classify_limit(const JoiningMatrix& target, const Basis& basis,
                              const JoiningMatrix& product, ClassifyOptions options = {});

/// Correlation matrices of one tower with a lag cache; the shared context of
/// every diagnostic. Not thread-safe.
class Workbench {
 public:
  explicit Workbench(std::shared_ptr<const Tower> tower, Engine engine = Engine::automatic,
                     NaiveOptions naive = {});

  const Tower& tower() const noexcept { return *tower_; }
  std::shared_ptr<const Tower> shared_tower() const noexcept { return tower_; }
  const std::string& construction() const noexcept { return tower_->name(); }
  Engine engine() const noexcept { return engine_; }

  const CorrMatrix& corr(std::int64_t lag);
  /// Computes every missing lag in one batch.
  void prefetch(std::span<const std::int64_t> lags);
  JoiningMatrix joining(std::int64_t lag);
  /// D(lo..hi) inclusive.
  Basis basis(std::int64_t lo, std::int64_t hi);
  Basis window(int k) { return basis(-k, k); }
  /// Basis covering the support of `e`.
  Basis basis_for(const OperatorExpression& e);

  const LevelMeasures& measures() const noexcept { return measures_; }
  const JoiningMatrix& product() const noexcept { return product_; }

 private:
  std::shared_ptr<const Tower> tower_;
  Engine engine_;
  NaiveOptions naive_;
  LevelMeasures measures_;
  JoiningMatrix product_;
  std::map<std::int64_t, CorrMatrix> cache_;
};

}  // namespace rankone
