#pragma once

// Formal convex combinations sum_i c_i T^i + theta * Theta with exact
// rational coefficients. Theta (projection onto constants) is absorbing:
// Theta T^i = T^i Theta = Theta Theta = Theta.

#include "rankone/schedule.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rankone {

struct OperatorExpression {
  std::map<std::int64_t, Rational> coefficients;  // power -> coefficient, zeros pruned
  Rational theta = 0;

  static OperatorExpression power(std::int64_t k);
  static OperatorExpression identity() { return power(0); }
  static OperatorExpression projection();

  Rational mass() const;
  bool is_markov() const;  // nonnegative, mass exactly 1
  std::int64_t min_power() const;
  std::int64_t max_power() const;
  Rational coefficient(std::int64_t k) const;
  std::string to_string() const;

  bool operator==(const OperatorExpression&) const = default;
};

OperatorExpression op_convolve(const OperatorExpression& lhs, const OperatorExpression& rhs);
OperatorExpression op_adjoint(const OperatorExpression& e);
OperatorExpression op_power(const OperatorExpression& e, int n);
/// alpha * lhs + (1 - alpha) * rhs
OperatorExpression op_mix(const OperatorExpression& lhs, const OperatorExpression& rhs,
                          const Rational& alpha);
/// (1 - beta) I + beta E
OperatorExpression op_lazy(const OperatorExpression& e, const Rational& beta);

struct FamilyParams {
  std::int64_t m = 1;        // stochastic: power of P
  std::int64_t n = 0;        // stochastic: power of P*
  std::int64_t k = 0;        // stochastic / shift: extra T^k
  std::int64_t terms = 20;   // chacon-geometric: truncation index M
  Rational a = Rational(1, 2);
};

/// Named limit families:
///   identity, theta, shift(k),
///   modified-chacon-limit        (I + T) / 2
///   chacon-geometric(M)          sum_{i<=M} 2^{-(i+1)} T^i, tail 2^{-(M+1)} on Theta
///   stochastic(m, n, k, a)       P^m (P*)^n T^k with P = a I + (1 - a) T^{-1}
///   stochastic-adjoint(m, n, k, a)  the same with P and P* exchanged
OperatorExpression build_family(const std::string& name, const FamilyParams& params = {});
std::vector<std::string> family_names();

}  // namespace rankone
