#include "rankone/operator.hpp"

#include "rankone/error.hpp"

#include <sstream>

namespace rankone {

namespace {

void prune(OperatorExpression& e) {
  for (auto it = e.coefficients.begin(); it != e.coefficients.end();) {
    if (it->second == 0)
      it = e.coefficients.erase(it);
    else
      ++it;
  }
}

Rational power_mass(const OperatorExpression& e) {
  Rational s = 0;
  for (const auto& [k, c] : e.coefficients) s += c;
  return s;
}

}  // namespace

OperatorExpression OperatorExpression::power(std::int64_t k) {
  OperatorExpression e;
  e.coefficients[k] = 1;
  return e;
}

OperatorExpression OperatorExpression::projection() {
  OperatorExpression e;
  e.theta = 1;
  return e;
}

Rational OperatorExpression::mass() const { return power_mass(*this) + theta; }

bool OperatorExpression::is_markov() const {
  if (theta < 0) return false;
  for (const auto& [k, c] : coefficients)
    if (c < 0) return false;
  return mass() == 1;
}

std::int64_t OperatorExpression::min_power() const {
  return coefficients.empty() ? 0 : coefficients.begin()->first;
}

std::int64_t OperatorExpression::max_power() const {
  return coefficients.empty() ? 0 : coefficients.rbegin()->first;
}

Rational OperatorExpression::coefficient(std::int64_t k) const {
  const auto it = coefficients.find(k);
  return it == coefficients.end() ? Rational(0) : it->second;
}

std::string OperatorExpression::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [k, c] : coefficients) {
    os << (first ? "" : ", ") << k << ": " << c;
    first = false;
  }
  if (theta != 0) os << (first ? "" : ", ") << "theta: " << theta;
  os << '}';
  return os.str();
}

OperatorExpression op_convolve(const OperatorExpression& lhs, const OperatorExpression& rhs) {
  OperatorExpression out;
  for (const auto& [i, a] : lhs.coefficients)
    for (const auto& [j, b] : rhs.coefficients) out.coefficients[i + j] += a * b;
  out.theta = lhs.theta * rhs.mass() + rhs.theta * power_mass(lhs);
  prune(out);
  return out;
}

OperatorExpression op_adjoint(const OperatorExpression& e) {
  OperatorExpression out;
  out.theta = e.theta;
  for (const auto& [k, c] : e.coefficients) out.coefficients[-k] = c;
  return out;
}

OperatorExpression op_power(const OperatorExpression& e, int n) {
  require(n >= 0, ErrorCode::invalid_argument, "negative operator power");
  OperatorExpression out = OperatorExpression::identity();
  for (int i = 0; i < n; ++i) out = op_convolve(out, e);
  return out;
}

OperatorExpression op_mix(const OperatorExpression& lhs, const OperatorExpression& rhs,
                          const Rational& alpha) {
  OperatorExpression out;
  for (const auto& [k, c] : lhs.coefficients) out.coefficients[k] += alpha * c;
  for (const auto& [k, c] : rhs.coefficients) out.coefficients[k] += (1 - alpha) * c;
  out.theta = alpha * lhs.theta + (1 - alpha) * rhs.theta;
  prune(out);
  return out;
}

OperatorExpression op_lazy(const OperatorExpression& e, const Rational& beta) {
  return op_mix(e, OperatorExpression::identity(), beta);
}

std::vector<std::string> family_names() {
  return {"identity",          "theta",      "shift",
          "modified-chacon-limit", "chacon-geometric", "stochastic",
          "stochastic-adjoint"};
}

OperatorExpression build_family(const std::string& name, const FamilyParams& p) {
  if (name == "identity") return OperatorExpression::identity();
  if (name == "theta") return OperatorExpression::projection();
  if (name == "shift") return OperatorExpression::power(p.k);
  if (name == "modified-chacon-limit") {
    OperatorExpression e;
    e.coefficients[0] = Rational(1, 2);
    e.coefficients[1] = Rational(1, 2);
    return e;
  }
  if (name == "chacon-geometric") {
    require(p.terms >= 0, ErrorCode::invalid_argument, "truncation index M must be >= 0");
    OperatorExpression e;
    Rational weight(1, 2);
    for (std::int64_t i = 0; i <= p.terms; ++i) {
      e.coefficients[i] = weight;
      weight /= 2;
    }
    e.theta = weight * 2;  // 2^{-(M+1)}
    return e;
  }
  if (name == "stochastic" || name == "stochastic-adjoint") {
    require(p.a >= 0 && p.a <= 1, ErrorCode::invalid_argument, "a must lie in [0, 1]");
    require(p.m >= 0 && p.n >= 0, ErrorCode::invalid_argument, "m, n must be >= 0");
    OperatorExpression P;
    P.coefficients[0] = p.a;
    P.coefficients[-1] = 1 - p.a;
    prune(P);
    OperatorExpression Pstar = op_adjoint(P);
    if (name == "stochastic-adjoint") std::swap(P, Pstar);
    OperatorExpression e = op_convolve(op_power(P, static_cast<int>(p.m)),
                                       op_power(Pstar, static_cast<int>(p.n)));
    return op_convolve(e, OperatorExpression::power(p.k));
  }
  fail(ErrorCode::unknown_family, "unknown operator family '" + name + "'");
}

}  // namespace rankone
