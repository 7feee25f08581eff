#include "rankone/lab.hpp"

#include "rankone/error.hpp"
#include "rankone/simplex_ls.hpp"

#include <cmath>

namespace rankone {

double JoiningMatrix::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

JoiningMatrix to_joining(const CorrMatrix& d, std::string construction) {
  JoiningMatrix j;
  j.alphabet_size = d.alphabet_size;
  j.values = d.values;
  j.boundary_bound = d.boundary_bound;
  j.construction = std::move(construction);
  return j;
}

JoiningMatrix product_matrix(const LevelMeasures& measures, int depth, std::string construction) {
  JoiningMatrix p;
  p.alphabet_size = measures.counts.size();
  p.depth = depth;
  p.construction = std::move(construction);
  const auto mu = measures.masses();
  p.values.resize(mu.size() * mu.size());
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (std::size_t b = 0; b < mu.size(); ++b) p.values[a * mu.size() + b] = mu[a] * mu[b];
  return p;
}

namespace {

void check_shapes(const JoiningMatrix& lhs, const JoiningMatrix& rhs) {
  require(lhs.alphabet_size == rhs.alphabet_size && lhs.values.size() == rhs.values.size(),
          ErrorCode::invalid_argument, "joining matrices over different alphabets");
}

}  // namespace

double max_abs_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs) {
  check_shapes(lhs, rhs);
  double d = 0.0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i)
    d = std::max(d, std::abs(lhs.values[i] - rhs.values[i]));
  return d;
}

double l1_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs) {
  check_shapes(lhs, rhs);
  double d = 0.0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i) d += std::abs(lhs.values[i] - rhs.values[i]);
  return d;
}

double frobenius_distance(const JoiningMatrix& lhs, const JoiningMatrix& rhs) {
  check_shapes(lhs, rhs);
  double d = 0.0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i) {
    const double e = lhs.values[i] - rhs.values[i];
    d += e * e;
  }
  return std::sqrt(d);
}

JoiningMatrix joining_matrix(const OperatorExpression& e, const Basis& basis,
                             const JoiningMatrix& product) {
  JoiningMatrix out;
  out.alphabet_size = product.alphabet_size;
  out.depth = product.depth;
  out.construction = product.construction;
  out.values.assign(product.values.size(), 0.0);
  for (const auto& [power, c] : e.coefficients) {
    const auto it = basis.find(power);
    require(it != basis.end(), ErrorCode::missing_basis_lag,
            "basis has no D(" + std::to_string(power) + ")");
    require(it->second.values.size() == out.values.size(), ErrorCode::invalid_argument,
            "basis matrix over a different alphabet");
    const double w = static_cast<double>(c);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * it->second.values[i];
    out.boundary_bound = std::max(out.boundary_bound, it->second.boundary_bound);
  }
  if (e.theta != 0) {
    const double w = static_cast<double>(e.theta);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * product.values[i];
  }
  return out;
}

double Classification::coefficient(std::int64_t power) const {
  const std::int64_t idx = power + window;
  if (idx < 0 || idx >= static_cast<std::int64_t>(coefficients.size())) return 0.0;
  return coefficients[static_cast<std::size_t>(idx)];
}

Classification classify_limit(const JoiningMatrix& target, const Basis& basis,
                              const JoiningMatrix& product, ClassifyOptions options) {
  require(options.window >= 0, ErrorCode::invalid_argument, "window must be >= 0");
  const auto rows = static_cast<Eigen::Index>(target.values.size());
  const Eigen::Index powers = 2 * options.window + 1;
  Eigen::MatrixXd A(rows, powers + 1);
  for (Eigen::Index c = 0; c < powers; ++c) {
    const std::int64_t lag = c - options.window;
    const auto it = basis.find(lag);
    require(it != basis.end(), ErrorCode::missing_basis_lag,
            "classification window needs D(" + std::to_string(lag) + ")");
    require(static_cast<Eigen::Index>(it->second.values.size()) == rows,
            ErrorCode::invalid_argument, "basis matrix over a different alphabet");
    for (Eigen::Index r = 0; r < rows; ++r) A(r, c) = it->second.values[static_cast<std::size_t>(r)];
  }
  require(static_cast<Eigen::Index>(product.values.size()) == rows, ErrorCode::invalid_argument,
          "product matrix over a different alphabet");
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    A(r, powers) = product.values[static_cast<std::size_t>(r)];
    b(r) = target.values[static_cast<std::size_t>(r)];
  }

  const SimplexLsResult fit = simplex_least_squares(A, b);
  Classification out;
  out.window = options.window;
  out.tolerance = options.tolerance;
  out.iterations = fit.iterations;
  out.coefficients.assign(fit.x.data(), fit.x.data() + powers);
  out.theta = fit.x(powers);
  const Eigen::VectorXd residual = A * fit.x - b;
  out.residual_max = residual.cwiseAbs().maxCoeff();
  out.residual_frobenius = residual.norm();
  out.identified = out.residual_max <= options.tolerance;
  return out;
}

// ---- Workbench -------------------------------------------------------------

Workbench::Workbench(std::shared_ptr<const Tower> tower, Engine engine, NaiveOptions naive)
    : tower_(std::move(tower)), engine_(engine), naive_(naive), measures_(level_measures(*tower_)) {
  product_ = product_matrix(measures_, tower_->depth(), tower_->name());
}

void Workbench::prefetch(std::span<const std::int64_t> lags) {
  std::vector<std::int64_t> missing;
  for (auto lag : lags) {
    const std::int64_t mag = lag < 0 ? -lag : lag;
    if (!cache_.count(mag)) missing.push_back(mag);
  }
  if (missing.empty()) return;
  for (auto& d : corr_sequence(*tower_, missing, engine_, naive_)) {
    if (d.lag != 0) cache_.emplace(-d.lag, d.transposed());
    cache_.emplace(d.lag, std::move(d));
  }
}

const CorrMatrix& Workbench::corr(std::int64_t lag) {
  auto it = cache_.find(lag);
  if (it != cache_.end()) return it->second;
  prefetch(std::span<const std::int64_t>(&lag, 1));
  return cache_.at(lag);
}

JoiningMatrix Workbench::joining(std::int64_t lag) {
  JoiningMatrix j = to_joining(corr(lag), construction());
  j.depth = tower_->depth();
  return j;
}

Basis Workbench::basis(std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> lags;
  for (std::int64_t i = lo; i <= hi; ++i) lags.push_back(i);
  prefetch(lags);
  Basis b;
  for (auto lag : lags) b.emplace(lag, corr(lag));
  return b;
}

Basis Workbench::basis_for(const OperatorExpression& e) {
  return basis(e.min_power(), e.max_power());
}

}  // namespace rankone
