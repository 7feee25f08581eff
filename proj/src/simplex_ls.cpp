#include "rankone/simplex_ls.hpp"

#include "rankone/error.hpp"

#include <algorithm>
#include <vector>

namespace rankone {

namespace {

// Minimizer of ||A_F z - b|| over the affine set sum(z) = 1, zero off F.
Eigen::VectorXd solve_on_free_set(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                  const std::vector<Eigen::Index>& free) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
  const Eigen::Index last = free.back();
  if (free.size() == 1) {
    z(last) = 1.0;
    return z;
  }
  const auto m = static_cast<Eigen::Index>(free.size() - 1);
  Eigen::MatrixXd reduced(A.rows(), m);
  for (Eigen::Index i = 0; i < m; ++i) reduced.col(i) = A.col(free[static_cast<std::size_t>(i)]) - A.col(last);
  const Eigen::VectorXd y = reduced.colPivHouseholderQr().solve(b - A.col(last));
  double rest = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    z(free[static_cast<std::size_t>(i)]) = y(i);
    rest -= y(i);
  }
  z(last) = rest;
  return z;
}

}  // namespace

SimplexLsResult simplex_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                      SimplexLsOptions options) {
  const Eigen::Index n = A.cols();
  require(n > 0 && A.rows() == b.size(), ErrorCode::invalid_argument,
          "simplex_least_squares: shape mismatch");
  double scale = std::max(A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale <= 0.0) scale = 1.0;
  const Eigen::MatrixXd As = A / scale;
  const Eigen::VectorXd bs = b / scale;
  const int max_iterations = options.max_iterations > 0 ? options.max_iterations
                                                         : 10 * static_cast<int>(n + 1);

  // Start from the best single column (lowest index on ties).
  Eigen::Index start = 0;
  double best = (As.col(0) - bs).squaredNorm();
  for (Eigen::Index j = 1; j < n; ++j) {
    const double r = (As.col(j) - bs).squaredNorm();
    if (r < best) {
      best = r;
      start = j;
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  x(start) = 1.0;
  std::vector<Eigen::Index> free{start};
  std::vector<bool> in_free(static_cast<std::size_t>(n), false);
  in_free[static_cast<std::size_t>(start)] = true;

  SimplexLsResult result;
  Eigen::Index just_added = -1;
  for (int iter = 0;; ++iter) {
    require(iter < max_iterations, ErrorCode::solver_divergence,
            "active-set iteration limit reached");
    result.iterations = iter + 1;
    const Eigen::VectorXd z = solve_on_free_set(As, bs, free);

    double alpha = 1.0;
    bool blocked = false;
    for (auto j : free) {
      if (z(j) <= 0.0) {
        blocked = true;
        const double denom = x(j) - z(j);
        alpha = std::min(alpha, denom > 0.0 ? x(j) / denom : 0.0);
      }
    }
    if (blocked) {
      x += alpha * (z - x);
      std::vector<Eigen::Index> kept;
      for (auto j : free) {
        if (x(j) <= 1e-15 || (z(j) <= 0.0 && x(j) <= 1e-12)) {
          x(j) = 0.0;
          in_free[static_cast<std::size_t>(j)] = false;
        } else {
          kept.push_back(j);
        }
      }
      // The entering column was pushed straight back out: no descent left.
      if (just_added >= 0 && !in_free[static_cast<std::size_t>(just_added)] && alpha <= 0.0) break;
      if (kept.empty()) {  // numerical corner: fall back to the best vertex
        x.setZero();
        x(start) = 1.0;
        break;
      }
      free = std::move(kept);
      just_added = -1;
      continue;
    }
    x = z;

    const Eigen::VectorXd w = As.transpose() * (bs - As * x);
    double lambda = 0.0;
    for (auto j : free) lambda += w(j);
    lambda /= static_cast<double>(free.size());
    Eigen::Index enter = -1;
    double violation = options.tolerance;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (in_free[static_cast<std::size_t>(j)]) continue;
      if (w(j) - lambda > violation) {
        violation = w(j) - lambda;
        enter = j;
      }
    }
    if (enter < 0) break;
    free.push_back(enter);
    std::sort(free.begin(), free.end());
    in_free[static_cast<std::size_t>(enter)] = true;
    just_added = enter;
  }

  // Exact renormalization onto the simplex.
  x = x.cwiseMax(0.0);
  const double total = x.sum();
  if (total > 0.0) x /= total;
  result.x = x;
  result.residual_norm = (A * x - b).norm();
  return result;
}

}  // namespace rankone
