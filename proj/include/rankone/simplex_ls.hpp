#pragma once

#include <Eigen/Dense>

namespace rankone {

struct SimplexLsOptions {
  int max_iterations = 0;     // 0: 10 * (columns + 1)
  double tolerance = 1e-12;   // on the scaled gradient
};

struct SimplexLsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// min ||A x - b||_2 subject to x >= 0 and sum(x) = 1.
///
/// Primal active-set method in the style of Lawson-Hanson: the free set is
/// grown by the most violated multiplier and shrunk by interpolation back to
/// the feasible region. The sum constraint is eliminated exactly on each
/// subproblem (last free variable expressed through the others) and the
/// reduced problem is solved by column-pivoted QR. Deterministic: ties are
/// broken by the lowest column index. Throws SolverDivergence when the
/// iteration limit is exceeded.
SimplexLsResult simplex_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                      SimplexLsOptions options = {});

}  // namespace rankone
