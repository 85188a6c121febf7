#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mareforge {

struct QpResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = 0.0;  // 0.5 x'Gx + g'x
  int iterations = 0;
};

/// Dual active-set method of Goldfarb and Idnani for
///   min 0.5 x'Gx + g'x  s.t.  A x >= b
/// with G symmetric positive definite. Each row of A is one constraint.
QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Primal-dual interior-point method (Mehrotra predictor-corrector) for the
/// same problem with sparse data; G only needs to be positive semidefinite
/// on the feasible set. Each iteration factors G + A'WA with a sparse LDL'.
QpResult solve_qp_sparse(const Eigen::SparseMatrix<double>& G, const Eigen::VectorXd& g,
                         const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b);

}  // namespace mareforge
