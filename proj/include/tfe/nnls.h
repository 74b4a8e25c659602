#pragma once

#include "Eigen/Core"
#include "Eigen/SparseCore"

namespace tfe {

struct nnls_options {
  double ridge_{1e-8};
  double tol_{1e-6};
  int max_iter_{50000};
  // Largest normal-equation system used to polish the support exactly.
  int polish_dim_{20000};
};

struct nnls_result {
  Eigen::VectorXd x_;
  double objective_{0.0};
  double kkt_{0.0};
  int iterations_{0};
  bool converged_{false};
};

// min ||A x - b||^2 + ridge ||x||^2 subject to x >= 0.
// Accelerated projected gradient from zero, then an exact solve on the
// detected support (sparse factorization) when it is small enough.
nnls_result solve_nnls(Eigen::SparseMatrix<double> const& a,
                       Eigen::VectorXd const& b, nnls_options const& opt = {});

// max_j max(-g_j, |x_j g_j|) with g the gradient of the ridge objective.
double nnls_kkt_residual(Eigen::SparseMatrix<double> const& a,
                         Eigen::VectorXd const& b, double ridge,
                         Eigen::VectorXd const& x);

double nnls_objective(Eigen::SparseMatrix<double> const& a,
                      Eigen::VectorXd const& b, double ridge,
                      Eigen::VectorXd const& x);

}  // namespace tfe
