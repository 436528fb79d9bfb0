#ifndef SVINFER_SOLVER_HPP
#define SVINFER_SOLVER_HPP

#include <cmath>
#include <vector>

#include "svinfer/linalg.hpp"
#include "svinfer/model.hpp"

namespace svinfer {

struct SolverConfig {
  double lambda_reg = 0.0;  // nuclear-norm penalty, must be set by caller
  double rho = 1.0;
  int max_iter = 500;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double cg_tol = 1e-8;
  int cg_max_iter = 200;
  bool record_history = false;

  void validate() const {
    if (lambda_reg <= 0.0) throw std::invalid_argument("SolverConfig: lambda_reg <= 0");
    if (rho <= 0.0) throw std::invalid_argument("SolverConfig: rho <= 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter < 1");
    if (tol_primal <= 0.0 || tol_dual <= 0.0 || cg_tol <= 0.0)
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (cg_max_iter < 1) throw std::invalid_argument("SolverConfig: cg_max_iter < 1");
  }
};

struct SolverResult {
  Matrix m_nuc;
  int iterations = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  std::vector<double> merit_history;  // filled when record_history is set
};

/// Default penalty c * sigma * sqrt(max(m1, m2) / n).
inline double default_lambda(double sigma, int m1, int m2, int n,
                             double c = 2.0) {
  if (sigma <= 0.0)
    throw std::invalid_argument("default_lambda: sigma must be positive");
  if (n < 1 || c <= 0.0)
    throw std::invalid_argument("default_lambda: bad n or c");
  return c * sigma * std::sqrt(static_cast<double>(std::max(m1, m2)) / n);
}

inline double nuclear_norm(const Matrix& a) { return svd(a).s.sum(); }

/// Penalized objective (1/n) sum_i (y_i - <A, X_i>)^2 + lambda ||A||_*.
inline double objective(const Matrix& a, const DataHalf& half,
                        double lambda_reg) {
  if (a.rows() != half.m1() || a.cols() != half.m2())
    throw std::invalid_argument("objective: dimension mismatch");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arow = a;
  Eigen::Map<const Vector> avec(arow.data(), arow.size());
  Vector resid = half.y() - half.design() * avec;
  return resid.squaredNorm() / half.count + lambda_reg * nuclear_norm(a);
}

/// Nuclear-norm penalized least squares via ADMM with an SVT proximal step.
/// The A-update solves ((2/n) X*X + rho I) a = (2/n) X*y + rho (b - w) by
/// warm-started conjugate gradient on operator applications only. Returns
/// the B iterate, which carries exact soft-thresholded singular values.
inline SolverResult solve_nuclear(const DataHalf& half,
                                  const SolverConfig& config) {
  config.validate();
  const int n = half.count;
  const int d = half.d();
  const double rho = config.rho;
  auto design = half.design();
  auto y = half.y();

  Vector a = Vector::Zero(d);
  Vector b = Vector::Zero(d);
  Vector w = Vector::Zero(d);
  Vector xty = design.transpose() * y;

  // H v = (2/n) X^T (X v) + rho v
  Vector tmp_n(n);
  auto apply_h = [&](const Vector& v, Vector& out) {
    tmp_n.noalias() = design * v;
    out.noalias() = design.transpose() * tmp_n;
    out *= 2.0 / n;
    out += rho * v;
  };

  Vector rhs(d), cg_r(d), cg_p(d), cg_hp(d);
  auto cg_solve = [&](const Vector& rhs_in, Vector& x) {
    apply_h(x, cg_hp);
    cg_r = rhs_in - cg_hp;
    const double target = config.cg_tol * rhs_in.norm();
    double rr = cg_r.squaredNorm();
    if (std::sqrt(rr) <= target) return;
    cg_p = cg_r;
    for (int it = 0; it < config.cg_max_iter; ++it) {
      apply_h(cg_p, cg_hp);
      const double php = cg_p.dot(cg_hp);
      if (!(php > 0.0))
        throw std::runtime_error("solve_nuclear: CG breakdown at inner iteration " +
                                 std::to_string(it));
      const double alpha = rr / php;
      x += alpha * cg_p;
      cg_r -= alpha * cg_hp;
      const double rr_new = cg_r.squaredNorm();
      if (std::sqrt(rr_new) <= target) return;
      cg_p = cg_r + (rr_new / rr) * cg_p;
      rr = rr_new;
    }
  };

  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix b_mat = Matrix::Zero(half.m1(), half.m2());

  SolverResult result;
  double primal = 0.0, dual = 0.0;
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    rhs = (2.0 / n) * xty + rho * (b - w);
    cg_solve(rhs, a);

    Vector b_old = b;
    RowMat target_row = Eigen::Map<const RowMat>((a + w).eval().data(),
                                                 half.m1(), half.m2());
    b_mat = soft_threshold_sv(Matrix(target_row), config.lambda_reg / rho);
    RowMat b_row = b_mat;
    b = Eigen::Map<const Vector>(b_row.data(), d);

    w += a - b;

    primal = (a - b).norm();
    dual = rho * (b - b_old).norm();
    if (config.record_history) {
      tmp_n.noalias() = design * b;
      const double fit = (y - tmp_n).squaredNorm() / n;
      const double merit = fit + config.lambda_reg * nuclear_norm(b_mat) +
                           (rho / 2.0) * (a - b + w).squaredNorm() -
                           (rho / 2.0) * w.squaredNorm();
      result.merit_history.push_back(merit);
    }
    const double primal_tol =
        config.tol_primal * std::max({a.norm(), b.norm(), 1.0});
    const double dual_tol = config.tol_dual * (1.0 + w.norm() * rho);
    if (primal <= primal_tol && dual <= dual_tol) {
      ++iter;
      result.converged = true;
      break;
    }
  }

  result.m_nuc = b_mat;
  result.iterations = iter;
  result.primal_residual = primal;
  result.dual_residual = dual;
  result.objective = objective(b_mat, half, config.lambda_reg);
  return result;
}

}  // namespace svinfer

#endif  // SVINFER_SOLVER_HPP
