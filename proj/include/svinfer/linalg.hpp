#ifndef SVINFER_LINALG_HPP
#define SVINFER_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace svinfer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin SVD factors a = u * diag(s) * v^T with orthonormal columns and
/// non-increasing singular values.
struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix v;

  Index rank() const { return s.size(); }
};

/// Spectral projectors of the dilation of u * diag(lambdas) * v^T:
/// p_uv projects onto the joint singular subspace, p_perp onto its
/// complement, c_uv carries the inverse-singular-value weights.
struct ProjectorSet {
  Matrix p_uv;
  Matrix p_perp;
  Matrix c_uv;
};

namespace detail {

// Flip column signs so the first entry of nonnegligible magnitude in each
// left singular vector is nonnegative; right vectors flip in tandem.
inline void normalize_svd_signs(Matrix& u, Matrix& v) {
  for (Index k = 0; k < u.cols(); ++k) {
    Index lead = 0;
    while (lead + 1 < u.rows() && std::abs(u(lead, k)) < 1e-12) ++lead;
    if (u(lead, k) < 0.0) {
      u.col(k) = -u.col(k);
      v.col(k) = -v.col(k);
    }
  }
}

}  // namespace detail

/// Thin SVD, optionally truncated to the top-k triplets.
inline SvdFactors svd(const Matrix& a, std::optional<Index> k = std::nullopt) {
  if (!a.allFinite()) throw std::invalid_argument("svd: non-finite input");
  const Index kmin = std::min(a.rows(), a.cols());
  if (k && (*k < 1 || *k > kmin))
    throw std::invalid_argument("svd: k exceeds min dimension");

  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw std::runtime_error("svd: decomposition did not converge");

  const Index kk = k ? *k : kmin;
  SvdFactors f;
  f.u = dec.matrixU().leftCols(kk);
  f.s = dec.singularValues().head(kk);
  f.v = dec.matrixV().leftCols(kk);
  detail::normalize_svd_signs(f.u, f.v);
  return f;
}

/// Proximal map of tau * nuclear norm: soft-thresholds the singular values.
inline Matrix soft_threshold_sv(const Matrix& a, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold_sv: tau < 0");
  SvdFactors f = svd(a);
  Vector shrunk = (f.s.array() - tau).max(0.0);
  return f.u * shrunk.asDiagonal() * f.v.transpose();
}

/// Symmetric dilation [[0, A], [A^T, 0]].
inline Matrix dilation(const Matrix& a) {
  const Index m1 = a.rows(), m2 = a.cols();
  Matrix d = Matrix::Zero(m1 + m2, m1 + m2);
  d.topRightCorner(m1, m2) = a;
  d.bottomLeftCorner(m2, m1) = a.transpose();
  return d;
}

namespace detail {

inline void check_orthonormal(const Matrix& q, const char* what,
                              double tol = 1e-8) {
  Matrix gram = q.transpose() * q;
  gram.diagonal().array() -= 1.0;
  if (gram.norm() > tol)
    throw std::invalid_argument(std::string(what) +
                                ": columns not orthonormal");
}

}  // namespace detail

/// Explicit projector matrices for the joint singular subspace of
/// u * diag(lambdas) * v^T.
inline ProjectorSet projector_set(const Matrix& u, const Matrix& v,
                                  const Vector& lambdas) {
  if (u.cols() != v.cols() || u.cols() != lambdas.size())
    throw std::invalid_argument("projector_set: rank mismatch");
  if ((lambdas.array() <= 0.0).any())
    throw std::invalid_argument("projector_set: non-positive lambda");
  detail::check_orthonormal(u, "projector_set(u)");
  detail::check_orthonormal(v, "projector_set(v)");

  const Index m1 = u.rows(), m2 = v.rows(), m = m1 + m2;
  ProjectorSet ps;
  ps.p_uv = Matrix::Zero(m, m);
  ps.p_uv.topLeftCorner(m1, m1) = u * u.transpose();
  ps.p_uv.bottomRightCorner(m2, m2) = v * v.transpose();
  ps.p_perp = Matrix::Identity(m, m) - ps.p_uv;
  ps.c_uv = Matrix::Zero(m, m);
  Matrix ulv = u * lambdas.cwiseInverse().asDiagonal() * v.transpose();
  ps.c_uv.topRightCorner(m1, m2) = ulv;
  ps.c_uv.bottomLeftCorner(m2, m1) = ulv.transpose();
  return ps;
}

/// Squared joint projection distance
/// ||U1 U1^T - U2 U2^T||_F^2 + ||V1 V1^T - V2 V2^T||_F^2, evaluated via the
/// stable identity 2(r - ||U1^T U2||_F^2) + 2(r - ||V1^T V2||_F^2).
inline double projection_distance2(const Matrix& u1, const Matrix& v1,
                                   const Matrix& u2, const Matrix& v2) {
  if (u1.rows() != u2.rows() || v1.rows() != v2.rows() ||
      u1.cols() != u2.cols() || v1.cols() != v2.cols() ||
      u1.cols() != v1.cols())
    throw std::invalid_argument("projection_distance2: dimension mismatch");
  const double r = static_cast<double>(u1.cols());
  const double du = 2.0 * (r - (u1.transpose() * u2).squaredNorm());
  const double dv = 2.0 * (r - (v1.transpose() * v2).squaredNorm());
  return std::max(0.0, du) + std::max(0.0, dv);
}

/// ||L_N(E)||_F^2 = 2 ||P_perp E C||_F^2 for E = dilation(z), computed
/// without materializing the orthogonal complements.
inline double linear_term_norm2(const SvdFactors& model, const Matrix& z) {
  const Matrix& u = model.u;
  const Matrix& v = model.v;
  if (z.rows() != u.rows() || z.cols() != v.rows())
    throw std::invalid_argument("linear_term_norm2: dimension mismatch");
  Matrix linv = model.s.cwiseInverse().asDiagonal();
  Matrix a = z * (v * linv);           // m1 x r
  a -= u * (u.transpose() * a);        // (I - U U^T) Z V Lambda^-1
  Matrix b = z.transpose() * (u * linv);
  b -= v * (v.transpose() * b);
  return 2.0 * (a.squaredNorm() + b.squaredNorm());
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Standard normal quantile (AS241-family rational approximation, one
/// Newton refinement on normal_cdf).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q *
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
              67265.770927008700853) * r + 45921.953931549871457) * r +
            13731.693765509461125) * r + 1971.5909503065514427) * r +
          133.14166789178437745) * r + 3.387132872796366608) /
        (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
              39307.89580009271061) * r + 21213.794301586595867) * r +
            5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
  } else {
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r +
                 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r +
                 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r +
             0.13692988092273580531) * r + 0.59983220655588793769) * r + 1.0);
    }
    if (q < 0.0) x = -x;
  }
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 1e-300) x -= (normal_cdf(x) - p) / pdf;
  return x;
}

}  // namespace svinfer

#endif  // SVINFER_LINALG_HPP
