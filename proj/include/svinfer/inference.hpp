#ifndef SVINFER_INFERENCE_HPP
#define SVINFER_INFERENCE_HPP

#include <cmath>
#include <vector>

#include "svinfer/linalg.hpp"
#include "svinfer/model.hpp"
#include "svinfer/solver.hpp"

namespace svinfer {

/// De-biased estimate and its top-r singular triplets.
struct SubspaceEstimate {
  Matrix m_hat;
  Matrix u_hat;
  Matrix v_hat;
  Vector lambda_hat;
  ProblemDims dims;
};

/// Plug-in quantities and the confidence region for the squared joint
/// projection distance.
struct InferenceSummary {
  double sigma2_hat = 0.0;
  Vector lambda_tilde2;
  double b_n = 0.0;
  double v_n = 0.0;
  double center = 0.0;
  double half_width = 0.0;
  double alpha = 0.0;
  double beta_diag = 0.0;      // sigma_hat / lambda_tilde_r
  bool clamp_fired = false;    // shrinkage hit the floor for some k
};

/// M_hat = M_nuc + (1/n) sum_i (y_i - <X_i, M_nuc>) X_i over the held-out
/// half; conditionally unbiased for M given M_nuc.
inline Matrix debias(const Matrix& m_nuc, const DataHalf& half2) {
  if (m_nuc.rows() != half2.m1() || m_nuc.cols() != half2.m2())
    throw std::invalid_argument("debias: dimension mismatch");
  if (half2.count < 1) throw std::invalid_argument("debias: empty half");
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat m_row = m_nuc;
  Eigen::Map<const Vector> m_vec(m_row.data(), m_row.size());
  auto design = half2.design();
  Vector resid = half2.y() - design * m_vec;
  Vector corr = design.transpose() * resid / half2.count;
  RowMat out_row = m_row + Eigen::Map<const RowMat>(corr.data(), m_nuc.rows(),
                                                    m_nuc.cols());
  return Matrix(out_row);
}

inline SubspaceEstimate extract_subspace(const Matrix& m_hat, int r) {
  if (r < 1 || r >= std::min(m_hat.rows(), m_hat.cols()))
    throw std::invalid_argument("extract_subspace: need 1 <= r < min dim");
  SvdFactors top = svd(m_hat, r);
  SubspaceEstimate est;
  est.m_hat = m_hat;
  est.u_hat = top.u;
  est.v_hat = top.v;
  est.lambda_hat = top.s;
  est.dims = ProblemDims{static_cast<int>(m_hat.rows()),
                         static_cast<int>(m_hat.cols()), r, 1};
  return est;
}

/// Residual mean square of m_nuc on the held-out half; estimates
/// sigma^2 + ||M - M_nuc||_F^2.
inline double sigma_hat2(const Matrix& m_nuc, const DataHalf& half2) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat m_row = m_nuc;
  Eigen::Map<const Vector> m_vec(m_row.data(), m_row.size());
  Vector resid = half2.y() - half2.design() * m_vec;
  return resid.squaredNorm() / half2.count;
}

constexpr double kShrinkFloorFraction = 1e-4;

/// lambda_tilde_k^2 = lambda_hat_k^2 - (2 m_star / n) sigma2_hat, floored at
/// 1e-4 * lambda_hat_k^2 so downstream inverse powers stay finite.
inline Vector shrink_singular(const Vector& lambda_hat, double sigma2_hat,
                              int m_star, int n, bool* clamp_fired = nullptr) {
  if (clamp_fired) *clamp_fired = false;
  Vector out(lambda_hat.size());
  const double subtrahend = 2.0 * m_star / n * sigma2_hat;
  for (Index k = 0; k < lambda_hat.size(); ++k) {
    const double l2 = lambda_hat[k] * lambda_hat[k];
    const double floor_k = kShrinkFloorFraction * l2;
    const double shrunk = l2 - subtrahend;
    if (shrunk < floor_k) {
      out[k] = floor_k;
      if (clamp_fired) *clamp_fired = true;
    } else {
      out[k] = shrunk;
    }
  }
  return out;
}

inline double b_n(const Vector& lambda_tilde2) {
  if ((lambda_tilde2.array() <= 0.0).any())
    throw std::invalid_argument("b_n: non-positive entry");
  return lambda_tilde2.cwiseInverse().sum();
}

inline double v_n(const Vector& lambda_tilde2) {
  if ((lambda_tilde2.array() <= 0.0).any())
    throw std::invalid_argument("v_n: non-positive entry");
  return lambda_tilde2.array().square().inverse().sum();
}

/// Studentized statistic
/// (dist2 - 2 (m_star/n) b_n sigma2) / (sqrt(8) v_n^{1/2} sigma2 m_star^{1/2} / n).
inline double t_statistic(double dist2, double b_n_val, double v_n_val,
                          double sigma2, int m_star, int n) {
  if (!(v_n_val > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("t_statistic: need v_n > 0 and sigma2 > 0");
  const double center = 2.0 * m_star / static_cast<double>(n) * b_n_val * sigma2;
  const double scale = std::sqrt(8.0) * std::sqrt(v_n_val) * sigma2 *
                       std::sqrt(static_cast<double>(m_star)) / n;
  return (dist2 - center) / scale;
}

/// Confidence region for dist^2 at nominal coverage 1 - alpha.
inline InferenceSummary confidence_region(const Vector& lambda_hat,
                                          double sigma2_hat_val, int m_star,
                                          int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("confidence_region: alpha outside (0,1)");
  InferenceSummary s;
  s.sigma2_hat = sigma2_hat_val;
  s.lambda_tilde2 =
      shrink_singular(lambda_hat, sigma2_hat_val, m_star, n, &s.clamp_fired);
  s.b_n = b_n(s.lambda_tilde2);
  s.v_n = v_n(s.lambda_tilde2);
  s.alpha = alpha;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  s.center = s.b_n * sigma2_hat_val * 2.0 * m_star / static_cast<double>(n);
  s.half_width = std::sqrt(8.0) * z * std::sqrt(s.v_n) * sigma2_hat_val *
                 std::sqrt(static_cast<double>(m_star)) / n;
  s.beta_diag =
      std::sqrt(sigma2_hat_val) /
      std::sqrt(s.lambda_tilde2[s.lambda_tilde2.size() - 1]);
  return s;
}

inline bool region_contains(const SubspaceEstimate& est,
                            const Matrix& candidate_u,
                            const Matrix& candidate_v,
                            const InferenceSummary& summary) {
  const double d2 = projection_distance2(candidate_u, candidate_v, est.u_hat,
                                         est.v_hat);
  return std::abs(d2 - summary.center) <= summary.half_width;
}

/// Count of singular values at or above 2 c sigma_hat sqrt(max(m1,m2)/n).
inline int estimate_rank(const Vector& singular_values, double sigma_hat,
                         int m1, int m2, int n, double c = 1.0) {
  if (!(sigma_hat > 0.0))
    throw std::invalid_argument("estimate_rank: sigma_hat must be positive");
  const double threshold =
      2.0 * c * sigma_hat * std::sqrt(static_cast<double>(std::max(m1, m2)) / n);
  int count = 0;
  for (Index k = 0; k < singular_values.size(); ++k)
    if (singular_values[k] >= threshold) ++count;
  return count;
}

/// Double-sample-splitting estimate: fit on each half, de-bias on the
/// other, average the two de-biased matrices.
inline Matrix double_split_estimate(const Dataset& dataset,
                                    const SolverConfig& config) {
  SolverResult fit1 = solve_nuclear(first_half(dataset), config);
  SolverResult fit2 = solve_nuclear(second_half(dataset), config);
  Matrix m1 = debias(fit1.m_nuc, second_half(dataset));
  Matrix m2 = debias(fit2.m_nuc, first_half(dataset));
  return 0.5 * (m1 + m2);
}

}  // namespace svinfer

#endif  // SVINFER_INFERENCE_HPP
