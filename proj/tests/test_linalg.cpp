#include "svinfer/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "svinfer/model.hpp"
#include "svinfer/rng.hpp"

namespace svinfer {
namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// ---- independent oracles (no dependence on svinfer::svd) ----

// Eigenvalues of a symmetric matrix by classical Jacobi rotation sweeps.
std::vector<double> jacobi_eigenvalues(Matrix a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-18) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

std::vector<double> jacobi_singular_values(const Matrix& a) {
  Matrix gram = a.transpose() * a;
  auto ev = jacobi_eigenvalues(gram);
  for (auto& v : ev) v = std::sqrt(std::max(0.0, v));
  return ev;
}

double nuclear_norm_oracle(const Matrix& a) {
  double s = 0.0;
  for (double v : jacobi_singular_values(a)) s += v;
  return s;
}

double prox_objective(const Matrix& a, const Matrix& b, double tau) {
  return 0.5 * (a - b).squaredNorm() + tau * nuclear_norm_oracle(b);
}

// High-precision standard normal CDF: Taylor series of erf near zero,
// Lentz continued fraction for erfc in the tails.
long double phi_oracle(long double x) {
  const long double z = std::abs(x) / std::sqrt(2.0L);
  long double result;
  if (z < 3.0L) {
    long double term = z, sum = z;
    for (int k = 1; k < 200; ++k) {
      term *= -z * z / k;
      sum += term / (2 * k + 1);
      if (std::abs(term) < 1e-25L) break;
    }
    const long double erf = 2.0L / std::sqrt(M_PIl) * sum;
    result = 0.5L * (1.0L + erf);
  } else {
    // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + 1/2 / (z + 2/2 / (z + ...)))
    long double f = z;
    for (int k = 120; k >= 1; --k) f = z + (k / 2.0L) / f;
    const long double erfc = std::exp(-z * z) / std::sqrt(M_PIl) / f;
    result = 1.0L - 0.5L * erfc;
  }
  return x >= 0 ? result : 1.0L - result;
}

// ---- svd ----

TEST(Svd, Identity3x3) {
  auto f = svd(Matrix::Identity(3, 3), 3);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(f.s[i], 1.0);
}

TEST(Svd, DiagonalMatrix) {
  Vector d(4);
  d << 16, 8, 4, 2;
  auto f = svd(Matrix(d.asDiagonal()));
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(f.s[i], d[i], 1e-12);
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(std::abs(f.u(i, j)), i == j ? 1.0 : 0.0, 1e-12);
      EXPECT_NEAR(f.u(i, j), f.v(i, j), 1e-12);
    }
  }
}

TEST(Svd, MatchesJacobiOracle) {
  Rng rng(11);
  Matrix a = random_matrix(6, 5, rng);
  auto f = svd(a);
  auto ref = jacobi_singular_values(a);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(f.s[i], ref[i], 1e-8);
}

TEST(Svd, ReconstructionAndOrthonormality) {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a = random_matrix(7, 4, rng);
    auto f = svd(a);
    Matrix rec = f.u * f.s.asDiagonal() * f.v.transpose();
    EXPECT_LE((rec - a).norm(), 1e-9 * a.norm());
    EXPECT_LE((f.u.transpose() * f.u - Matrix::Identity(4, 4)).norm(), 1e-10);
    EXPECT_LE((f.v.transpose() * f.v - Matrix::Identity(4, 4)).norm(), 1e-10);
    for (int k = 1; k < f.s.size(); ++k) EXPECT_GE(f.s[k - 1], f.s[k]);
  }
}

TEST(Svd, TruncatedTopK) {
  Rng rng(13);
  Matrix a = random_matrix(6, 6, rng);
  auto full = svd(a);
  auto top = svd(a, 2);
  EXPECT_EQ(top.s.size(), 2);
  EXPECT_NEAR(top.s[0], full.s[0], 1e-12);
  EXPECT_NEAR(top.s[1], full.s[1], 1e-12);
}

TEST(Svd, SignConvention) {
  Rng rng(14);
  Matrix a = random_matrix(5, 5, rng);
  auto f = svd(a);
  for (int k = 0; k < 5; ++k) {
    int lead = 0;
    while (std::abs(f.u(lead, k)) < 1e-12) ++lead;
    EXPECT_GT(f.u(lead, k), 0.0);
  }
}

TEST(Svd, Errors) {
  EXPECT_THROW(svd(Matrix::Identity(3, 3), 4), std::invalid_argument);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(bad), std::invalid_argument);
}

// ---- soft_threshold_sv ----

TEST(SoftThreshold, ZeroTauIsIdentity) {
  Rng rng(21);
  Matrix a = random_matrix(4, 3, rng);
  EXPECT_LE((soft_threshold_sv(a, 0.0) - a).norm(), 1e-9);
}

TEST(SoftThreshold, DiagonalShrinkage) {
  Vector d(4);
  d << 16, 8, 4, 2;
  Matrix out = soft_threshold_sv(Matrix(d.asDiagonal()), 5.0);
  Vector expected(4);
  expected << 11, 3, 0, 0;
  EXPECT_LE((out - Matrix(expected.asDiagonal())).norm(), 1e-10);
}

// Closed-form nuclear norm of a 2x2 matrix (quadratic in the Gram
// eigenvalues); independent of svinfer::svd.
double nuclear_norm_2x2(double b00, double b01, double b10, double b11) {
  const double g00 = b00 * b00 + b10 * b10;
  const double g11 = b01 * b01 + b11 * b11;
  const double g01 = b00 * b01 + b10 * b11;
  const double tr = g00 + g11;
  const double disc = std::sqrt(std::max(
      0.0, (g00 - g11) * (g00 - g11) + 4.0 * g01 * g01));
  const double s1 = std::sqrt(std::max(0.0, 0.5 * (tr + disc)));
  const double s2 = std::sqrt(std::max(0.0, 0.5 * (tr - disc)));
  return s1 + s2;
}

TEST(SoftThreshold, GridSearchProxOracle) {
  // argmin of 0.5 ||A - B||_F^2 + tau ||B||_* over successively refined
  // coordinate grids; refinement is safe since the objective is convex.
  Rng rng(22);
  Matrix a = random_matrix(2, 2, rng);
  const double tau = 0.3;
  Matrix prox = soft_threshold_sv(a, tau);

  double c00 = a(0, 0), c01 = a(0, 1), c10 = a(1, 0), c11 = a(1, 1);
  double span = 1.5;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int stage = 0; stage < 4; ++stage) {
    const double step = span / 15.0;
    double b00 = c00, b01 = c01, b10 = c10, b11 = c11;
    for (double x00 = b00 - span; x00 <= b00 + span + 1e-15; x00 += step)
      for (double x01 = b01 - span; x01 <= b01 + span + 1e-15; x01 += step)
        for (double x10 = b10 - span; x10 <= b10 + span + 1e-15; x10 += step)
          for (double x11 = b11 - span; x11 <= b11 + span + 1e-15;
               x11 += step) {
            const double d00 = x00 - a(0, 0), d01 = x01 - a(0, 1);
            const double d10 = x10 - a(1, 0), d11 = x11 - a(1, 1);
            const double obj =
                0.5 * (d00 * d00 + d01 * d01 + d10 * d10 + d11 * d11) +
                tau * nuclear_norm_2x2(x00, x01, x10, x11);
            if (obj < best_obj) {
              best_obj = obj;
              c00 = x00;
              c01 = x01;
              c10 = x10;
              c11 = x11;
            }
          }
    span = 2.0 * step;
  }
  Matrix best(2, 2);
  best << c00, c01, c10, c11;
  EXPECT_LE((prox - best).norm(), 1e-3);
  EXPECT_LE(prox_objective(a, prox, tau), best_obj + 1e-9);
}

TEST(SoftThreshold, ProxOptimalityProperty) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = trial % 2 == 0 ? 2 : 3;
    Matrix a = random_matrix(n, n, rng);
    const double tau = 0.2 + 0.3 * rng.uniform();
    Matrix prox = soft_threshold_sv(a, tau);
    const double base = prox_objective(a, prox, tau);
    for (int p = 0; p < 20; ++p) {
      Matrix delta = random_matrix(n, n, rng);
      delta *= 0.1 * rng.uniform() / delta.norm();
      EXPECT_GE(prox_objective(a, prox + delta, tau), base - 1e-9);
    }
  }
}

// ---- dilation ----

TEST(Dilation, ZeroMatrix) {
  EXPECT_EQ(dilation(Matrix::Zero(2, 3)).norm(), 0.0);
}

TEST(Dilation, RankOneEigenvalues) {
  Rng rng(31);
  Matrix u = random_orthonormal(4, 1, rng);
  Matrix v = random_orthonormal(3, 1, rng);
  Matrix m = 3.0 * u * v.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(dilation(m));
  Vector ev = es.eigenvalues();
  EXPECT_NEAR(ev.minCoeff(), -3.0, 1e-10);
  EXPECT_NEAR(ev.maxCoeff(), 3.0, 1e-10);
  int nonzero = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > 1e-10) ++nonzero;
  EXPECT_EQ(nonzero, 2);
}

TEST(Dilation, DiagonalCase) {
  Vector d(2);
  d << 2, 1;
  Eigen::SelfAdjointEigenSolver<Matrix> es(dilation(Matrix(d.asDiagonal())));
  Vector ev = es.eigenvalues();
  Vector expected(4);
  expected << -2, -1, 1, 2;
  EXPECT_LE((ev - expected).norm(), 1e-10);
}

TEST(Dilation, SpectralIdentityProperty) {
  Rng rng(32);
  Matrix a = random_matrix(4, 6, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> es(dilation(a));
  std::vector<double> abs_nonzero;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i]) > 1e-9)
      abs_nonzero.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(abs_nonzero.begin(), abs_nonzero.end(), std::greater<>());
  auto sv = jacobi_singular_values(a);
  ASSERT_EQ(abs_nonzero.size(), 8u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(abs_nonzero[2 * k], sv[k], 1e-9);
    EXPECT_NEAR(abs_nonzero[2 * k + 1], sv[k], 1e-9);
  }
}

// ---- projector_set ----

TEST(ProjectorSet, ScalarExample) {
  Matrix one = Matrix::Ones(1, 1);
  Vector lam(1);
  lam << 2.0;
  auto ps = projector_set(one, one, lam);
  Matrix expected(2, 2);
  expected << 0.0, 0.5, 0.5, 0.0;
  EXPECT_LE((ps.c_uv - expected).norm(), 1e-12);
}

TEST(ProjectorSet, InvariantsOnRandomFactors) {
  Rng rng(41);
  const int m1 = 6, m2 = 5, r = 2;
  Matrix u = random_orthonormal(m1, r, rng);
  Matrix v = random_orthonormal(m2, r, rng);
  Vector lam(r);
  lam << 3.0, 1.5;
  auto ps = projector_set(u, v, lam);

  EXPECT_NEAR(ps.p_uv.trace(), 2.0 * r, 1e-9);
  EXPECT_LE((ps.p_uv - ps.p_uv.transpose()).norm(), 1e-9);
  EXPECT_LE((ps.p_uv * ps.p_uv - ps.p_uv).norm(), 1e-9);
  EXPECT_LE((ps.p_perp * ps.p_perp - ps.p_perp).norm(), 1e-9);
  EXPECT_LE((ps.p_uv + ps.p_perp - Matrix::Identity(m1 + m2, m1 + m2)).norm(),
            1e-12);
  EXPECT_LE((ps.p_uv * ps.c_uv - ps.c_uv).norm(), 1e-9);

  // C N C = C for N = dilation(U Lambda V^T).
  Matrix n = dilation(u * lam.asDiagonal() * v.transpose());
  EXPECT_LE((ps.c_uv * n * ps.c_uv - ps.c_uv).norm(), 1e-9);
}

TEST(ProjectorSet, Errors) {
  Rng rng(42);
  Matrix u = random_orthonormal(4, 2, rng);
  Matrix v = random_orthonormal(4, 2, rng);
  Vector lam(2);
  lam << 2.0, 1.0;
  Matrix skew = u;
  skew(0, 0) += 0.01;
  EXPECT_THROW(projector_set(skew, v, lam), std::invalid_argument);
  Vector bad_lam(2);
  bad_lam << 2.0, 0.0;
  EXPECT_THROW(projector_set(u, v, bad_lam), std::invalid_argument);
}

// ---- projection_distance2 ----

TEST(ProjectionDistance, IdenticalPairsZero) {
  Rng rng(51);
  Matrix u = random_orthonormal(5, 2, rng);
  Matrix v = random_orthonormal(4, 2, rng);
  EXPECT_NEAR(projection_distance2(u, v, u, v), 0.0, 1e-10);
}

TEST(ProjectionDistance, OrthogonalRankOne) {
  Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  EXPECT_NEAR(projection_distance2(e1, e1, e2, e2), 4.0, 1e-12);
}

TEST(ProjectionDistance, RotationInvarianceAndSymmetry) {
  Rng rng(52);
  const int r = 3;
  Matrix u1 = random_orthonormal(7, r, rng);
  Matrix v1 = random_orthonormal(6, r, rng);
  Matrix u2 = random_orthonormal(7, r, rng);
  Matrix v2 = random_orthonormal(6, r, rng);
  Matrix q = random_orthonormal(r, r, rng);
  Matrix qp = random_orthonormal(r, r, rng);

  EXPECT_NEAR(projection_distance2(u1, v1, u1 * q, v1 * qp), 0.0, 1e-10);
  const double d12 = projection_distance2(u1, v1, u2, v2);
  const double d21 = projection_distance2(u2, v2, u1, v1);
  EXPECT_NEAR(d12, d21, 1e-10);
  EXPECT_NEAR(projection_distance2(u1 * q, v1 * qp, u2, v2), d12, 1e-9);
  EXPECT_GE(d12, 0.0);
  EXPECT_LE(d12, 4.0 * r);
}

TEST(ProjectionDistance, DimensionMismatch) {
  Matrix a = Matrix::Identity(3, 1), b = Matrix::Identity(4, 1);
  EXPECT_THROW(projection_distance2(a, a, b, b), std::invalid_argument);
}

// ---- linear_term_norm2 ----

SvdFactors test_factors(int m1, int m2, int r, Rng& rng) {
  SvdFactors f;
  f.u = random_orthonormal(m1, r, rng);
  f.v = random_orthonormal(m2, r, rng);
  f.s = Vector::LinSpaced(r, 4.0, 2.0);
  return f;
}

TEST(LinearTerm, ZeroPerturbation) {
  Rng rng(61);
  auto f = test_factors(6, 5, 2, rng);
  EXPECT_EQ(linear_term_norm2(f, Matrix::Zero(6, 5)), 0.0);
}

TEST(LinearTerm, InSubspacePerturbationVanishes) {
  Rng rng(62);
  auto f = test_factors(6, 5, 2, rng);
  Matrix z = f.u * f.s.asDiagonal() * f.v.transpose();
  EXPECT_NEAR(linear_term_norm2(f, z), 0.0, 1e-18);
}

TEST(LinearTerm, ExplicitMatrixOracle) {
  Rng rng(63);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = test_factors(7, 5, 2, rng);
    Matrix z = random_matrix(7, 5, rng);
    auto ps = projector_set(f.u, f.v, f.s);
    Matrix e = dilation(z);
    Matrix l = ps.p_perp * e * ps.c_uv + ps.c_uv * e * ps.p_perp;
    const double expected = l.squaredNorm();
    const double got = linear_term_norm2(f, z);
    EXPECT_NEAR(got, expected, 1e-9 * std::max(1.0, expected));
  }
}

// ---- normal cdf / quantile ----

TEST(NormalCdf, BasicValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  for (double x : {0.5, 1.0, 2.0})
    EXPECT_NEAR(normal_cdf(-x) + normal_cdf(x), 1.0, 1e-15);
}

TEST(NormalCdf, HighPrecisionOracle) {
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    EXPECT_NEAR(normal_cdf(x), static_cast<double>(phi_oracle(x)), 1e-12)
        << "x=" << x;
  }
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
  EXPECT_NEAR(normal_quantile(0.75), 0.6744897501960817, 1e-9);
}

TEST(NormalQuantile, RoundTrip) {
  // Past |x| ~ 5.5 the upper-tail CDF saturates in double precision and the
  // round trip is ill-conditioned regardless of the quantile accuracy.
  for (double x = -5.0; x <= 5.0; x += 0.125)
    EXPECT_NEAR(normal_quantile(normal_cdf(x)), x, 1e-9) << "x=" << x;
  for (double x = -8.0; x <= -5.0; x += 0.25)
    EXPECT_NEAR(normal_quantile(normal_cdf(x)), x, 1e-9) << "x=" << x;
}

TEST(NormalQuantile, DomainErrors) {
  EXPECT_THROW(normal_quantile(0.0), std::invalid_argument);
  EXPECT_THROW(normal_quantile(1.0), std::invalid_argument);
}

}  // namespace
}  // namespace svinfer
