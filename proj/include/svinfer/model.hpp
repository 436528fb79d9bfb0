#ifndef SVINFER_MODEL_HPP
#define SVINFER_MODEL_HPP

#include <Eigen/Dense>
#include <Eigen/QR>

#include <stdexcept>
#include <variant>
#include <vector>

#include "svinfer/linalg.hpp"
#include "svinfer/rng.hpp"

namespace svinfer {

struct ProblemDims {
  int m1 = 0;
  int m2 = 0;
  int r = 0;
  int n = 0;  // per-half sample size; the dataset holds 2n samples

  int m_bar() const { return std::max(m1, m2); }
  int m_star() const { return m1 + m2 - 2 * r; }

  void validate() const {
    if (m1 < 1 || m2 < 1 || n < 1)
      throw std::invalid_argument("ProblemDims: counts must be positive");
    if (r < 1 || r >= std::min(m1, m2))
      throw std::invalid_argument("ProblemDims: need 1 <= r < min(m1, m2)");
  }
};

/// Ground truth M = U Lambda V^T plus the noise level sigma.
struct LowRankModel {
  ProblemDims dims;
  Matrix u;        // m1 x r, orthonormal columns
  Matrix v;        // m2 x r, orthonormal columns
  Vector lambdas;  // r, positive, non-increasing
  double sigma = 0.0;

  Matrix matrix() const { return u * lambdas.asDiagonal() * v.transpose(); }
  SvdFactors factors() const { return SvdFactors{u, lambdas, v}; }
  double lambda_inv_norm2() const {
    return lambdas.cwiseInverse().squaredNorm();
  }
  double lambda_inv2_norm() const {
    return lambdas.array().square().inverse().matrix().norm();
  }
};

/// 2n Gaussian-design trace-regression samples, split evenly at index n.
/// X matrices are stored contiguously, one row-major m1 x m2 block per
/// sample; immutable after construction.
class Dataset {
 public:
  using XMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;
  // All samples of one half viewed as an n x (m1*m2) design block.
  using DesignMap = XMap;

  Dataset(int m1, int m2, std::vector<double> xs, std::vector<double> ys)
      : m1_(m1), m2_(m2), xs_(std::move(xs)), ys_(std::move(ys)) {
    if (m1_ < 1 || m2_ < 1) throw std::invalid_argument("Dataset: bad dims");
    if (ys_.empty() || ys_.size() % 2 != 0)
      throw std::invalid_argument("Dataset: sample count must be even and positive");
    if (xs_.size() != ys_.size() * static_cast<std::size_t>(m1_) * m2_)
      throw std::invalid_argument("Dataset: X payload size mismatch");
    for (double v : xs_)
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite X");
    for (double v : ys_)
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite y");
  }

  int m1() const { return m1_; }
  int m2() const { return m2_; }
  int d() const { return m1_ * m2_; }
  int n() const { return static_cast<int>(ys_.size()) / 2; }
  int total() const { return static_cast<int>(ys_.size()); }

  XMap x(int i) const { return XMap(xs_.data() + static_cast<std::size_t>(i) * d(), m1_, m2_); }
  double y(int i) const { return ys_[i]; }

  /// Samples [begin, begin+count) as an n x d design block.
  DesignMap design(int begin, int count) const {
    return DesignMap(xs_.data() + static_cast<std::size_t>(begin) * d(), count, d());
  }
  Eigen::Map<const Vector> y_block(int begin, int count) const {
    return Eigen::Map<const Vector>(ys_.data() + begin, count);
  }

  const std::vector<double>& raw_x() const { return xs_; }
  const std::vector<double>& raw_y() const { return ys_; }

  /// New dataset with the two halves swapped.
  Dataset swapped_halves() const {
    const int half = n();
    std::vector<double> xs(xs_.size()), ys(ys_.size());
    const std::size_t xh = static_cast<std::size_t>(half) * d();
    std::copy(xs_.begin() + xh, xs_.end(), xs.begin());
    std::copy(xs_.begin(), xs_.begin() + xh, xs.begin() + xh);
    std::copy(ys_.begin() + half, ys_.end(), ys.begin());
    std::copy(ys_.begin(), ys_.begin() + half, ys.begin() + half);
    return Dataset(m1_, m2_, std::move(xs), std::move(ys));
  }

 private:
  int m1_, m2_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Lightweight reference to one half of a dataset.
struct DataHalf {
  const Dataset* data;
  int begin;
  int count;

  Dataset::DesignMap design() const { return data->design(begin, count); }
  Eigen::Map<const Vector> y() const { return data->y_block(begin, count); }
  int m1() const { return data->m1(); }
  int m2() const { return data->m2(); }
  int d() const { return data->d(); }
};

inline DataHalf first_half(const Dataset& d) { return {&d, 0, d.n()}; }
inline DataHalf second_half(const Dataset& d) { return {&d, d.n(), d.n()}; }

/// m x r matrix with orthonormal columns: QR of a Gaussian draw, R-diagonal
/// signs normalized positive so the result is Haar-distributed and unique.
inline Matrix random_orthonormal(int m, int r, Rng& rng) {
  if (r > m) throw std::invalid_argument("random_orthonormal: r > m");
  Matrix g(m, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < m; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(m, r);
  Matrix rmat = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (int j = 0; j < r; ++j)
    if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

struct GeometricSpectrum {};
using LambdaSpec = std::variant<GeometricSpectrum, std::vector<double>>;

inline LowRankModel make_model(const ProblemDims& dims,
                               const LambdaSpec& lambda_spec, double sigma,
                               Rng& rng) {
  dims.validate();
  if (sigma < 0.0) throw std::invalid_argument("make_model: sigma < 0");
  Vector lambdas(dims.r);
  if (std::holds_alternative<GeometricSpectrum>(lambda_spec)) {
    // lambda_k = 2^(r - k + 1)
    for (int k = 0; k < dims.r; ++k)
      lambdas[k] = std::ldexp(1.0, dims.r - k);
  } else {
    const auto& given = std::get<std::vector<double>>(lambda_spec);
    if (static_cast<int>(given.size()) != dims.r)
      throw std::invalid_argument("make_model: lambda list length != r");
    for (int k = 0; k < dims.r; ++k) {
      if (given[k] <= 0.0 || (k > 0 && given[k] > given[k - 1]))
        throw std::invalid_argument(
            "make_model: lambdas must be positive and non-increasing");
      lambdas[k] = given[k];
    }
  }
  LowRankModel model;
  model.dims = dims;
  model.u = random_orthonormal(dims.m1, dims.r, rng);
  model.v = random_orthonormal(dims.m2, dims.r, rng);
  model.lambdas = lambdas;
  model.sigma = sigma;
  return model;
}

/// 2n samples of y = tr(M^T X) + xi with i.i.d. standard Gaussian X and
/// xi ~ N(0, sigma^2) independent of X.
inline Dataset sample_dataset(const LowRankModel& model, Rng& rng) {
  const int m1 = model.dims.m1, m2 = model.dims.m2, n2 = 2 * model.dims.n;
  const std::size_t d = static_cast<std::size_t>(m1) * m2;
  Matrix m = model.matrix();
  // Row-major copy of M so <M, X_i> is a contiguous dot product.
  std::vector<double> mrow(d);
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m2; ++j) mrow[static_cast<std::size_t>(i) * m2 + j] = m(i, j);

  std::vector<double> xs(static_cast<std::size_t>(n2) * d);
  std::vector<double> ys(n2);
  for (int i = 0; i < n2; ++i) {
    double* xi = xs.data() + static_cast<std::size_t>(i) * d;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xi[j] = rng.normal();
      dot += xi[j] * mrow[j];
    }
    ys[i] = dot + model.sigma * rng.normal();
  }
  return Dataset(m1, m2, std::move(xs), std::move(ys));
}

}  // namespace svinfer

#endif  // SVINFER_MODEL_HPP
