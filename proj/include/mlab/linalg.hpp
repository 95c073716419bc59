#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mlab {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline double distance2(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance2: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(const Vec& a, const Vec& b) { return std::sqrt(distance2(a, b)); }

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec y(x);
  for (double& v : y) v *= alpha;
  return y;
}

// Dense row-major matrix. Sized for desk-scale experiments; everything the
// library needs fits comfortably below a few hundred rows or columns on at
// least one side.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // y = M x
  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("Matrix::apply: size mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = &data_[i * cols_];
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  // y = M^T x
  Vec apply_transposed(const Vec& x) const {
    if (x.size() != rows_) throw std::invalid_argument("Matrix::apply_transposed: size mismatch");
    Vec y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = &data_[i * cols_];
      const double xi = x[i];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * xi;
    }
    return y;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Singular values by one-sided Jacobi: rotate column pairs of A until all
// pairs are orthogonal, then the singular values are the column norms.
// Works on the transpose when that leaves fewer columns to orthogonalize.
// Adequate and accurate at the dense desk-scale sizes used here.
inline std::vector<double> singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw std::domain_error("singular_values: empty matrix");
  Matrix a = (m.cols() <= m.rows()) ? m : m.transposed();
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();

  // Column-major working copy so column ops are contiguous.
  std::vector<Vec> col(cols, Vec(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) col[j][i] = a(i, j);

  const double eps = 1e-14;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        const double alpha = dot(col[p], col[p]);
        const double beta = dot(col[q], col[q]);
        const double gamma = dot(col[p], col[q]);
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double vp = col[p][i];
          const double vq = col[q][i];
          col[p][i] = c * vp - s * vq;
          col[q][i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = norm(col[j]);
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

// Orthonormalizes the columns of a rows x cols matrix in place via modified
// Gram-Schmidt with one re-orthogonalization pass. Throws if the columns are
// numerically dependent.
inline void orthonormalize_columns(Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (cols > rows) throw std::invalid_argument("orthonormalize_columns: more columns than rows");
  std::vector<Vec> col(cols, Vec(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) col[j][i] = m(i, j);

  for (std::size_t j = 0; j < cols; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) axpy(-dot(col[k], col[j]), col[k], col[j]);
    }
    const double len = norm(col[j]);
    if (len < 1e-12) throw std::runtime_error("orthonormalize_columns: rank deficient input");
    for (double& v : col[j]) v /= len;
  }
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = col[j][i];
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::domain_error("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::domain_error("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace mlab
