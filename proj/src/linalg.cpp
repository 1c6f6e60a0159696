#include "hoif/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hoif {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw DimensionError("row_block out of range for " + shape_string());
  auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
  return Matrix(count, cols_, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

Matrix Matrix::col_block(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("col_block out of range for " + shape_string());
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_ + first), count,
                out.data_.begin() + static_cast<std::ptrdiff_t>(r * count));
  return out;
}

void Matrix::set_col_block(std::size_t first, const Matrix& block) {
  if (block.rows_ != rows_ || first + block.cols_ > cols_) {
    throw DimensionError("set_col_block: block " + block.shape_string() + " does not fit " +
                         shape_string());
  }
  for (std::size_t r = 0; r < rows_; ++r)
    std::copy_n(block.data_.begin() + static_cast<std::ptrdiff_t>(r * block.cols_), block.cols_,
                data_.begin() + static_cast<std::ptrdiff_t>(r * cols_ + first));
}

Matrix& Matrix::operator+=(const Matrix& other) {
  add_scaled(other, 1.0);
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  add_scaled(other, -1.0);
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

void Matrix::add_scaled(const Matrix& other, double s) {
  if (!same_shape(other)) {
    throw DimensionError("shape mismatch: " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.all_finite()) throw NumericalError(what + ": produced non-finite values");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  require_finite(c, "matmul");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape_string() + " by " +
                         b.shape_string());
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix c(n, m);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a.row(p).data();
    const double* bp = b.row(p).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
  require_finite(c, "matmul_tn");
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " +
                         b.shape_string());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  require_finite(c, "matmul_nt");
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

EigenDecomposition sym_eigen(const Matrix& m, double tol) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionError("sym_eigen: matrix " + m.shape_string() + " is not square");
  require_finite(m, "sym_eigen input");
  const double scale = std::max(1.0, m.max_abs());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) {
        std::ostringstream msg;
        msg << "sym_eigen: matrix not symmetric at (" << i << "," << j << "): " << m(i, j)
            << " vs " << m(j, i);
        throw NumericalError(msg.str());
      }

  Matrix a = m;
  Matrix v = Matrix::identity(n);
  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps) throw NumericalError("sym_eigen: Jacobi sweeps did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  require_finite(out.vectors, "sym_eigen");
  return out;
}

Matrix cholesky(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionError("cholesky: matrix " + m.shape_string() + " is not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 1e-12)) {
      std::ostringstream msg;
      msg << "cholesky: matrix is not positive definite (pivot " << j << " = " << d << ")";
      throw NumericalError(msg.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
  if (m.rows() != rhs.rows()) {
    throw DimensionError("solve_spd: system " + m.shape_string() + " with rhs " + rhs.shape_string());
  }
  const Matrix l = cholesky(m);
  const std::size_t n = m.rows();
  Matrix x = rhs;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  require_finite(x, "solve_spd");
  return x;
}

double determinant3(const Matrix& m) {
  if (m.rows() != 3 || m.cols() != 3) throw DimensionError("determinant3: expected 3x3, got " + m.shape_string());
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

Matrix SimilarityTransform::apply(const Matrix& points) const {
  if (points.cols() != 3) throw DimensionError("SimilarityTransform::apply: expected Nx3, got " + points.shape_string());
  Matrix out = matmul_nt(points, rotation);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t c = 0; c < 3; ++c) out(i, c) = scale * out(i, c) + translation[c];
  return out;
}

namespace {

std::array<double, 3> centroid(const Matrix& p) {
  std::array<double, 3> c{};
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) c[k] += p(i, k);
  for (double& v : c) v /= static_cast<double>(p.rows());
  return c;
}

Matrix centered(const Matrix& p, const std::array<double, 3>& c) {
  Matrix out = p;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) out(i, k) -= c[k];
  return out;
}

std::array<double, 3> normalized(std::array<double, 3> v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

SimilarityTransform kabsch_align(const Matrix& p, const Matrix& q, bool with_scale) {
  if (p.cols() != 3 || !p.same_shape(q)) {
    throw DimensionError("kabsch_align: expected matching Nx3 inputs, got " + p.shape_string() + " and " +
                         q.shape_string());
  }
  if (p.rows() < 3) throw DimensionError("kabsch_align: need at least 3 points, got " + std::to_string(p.rows()));

  const auto pc = centroid(p), qc = centroid(q);
  const Matrix pp = centered(p, pc), qq = centered(q, qc);

  // Cross-covariance H = Pᵀ Q = U Σ Vᵀ; the optimal rotation is V D Uᵀ.
  // V and Σ² come from the eigendecomposition of HᵀH.
  const Matrix h = matmul_tn(pp, qq);
  const auto eig = sym_eigen(matmul_tn(h, h));
  const double scale_ref = std::max(eig.values[2], 0.0);
  std::array<double, 3> sigma{};
  Matrix v(3, 3), u(3, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t src = 2 - k;  // descending order
    sigma[k] = std::sqrt(std::max(eig.values[src], 0.0));
    for (std::size_t r = 0; r < 3; ++r) v(r, k) = eig.vectors(r, src);
  }
  if (scale_ref <= 0.0 || sigma[1] <= 1e-9 * sigma[0]) {
    throw NumericalError("kabsch_align: rank-deficient cross-covariance (collinear or coincident points)");
  }

  auto h_times_v = [&](std::size_t k) {
    std::array<double, 3> out{};
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) out[r] += h(r, c) * v(c, k);
    return out;
  };
  const auto u0 = normalized(h_times_v(0));
  auto u1 = h_times_v(1);
  const double proj = u1[0] * u0[0] + u1[1] * u0[1] + u1[2] * u0[2];
  for (std::size_t r = 0; r < 3; ++r) u1[r] -= proj * u0[r];
  u1 = normalized(u1);
  std::array<double, 3> u2{u0[1] * u1[2] - u0[2] * u1[1], u0[2] * u1[0] - u0[0] * u1[2],
                           u0[0] * u1[1] - u0[1] * u1[0]};
  if (sigma[2] > 1e-9 * sigma[0]) {
    const auto hv2 = h_times_v(2);
    if (hv2[0] * u2[0] + hv2[1] * u2[1] + hv2[2] * u2[2] < 0.0)
      for (double& x : u2) x = -x;
  }
  for (std::size_t r = 0; r < 3; ++r) {
    u(r, 0) = u0[r];
    u(r, 1) = u1[r];
    u(r, 2) = u2[r];
  }

  const double d = determinant3(v) * determinant3(u) < 0.0 ? -1.0 : 1.0;
  Matrix vd = v;
  for (std::size_t r = 0; r < 3; ++r) vd(r, 2) *= d;

  SimilarityTransform out;
  out.rotation = matmul_nt(vd, u);
  if (with_scale) {
    const double p_norm2 = pp.frobenius_norm() * pp.frobenius_norm();
    out.scale = (sigma[0] + sigma[1] + d * sigma[2]) / p_norm2;
  }
  for (std::size_t r = 0; r < 3; ++r) {
    double rp = 0.0;
    for (std::size_t c = 0; c < 3; ++c) rp += out.rotation(r, c) * pc[c];
    out.translation[r] = qc[r] - out.scale * rp;
  }
  require_finite(out.rotation, "kabsch_align");
  return out;
}

}  // namespace hoif
