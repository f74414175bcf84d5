#include "tilelab/matrix.hpp"

#include "tilelab/errors.hpp"

namespace tilelab {

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, BigInt(0)) {}

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<long>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw StructuralError("ragged matrix literal");
    for (long v : row) data_.emplace_back(v);
  }
}

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1;
  return out;
}

bool IntMatrix::operator==(const IntMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw StructuralError("matrix dimension mismatch");
  IntMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    }
  }
  return out;
}

IntMatrix transpose(const IntMatrix& a) {
  IntMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

BigVector multiply(const IntMatrix& a, const BigVector& v) {
  if (a.cols() != v.size()) throw StructuralError("matrix-vector dimension mismatch");
  BigVector out(a.rows(), BigInt(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0) out[i] += a(i, j) * v[j];
  return out;
}

RationalVector multiply(const IntMatrix& a, const RationalVector& v) {
  if (a.cols() != v.size()) throw StructuralError("matrix-vector dimension mismatch");
  RationalVector out(a.rows(), Rational(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0) out[i] += Rational(a(i, j)) * v[j];
  return out;
}

RationalVector multiply_transposed(const IntMatrix& a, const RationalVector& v) {
  if (a.rows() != v.size()) throw StructuralError("matrix-vector dimension mismatch");
  RationalVector out(a.cols(), Rational(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0) out[j] += Rational(a(i, j)) * v[i];
  return out;
}

bool is_strictly_positive(const IntMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) <= 0) return false;
  return true;
}

Eigen::MatrixXd to_eigen(const IntMatrix& a) {
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j).get_d();
  return out;
}

// Faddeev-LeVerrier over the rationals.
std::vector<BigInt> characteristic_polynomial(const IntMatrix& a) {
  if (a.rows() != a.cols()) throw StructuralError("characteristic polynomial of non-square matrix");
  const std::size_t n = a.rows();
  std::vector<Rational> coeff(n + 1, Rational(0));
  coeff[n] = 1;
  std::vector<Rational> m(n * n, Rational(0));
  std::vector<Rational> am(n * n, Rational(0));
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Rational s = 0;
        for (std::size_t l = 0; l < n; ++l) s += Rational(a(i, l)) * m[l * n + j];
        am[i * n + j] = s;
      }
    }
    for (std::size_t i = 0; i < n * n; ++i) m[i] = am[i];
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] += coeff[n - k + 1];
    Rational trace = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n; ++l) trace += Rational(a(i, l)) * m[l * n + i];
    }
    coeff[n - k] = -trace / static_cast<long>(k);
  }
  std::vector<BigInt> out;
  out.reserve(n + 1);
  for (auto& c : coeff) {
    c.canonicalize();
    if (c.get_den() != 1) throw NumericError("non-integral characteristic polynomial coefficient");
    out.emplace_back(c.get_num());
  }
  return out;
}

std::vector<BigInt> polynomial_multiply(const std::vector<BigInt>& p, const std::vector<BigInt>& q) {
  if (p.empty() || q.empty()) return {};
  std::vector<BigInt> out(p.size() + q.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
  return out;
}

}  // namespace tilelab
