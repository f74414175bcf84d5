#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "tilelab/rational.hpp"

namespace tilelab {

// Dense arbitrary-precision integer matrix, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols);
  IntMatrix(std::initializer_list<std::initializer_list<long>> rows);

  static IntMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  BigInt& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const BigInt& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  bool operator==(const IntMatrix& other) const;
  bool operator!=(const IntMatrix& other) const { return !(*this == other); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<BigInt> data_;
};

using SubstitutionMatrix = IntMatrix;

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
IntMatrix transpose(const IntMatrix& a);
BigVector multiply(const IntMatrix& a, const BigVector& v);
RationalVector multiply(const IntMatrix& a, const RationalVector& v);
RationalVector multiply_transposed(const IntMatrix& a, const RationalVector& v);
bool is_strictly_positive(const IntMatrix& a);
Eigen::MatrixXd to_eigen(const IntMatrix& a);

// Coefficients c_0..c_n of det(t I - A), so c_n = 1.
std::vector<BigInt> characteristic_polynomial(const IntMatrix& a);
// Coefficients of prod (t - r_i) for integer roots and extra monic factors.
std::vector<BigInt> polynomial_multiply(const std::vector<BigInt>& p, const std::vector<BigInt>& q);

}  // namespace tilelab
