#pragma once

#include <initializer_list>
#include <vector>

namespace fbcap {

// Dense row-major matrix of doubles. Small sizes throughout (state
// dimensions of a few dozen at most), so no blocking or views; all
// operations allocate their result.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-initialized
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);
  static Matrix zeros(int rows, int cols);
  static Matrix diag(const std::vector<double>& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  bool square() const { return rows_ == cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  Matrix transpose() const;
  Matrix operator-() const;
  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s);

  Matrix block(int i0, int j0, int r, int c) const;
  void set_block(int i0, int j0, const Matrix& b);

  double trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  // Largest |a_ij - a_ji|; zero for exactly symmetric matrices.
  double asymmetry() const;
  Matrix symmetrized() const;  // (A + A^T)/2

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, double s);

// [a b] side by side / stacked. Dimensions must agree.
Matrix hcat(const Matrix& a, const Matrix& b);
Matrix vcat(const Matrix& a, const Matrix& b);

}  // namespace fbcap
