/*
 * Copyright 2026 The contrast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CONTRAST_MATRIX_HPP_
#define CONTRAST_MATRIX_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace contrast {

// Dense row-major matrix of doubles.
//
// The product kernels below accumulate every output element over the inner
// dimension in ascending order, and each output row depends only on the
// matching input row. Stacking several sequences into one matrix therefore
// produces bit-identical rows to processing them one at a time.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double value);
  void set_zero() { fill(0.0); }

  // Rows [begin, begin + count).
  Matrix slice_rows(std::size_t begin, std::size_t count) const;
  void set_rows(std::size_t begin, const Matrix& block);

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// out += a^T * b
void add_at_b(const Matrix& a, const Matrix& b, Matrix& out);

// Adds the row vector `bias` (1 x cols) to every row of `m`.
void add_row_broadcast(Matrix& m, const Matrix& bias);
// out(0, j) += sum_i m(i, j)
void add_column_sums(const Matrix& m, Matrix& out);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(const Matrix& m);
bool all_finite(const Matrix& m);

}  // namespace contrast

#endif  // CONTRAST_MATRIX_HPP_
