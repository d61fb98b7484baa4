// Copyright 2026 The DocDS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DOCDS_TENSOR_H_
#define DOCDS_TENSOR_H_

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace docds {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void set_zero();
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c += a * b, c += a * b^T, c += a^T * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// Adds `bias` (1 x cols) to every row.
void add_row_bias(Matrix& m, const Matrix& bias);
// bias_grad (1 x cols) += column sums of `g`.
void accumulate_column_sums(const Matrix& g, Matrix& bias_grad);

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng);

}  // namespace docds

#endif  // DOCDS_TENSOR_H_
