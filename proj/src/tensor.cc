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

#include "docds/tensor.h"

#include <algorithm>
#include <cmath>

#include "docds/errors.h"
#include "docds/kernels.h"

namespace docds {

void Matrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_acc(a, b, c);
  return c;
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ContractError("matmul_acc: shape mismatch");
  }
  kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
    throw ContractError("matmul_nt_acc: shape mismatch");
  }
  kernels::active().gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw ContractError("matmul_tn_acc: shape mismatch");
  }
  kernels::active().gemm_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols());
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  const auto& k = kernels::active();
  for (int r = 0; r < m.rows(); ++r) k.add(bias.data(), m.row(r).data(), m.cols());
}

void accumulate_column_sums(const Matrix& g, Matrix& bias_grad) {
  const auto& k = kernels::active();
  for (int r = 0; r < g.rows(); ++r) k.add(g.row(r).data(), bias_grad.data(), g.cols());
}

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.values()) v = dist(rng);
}

}  // namespace docds
