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

#ifndef DOCDS_KERNELS_H_
#define DOCDS_KERNELS_H_

#include <cstddef>
#include <string_view>

namespace docds {
namespace kernels {

// Dense double-precision inner loops used by the encoder. Every kernel has a
// scalar reference implementation; vectorized variants must agree with it up
// to floating-point reassociation.
//
// Matrices are row-major and contiguous. The gemm family accumulates into C:
//   gemm_nn: C[m x n] += A[m x k] * B[k x n]
//   gemm_nt: C[m x n] += A[m x k] * B[n x k]^T
//   gemm_tn: C[m x n] += A[k x m]^T * B[k x n]
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  void (*add)(const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// True when the running CPU (and this build) can execute `isa`.
bool isa_supported(Isa isa);

// Kernel table for a specific ISA. Throws std::runtime_error if unsupported.
const KernelTable& table(Isa isa);

// Currently selected ISA. Chosen once at first use: the widest supported ISA,
// unless the DOCDS_ISA environment variable names another one ("scalar").
Isa active_isa();
const KernelTable& active();

// Overrides the active ISA for the whole process (tests, benchmarks).
void set_active_isa(Isa isa);

namespace scalar {
const KernelTable& table();
}  // namespace scalar

namespace avx2 {
// nullptr when the build has no AVX2 translation unit.
const KernelTable* table();
}  // namespace avx2

}  // namespace kernels
}  // namespace docds

#endif  // DOCDS_KERNELS_H_
