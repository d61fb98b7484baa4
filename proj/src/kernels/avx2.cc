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

#include "docds/kernels.h"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define DOCDS_HAVE_AVX2 1
#else
#define DOCDS_HAVE_AVX2 0
#endif

namespace docds {
namespace kernels {
namespace avx2 {

#if DOCDS_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void add(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

double sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

// Shared body of gemm_nn / gemm_tn: a 16-column strip of one C row stays in
// registers while p runs over k. `a_at(i, p)` yields the A coefficient.
template <typename AAt>
inline void gemm_rows(AAt a_at, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + 4);
      __m256d c2 = _mm256_loadu_pd(ci + j + 8);
      __m256d c3 = _mm256_loadu_pd(ci + j + 12);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d va = _mm256_set1_pd(a_at(i, p));
        const double* bp = b + p * n + j;
        c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(a_at(i, p)), _mm256_loadu_pd(b + p * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double acc = ci[j];
      for (std::size_t p = 0; p < k; ++p) acc += a_at(i, p) * b[p * n + j];
      ci[j] = acc;
    }
  }
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  gemm_rows([a, k](std::size_t i, std::size_t p) { return a[i * k + p]; }, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  gemm_rows([a, m](std::size_t i, std::size_t p) { return a[p * m + i]; }, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += ai[p] * b0[p];
        r1 += ai[p] * b1[p];
        r2 += ai[p] * b2[p];
        r3 += ai[p] * b3[p];
      }
      ci[j] += r0;
      ci[j + 1] += r1;
      ci[j + 2] += r2;
      ci[j + 3] += r3;
    }
    for (; j < n; ++j) ci[j] += dot(ai, b + j * k, k);
  }
}

const KernelTable kTable = {dot, axpy, scale, add, sum, gemm_nn, gemm_nt, gemm_tn};

}  // namespace

const KernelTable* table() { return &kTable; }

#else

const KernelTable* table() { return nullptr; }

#endif

}  // namespace avx2
}  // namespace kernels
}  // namespace docds
