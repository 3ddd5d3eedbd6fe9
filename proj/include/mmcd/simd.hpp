// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense double-precision kernels behind a runtime dispatch table.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active table is chosen once from CPUID; the
// MMCD_KERNELS environment variable ("scalar" or "avx2") or set_active_isa()
// overrides it. Variants agree to rounding, not bitwise: vector lanes
// reassociate sums and FMA skips an intermediate rounding. Results are
// bit-reproducible for a fixed ISA.
//
// All matrices are row-major and densely packed. The gemm kernels accumulate
// into C.

#include <cstddef>
#include <string_view>

namespace mmcd::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*l1_distance)(const double* x, const double* y, std::size_t n);
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k);
  // C(m x n) += A(k x m)^T * B(k x n)
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k);
  // C(m x n) += A(m x k) * B(n x k)^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k);
};

const KernelTable& scalar_kernels();
// Nullptr when the AVX2 translation unit was not built.
const KernelTable* avx2_kernels();

bool isa_supported(Isa isa);
Isa detect_isa();
Isa active_isa();
// Throws InvalidConfig if the ISA is not supported by this CPU/build.
void set_active_isa(Isa isa);
const KernelTable& active();

std::string_view to_string(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace mmcd::simd
