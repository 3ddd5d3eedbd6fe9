// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "mmcd/error.hpp"
#include "mmcd/simd.hpp"

namespace mmcd::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) {
  return isa == Isa::Avx2 ? avx2_kernels() : &scalar_kernels();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("MMCD_KERNELS"); env != nullptr && *env != '\0') {
    const Isa requested = parse_isa(env);
    if (!isa_supported(requested)) {
      fail(ErrorCode::InvalidConfig,
           "MMCD_KERNELS=" + std::string(env) + " is not supported on this CPU");
    }
    return table_for(requested);
  }
  return table_for(detect_isa());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return avx2_kernels() != nullptr && cpu_has_avx2_fma();
  }
  return false;
}

Isa detect_isa() { return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    fail(ErrorCode::InvalidConfig, "kernel ISA " + std::string(to_string(isa)) + " unsupported");
  }
  active_slot().store(table_for(isa));
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

std::string_view to_string(Isa isa) {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  fail(ErrorCode::InvalidConfig, "unknown kernel ISA '" + std::string(name) + "'");
}

}  // namespace mmcd::simd
