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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "docds/kernels.h"

namespace docds {
namespace kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("DOCDS_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{nullptr};
  return slot;
}

std::atomic<Isa>& active_isa_slot() {
  static std::atomic<Isa> isa{Isa::kScalar};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return avx2::table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("kernel ISA not supported: " + std::string(isa_name(isa)));
  }
  return isa == Isa::kAvx2 ? *avx2::table() : scalar::table();
}

void set_active_isa(Isa isa) {
  const KernelTable& t = table(isa);
  active_isa_slot().store(isa);
  active_slot().store(&t);
}

Isa active_isa() {
  active();
  return active_isa_slot().load();
}

const KernelTable& active() {
  const KernelTable* t = active_slot().load(std::memory_order_acquire);
  if (t == nullptr) {
    static const bool once = [] {
      set_active_isa(detect());
      return true;
    }();
    (void)once;
    t = active_slot().load(std::memory_order_acquire);
  }
  return *t;
}

}  // namespace kernels
}  // namespace docds
