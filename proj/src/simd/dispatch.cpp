#include <atomic>
#include <cstdlib>
#include <string>

#include "mvsde/error.hpp"
#include "mvsde/simd/kernels.hpp"

namespace mvsde::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(MVSDE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("MVSDE_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw InvalidArgument("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this CPU/build");
  }
  active().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return scalar_kernels();
    case Isa::Avx2:
#if defined(MVSDE_HAVE_AVX2)
      if (cpu_has_avx2()) return avx2_kernels();
#endif
      break;
  }
  throw InvalidArgument("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this CPU/build");
}

}  // namespace mvsde::simd
