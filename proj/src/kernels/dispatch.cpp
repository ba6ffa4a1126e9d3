#include <cstdlib>
#include <string_view>

#include "advml/kernels.hpp"
#include "variants.hpp"

namespace advml::kernels {
namespace {

#if defined(ADVML_HAVE_AVX2)
constexpr KernelTable kAvx2Table{
    "avx2",          avx2::dot,         avx2::axpy,    avx2::gemv,
    avx2::gemv_t_accumulate, avx2::sum_squares, avx2::abs_sum, avx2::max_abs,
    avx2::squared_distance,
};

bool cpu_has_avx2() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(ADVML_HAVE_NEON)
constexpr KernelTable kNeonTable{
    "neon",          neon::dot,         neon::axpy,    neon::gemv,
    neon::gemv_t_accumulate, neon::sum_squares, neon::abs_sum, neon::max_abs,
    neon::squared_distance,
};
#endif

const KernelTable& best_supported() noexcept {
  if (const auto* t = avx2_table()) return *t;
  if (const auto* t = neon_table()) return *t;
  return scalar_table();
}

const KernelTable& select_from_environment() noexcept {
  const char* env = std::getenv("ADVML_KERNELS");
  if (env != nullptr) {
    if (const auto* t = table_by_name(env)) return *t;
  }
  return best_supported();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
#if defined(ADVML_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() noexcept {
#if defined(ADVML_HAVE_NEON)
  return &kNeonTable;
#else
  return nullptr;
#endif
}

const KernelTable* table_by_name(std::string_view name) noexcept {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") return avx2_table();
  if (name == "neon") return neon_table();
  if (name == "auto" || name.empty()) return &best_supported();
  return nullptr;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select_from_environment();
  return table;
}

}  // namespace advml::kernels
