#pragma once

// Dense inner-loop kernels. Every kernel has a scalar reference
// implementation; SIMD variants (AVX2+FMA on x86-64, NEON on AArch64) are
// selected once at runtime from CPU features. Set ADVML_KERNELS to
// "scalar", "avx2", "neon" or "auto" (default) to override the choice.
//
// SIMD variants reassociate reductions, so results agree with the scalar
// kernels to rounding, not bit-for-bit. Within one process the selected
// table never changes, which keeps every caller deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace advml::kernels {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = W x + bias, W is rows x cols row-major; bias may be null
  void (*gemv)(const double* w, const double* x, const double* bias, double* out, std::size_t rows,
               std::size_t cols);
  // out += W^T g
  void (*gemv_t_accumulate)(const double* w, const double* g, double* out, std::size_t rows,
                            std::size_t cols);
  double (*sum_squares)(const double* a, std::size_t n);
  double (*abs_sum)(const double* a, std::size_t n);
  double (*max_abs)(const double* a, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// Null when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

// Table chosen for this process.
const KernelTable& active() noexcept;

// Resolves a table by name ("auto" picks the best supported variant).
// Returns null for unknown or unsupported names.
const KernelTable* table_by_name(std::string_view name) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum_squares(std::span<const double> a) noexcept {
  return active().sum_squares(a.data(), a.size());
}
inline double abs_sum(std::span<const double> a) noexcept {
  return active().abs_sum(a.data(), a.size());
}
inline double max_abs(std::span<const double> a) noexcept {
  return active().max_abs(a.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace advml::kernels
