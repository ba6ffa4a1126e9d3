#pragma once

// Raw entry points of the SIMD kernel variants. This header is included by
// translation units compiled with ISA-specific flags, so it must stay free of
// anything that instantiates inline library code.

#include <cstddef>

namespace advml::kernels::avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* w, const double* x, const double* bias, double* out, std::size_t rows,
          std::size_t cols);
void gemv_t_accumulate(const double* w, const double* g, double* out, std::size_t rows,
                       std::size_t cols);
double sum_squares(const double* a, std::size_t n);
double abs_sum(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace advml::kernels::avx2

namespace advml::kernels::neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* w, const double* x, const double* bias, double* out, std::size_t rows,
          std::size_t cols);
void gemv_t_accumulate(const double* w, const double* g, double* out, std::size_t rows,
                       std::size_t cols);
double sum_squares(const double* a, std::size_t n);
double abs_sum(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace advml::kernels::neon
