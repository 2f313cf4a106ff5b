#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sep::kernels {

// Hot linear-algebra loops shared by the resolvent/corrector CG and the
// uniformization series. Each kernel has an OpenMP variant and a serial
// reference; both use the same fixed blocked reduction order, so results are
// bit-identical for any thread count. Tests and the bench tool compare them.

inline constexpr std::int64_t kBlock = 4096;

// y[i] = sum_j rate[k] * (x[col[k]] - x[i]) over the CSR row of i.
// This is the graph Laplacian form used by generators; `scale` multiplies
// the whole row result.
void laplacian_apply(std::span<const std::int64_t> row_ptr,
                     std::span<const std::int32_t> col,
                     std::span<const double> rate, double scale,
                     std::span<const double> x, std::span<double> y);

// y[i] = sum_j p[k] * x[col[k]] + diag[i] * x[i]  (substochastic matvec).
void stochastic_apply(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> p, std::span<const double> diag,
                      std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);
double asum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double beta, std::span<double> y);

namespace serial {
void laplacian_apply(std::span<const std::int64_t> row_ptr,
                     std::span<const std::int32_t> col,
                     std::span<const double> rate, double scale,
                     std::span<const double> x, std::span<double> y);
void stochastic_apply(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> p, std::span<const double> diag,
                      std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double asum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double beta, std::span<double> y);
}  // namespace serial

}  // namespace sep::kernels
