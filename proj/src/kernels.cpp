#include "sepsim/kernels.hpp"

#include <cmath>
#include <cstdlib>

namespace sep::kernels {

namespace {

inline std::int64_t num_blocks(std::int64_t n) {
  return (n + kBlock - 1) / kBlock;
}

// Per-block partial sums combined in fixed (block-index) order; the result
// does not depend on how blocks are assigned to threads.
template <class F>
double blocked_reduce(std::int64_t n, F&& block_sum) {
  std::int64_t nb = num_blocks(n);
  if (nb <= 1) return n > 0 ? block_sum(0, n) : 0.0;
  std::vector<double> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) {
    std::int64_t lo = b * kBlock;
    std::int64_t hi = std::min(lo + kBlock, n);
    partial[static_cast<std::size_t>(b)] = block_sum(lo, hi);
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

template <class F>
double blocked_reduce_serial(std::int64_t n, F&& block_sum) {
  std::int64_t nb = num_blocks(n);
  if (nb <= 1) return n > 0 ? block_sum(0, n) : 0.0;
  std::vector<double> partial(static_cast<std::size_t>(nb));
  for (std::int64_t b = 0; b < nb; ++b) {
    std::int64_t lo = b * kBlock;
    std::int64_t hi = std::min(lo + kBlock, n);
    partial[static_cast<std::size_t>(b)] = block_sum(lo, hi);
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

inline double lap_row(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> rate,
                      std::span<const double> x, std::int64_t i) {
  double xi = x[static_cast<std::size_t>(i)];
  double acc = 0.0;
  for (std::int64_t k = row_ptr[static_cast<std::size_t>(i)];
       k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
    acc += rate[static_cast<std::size_t>(k)] *
           (x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])] - xi);
  }
  return acc;
}

inline double sto_row(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> p, std::span<const double> diag,
                      std::span<const double> x, std::int64_t i) {
  double acc = diag[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  for (std::int64_t k = row_ptr[static_cast<std::size_t>(i)];
       k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
    acc += p[static_cast<std::size_t>(k)] *
           x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
  }
  return acc;
}

}  // namespace

void laplacian_apply(std::span<const std::int64_t> row_ptr,
                     std::span<const std::int32_t> col,
                     std::span<const double> rate, double scale,
                     std::span<const double> x, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = scale * lap_row(row_ptr, col, rate, x, i);
}

void stochastic_apply(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> p, std::span<const double> diag,
                      std::span<const double> x, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = sto_row(row_ptr, col, p, diag, x, i);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_reduce(static_cast<std::int64_t>(a.size()),
                        [&](std::int64_t lo, std::int64_t hi) {
                          double s = 0.0;
                          for (std::int64_t i = lo; i < hi; ++i)
                            s += a[static_cast<std::size_t>(i)] *
                                 b[static_cast<std::size_t>(i)];
                          return s;
                        });
}

double asum(std::span<const double> a) {
  return blocked_reduce(static_cast<std::int64_t>(a.size()),
                        [&](std::int64_t lo, std::int64_t hi) {
                          double s = 0.0;
                          for (std::int64_t i = lo; i < hi; ++i)
                            s += std::abs(a[static_cast<std::size_t>(i)]);
                          return s;
                        });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
}

void xpay(std::span<const double> x, double beta, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] =
        x[static_cast<std::size_t>(i)] + beta * y[static_cast<std::size_t>(i)];
}

namespace serial {

void laplacian_apply(std::span<const std::int64_t> row_ptr,
                     std::span<const std::int32_t> col,
                     std::span<const double> rate, double scale,
                     std::span<const double> x, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = scale * lap_row(row_ptr, col, rate, x, i);
}

void stochastic_apply(std::span<const std::int64_t> row_ptr,
                      std::span<const std::int32_t> col,
                      std::span<const double> p, std::span<const double> diag,
                      std::span<const double> x, std::span<double> y) {
  std::int64_t n = static_cast<std::int64_t>(y.size());
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = sto_row(row_ptr, col, p, diag, x, i);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_reduce_serial(static_cast<std::int64_t>(a.size()),
                               [&](std::int64_t lo, std::int64_t hi) {
                                 double s = 0.0;
                                 for (std::int64_t i = lo; i < hi; ++i)
                                   s += a[static_cast<std::size_t>(i)] *
                                        b[static_cast<std::size_t>(i)];
                                 return s;
                               });
}

double asum(std::span<const double> a) {
  return blocked_reduce_serial(static_cast<std::int64_t>(a.size()),
                               [&](std::int64_t lo, std::int64_t hi) {
                                 double s = 0.0;
                                 for (std::int64_t i = lo; i < hi; ++i)
                                   s += std::abs(a[static_cast<std::size_t>(i)]);
                                 return s;
                               });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void xpay(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + beta * y[i];
}

}  // namespace serial

}  // namespace sep::kernels
