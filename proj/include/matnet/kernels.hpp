#pragma once

// Dense double-precision inner loops shared by the sampler, the likelihood and
// the Granger regressions. Each routine has a scalar reference implementation
// and optional SIMD variants; one table is picked at startup from the CPU
// features and the MATNET_KERNELS environment variable ("scalar", "avx2",
// "neon"). Variants agree with the scalar reference up to summation order.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace matnet::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum of squares of (a - b)
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

std::string_view isa_name(Isa isa);

/// Tables compiled into this binary and supported by the running CPU.
std::vector<Isa> available_isas();

/// Returns the table for `isa`; throws std::invalid_argument when the ISA is
/// not compiled in or not supported by the CPU.
const KernelTable& table_for(Isa isa);

/// The table selected for this process. Chosen once, on first use.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_sq(std::span<const double> a) { return active().sum_sq(a.data(), a.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

namespace detail {
const KernelTable& scalar_table();
#if defined(MATNET_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(MATNET_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace matnet::kernels
