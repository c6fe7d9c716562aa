#include "matnet/kernels.hpp"

namespace matnet::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::Scalar, dot_scalar, sum_sq_scalar, axpy_scalar, sum_sq_diff_scalar};
  return t;
}

}  // namespace matnet::kernels::detail
