#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "matnet/kernels.hpp"

using namespace matnet::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

// Summation order differs between variants; bound by the absolute-value sum.
void check_close(double got, double want, double magnitude) {
  CHECK(std::abs(got - want) <= 1e-13 * (1.0 + magnitude));
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::Scalar);
  CHECK(table_for(Isa::Scalar).isa == Isa::Scalar);
  CHECK(isa_name(Isa::Scalar) == "scalar");
}

TEST_CASE("active table is one of the available ones") {
  const auto isas = available_isas();
  const auto act = active().isa;
  CHECK(std::find(isas.begin(), isas.end(), act) != isas.end());
}

TEST_CASE("every variant matches the scalar reference over lengths and offsets") {
  std::mt19937_64 gen(11);
  const auto& ref = table_for(Isa::Scalar);
  for (Isa isa : available_isas()) {
    const auto& k = table_for(isa);
    CAPTURE(isa_name(isa));
    for (std::size_t n = 0; n <= 67; ++n)
      for (std::size_t off = 0; off < 3; ++off) {
        auto a = random_vec(n + off, gen), b = random_vec(n + off, gen);
        const double* pa = a.data() + off;
        const double* pb = b.data() + off;
        double mag = 0.0, mag2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          mag += std::abs(pa[i] * pb[i]);
          mag2 += pa[i] * pa[i] + pb[i] * pb[i];
        }
        check_close(k.dot(pa, pb, n), ref.dot(pa, pb, n), mag);
        check_close(k.sum_sq(pa, n), ref.sum_sq(pa, n), mag2);
        check_close(k.sum_sq_diff(pa, pb, n), ref.sum_sq_diff(pa, pb, n), 2.0 * mag2);

        auto y1 = b, y2 = b;
        ref.axpy(0.37, pa, y1.data() + off, n);
        k.axpy(0.37, pa, y2.data() + off, n);
        for (std::size_t i = 0; i < y1.size(); ++i) check_close(y2[i], y1[i], std::abs(b[i]) + std::abs(a[i]));
      }
  }
}

TEST_CASE("scalar kernels agree with direct loops") {
  const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
  const auto& s = table_for(Isa::Scalar);
  CHECK(s.dot(a.data(), b.data(), 3) == doctest::Approx(12.0));
  CHECK(s.sum_sq(a.data(), 3) == doctest::Approx(14.0));
  CHECK(s.sum_sq_diff(a.data(), b.data(), 3) == doctest::Approx(9.0 + 49.0 + 9.0));
  std::vector<double> y = b;
  s.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{6.0, -1.0, 12.0});
}

TEST_CASE("unknown ISA requests are rejected") {
  const auto isas = available_isas();
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (std::find(isas.begin(), isas.end(), isa) == isas.end()) CHECK_THROWS_AS(table_for(isa), std::invalid_argument);
}
