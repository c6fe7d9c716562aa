#include "matnet/gig.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/bessel.hpp>

namespace matnet {
namespace {

constexpr double kZeroTol = 10.0 * std::numeric_limits<double>::epsilon();

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// All three generators draw from the standardised law x^(lambda-1) exp(-omega/2 (x + 1/x))
// with lambda >= 0.

double rou_noshift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double rou_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // roots of the cubic bounding the minimal rectangle
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = (2.0 * (lambda - 1.0) * xm / omega - 1.0);
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double concave_rejection(double lambda, double omega, Rng& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a1 = k0 * x0;
  double k1, a2, k2, a3;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    a2 = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    a3 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a2 = (lambda == 0.0) ? k1 * std::log(2.0 / (omega * omega))
                         : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a3 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double atot = a1 + a2 + a3;

  for (;;) {
    double v = atot * rng.uniform();
    double x, hx;
    if (v <= a1) {
      x = x0 * v / a1;
      hx = k0;
    } else if ((v -= a1) <= a2) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + (lambda / k1 * v), 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= a2;
      const double lo = (x0 > 2.0 / omega) ? x0 : 2.0 / omega;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

bool gig_valid(const GigParams& p) {
  if (!std::isfinite(p.lambda) || !std::isfinite(p.psi) || !std::isfinite(p.chi)) return false;
  if (p.psi < 0.0 || p.chi < 0.0) return false;
  if (p.chi == 0.0 && p.lambda <= 0.0) return false;
  if (p.psi == 0.0 && p.lambda >= 0.0) return false;
  return true;
}

double sample_gig(const GigParams& p, Rng& rng) {
  if (!gig_valid(p)) throw std::domain_error("sample_gig: invalid (lambda, psi, chi)");
  if (p.chi < kZeroTol && p.lambda > 0.0) return rng.gamma(p.lambda, p.psi / 2.0);
  if (p.psi < kZeroTol && p.lambda < 0.0) return 1.0 / rng.gamma(-p.lambda, p.chi / 2.0);

  const double lambda = std::abs(p.lambda);
  const double alpha = std::sqrt(p.chi / p.psi);
  const double omega = std::sqrt(p.psi * p.chi);

  double x;
  if (lambda > 2.0 || omega > 3.0)
    x = rou_shift(lambda, omega, rng);
  else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    x = rou_noshift(lambda, omega, rng);
  else
    x = concave_rejection(lambda, omega, rng);
  // X ~ GIG(-lambda) iff 1/X ~ GIG(lambda) in the standardised form
  return p.lambda < 0.0 ? alpha / x : alpha * x;
}

double gig_mean(const GigParams& p) {
  namespace bm = boost::math;
  if (p.chi == 0.0) return 2.0 * p.lambda / p.psi;
  if (p.psi == 0.0) return (-p.lambda > 1.0) ? (p.chi / 2.0) / (-p.lambda - 1.0) : std::numeric_limits<double>::infinity();
  const double w = std::sqrt(p.psi * p.chi);
  return std::sqrt(p.chi / p.psi) * bm::cyl_bessel_k(p.lambda + 1.0, w) / bm::cyl_bessel_k(p.lambda, w);
}

double gig_second_moment(const GigParams& p) {
  namespace bm = boost::math;
  if (p.chi == 0.0) return p.lambda * (p.lambda + 1.0) * 4.0 / (p.psi * p.psi);
  const double w = std::sqrt(p.psi * p.chi);
  return (p.chi / p.psi) * bm::cyl_bessel_k(p.lambda + 2.0, w) / bm::cyl_bessel_k(p.lambda, w);
}

double gig_log_kernel(const GigParams& p, double x) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (p.lambda - 1.0) * std::log(x) - 0.5 * (p.psi * x + p.chi / x);
}

}  // namespace matnet
