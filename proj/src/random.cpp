#include "matnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace matnet {

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  std::uint64_t s = 0;
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  s = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return Rng(s);
}

double Rng::uniform() {
  // 53 random bits mapped to the open interval (0, 1)
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) return std::exp(log_gamma_unit(shape)) / rate;
  // Marsaglia & Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::log_gamma_unit(double shape) {
  if (shape >= 1.0) return std::log(gamma(shape, 1.0));
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  return std::log(gamma(shape + 1.0, 1.0)) + std::log(uniform()) / shape;
}

double Rng::truncated_gamma(double shape, double scale, double lower) {
  namespace bm = boost::math;
  const double x0 = lower / scale;
  const double tail = bm::gamma_q(shape, x0);
  if (tail > 0.05) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double x = gamma(shape, 1.0 / scale);
      if (x > lower) return x;
    }
  }
  if (tail <= std::numeric_limits<double>::min()) return lower * (1.0 + 1e-12);
  const double u = uniform() * tail;
  const double x = scale * bm::gamma_q_inv(shape, u);
  return std::max(x, std::nextafter(lower, std::numeric_limits<double>::infinity()));
}

std::vector<double> Rng::dirichlet(std::span<const double> concentration) {
  std::vector<double> logs(concentration.size());
  for (std::size_t m = 0; m < concentration.size(); ++m) logs[m] = log_gamma_unit(concentration[m]);
  const double mx = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& v : logs) {
    v = std::exp(v - mx);
    total += v;
  }
  // Tiny concentrations can underflow a weight to exactly 0; keep every weight
  // strictly positive so log-weights stay finite downstream.
  double floored = 0.0;
  for (double& v : logs) {
    v = std::max(v / total, std::numeric_limits<double>::min());
    floored += v;
  }
  for (double& v : logs) v /= floored;
  return logs;
}

int Rng::categorical_log(std::span<const double> log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(mx)) throw std::domain_error("categorical_log: no finite weight");
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - mx);
  double u = uniform() * total;
  for (std::size_t m = 0; m < log_weights.size(); ++m) {
    u -= std::exp(log_weights[m] - mx);
    if (u <= 0.0) return static_cast<int>(m);
  }
  // rounding left a sliver; return the last component with positive weight
  for (std::size_t m = log_weights.size(); m-- > 0;)
    if (std::isfinite(log_weights[m])) return static_cast<int>(m);
  return static_cast<int>(log_weights.size()) - 1;
}

}  // namespace matnet
