#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace matnet {

/// Owned random stream. Not thread-safe; give each worker its own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent child stream, deterministic in (seed, stream).
  static Rng stream(std::uint64_t seed, std::uint64_t stream);

  double uniform();         // (0, 1), never exactly 0
  double normal();          // N(0, 1)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with shape and *rate*.
  double gamma(double shape, double rate);
  /// log of a Gamma(shape, 1) draw; stable for tiny shapes.
  double log_gamma_unit(double shape);
  /// Inverse-Gamma with shape and scale: 1 / Gamma(shape, rate = scale).
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }
  /// Gamma(shape, scale) truncated to (lower, inf), by inverse CDF.
  double truncated_gamma(double shape, double scale, double lower);
  std::vector<double> dirichlet(std::span<const double> concentration);
  /// Index drawn with probabilities proportional to exp(log_weights).
  int categorical_log(std::span<const double> log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace matnet
