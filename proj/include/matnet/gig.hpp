#pragma once

#include "matnet/random.hpp"

namespace matnet {

/// Generalized Inverse Gaussian law with density proportional to
///   x^(lambda - 1) * exp(-(psi * x + chi / x) / 2),   x > 0.
/// Valid parameter sets: psi > 0 and chi > 0 (any lambda); chi == 0 with
/// lambda > 0 (a Gamma law); psi == 0 with lambda < 0 (an Inverse-Gamma law).
struct GigParams {
  double lambda;
  double psi;
  double chi;
};

bool gig_valid(const GigParams& p);

/// Draws one variate. Uses the ratio-of-uniforms samplers of Hoermann and
/// Leydold (with and without mode shift) and their concave-region rejection
/// sampler for lambda < 1 with small sqrt(psi*chi). Degenerate boundaries
/// (chi or psi equal to zero) are drawn as Gamma / Inverse-Gamma.
double sample_gig(const GigParams& p, Rng& rng);

/// E[X] = sqrt(chi/psi) K_{lambda+1}(w) / K_lambda(w), w = sqrt(psi*chi).
double gig_mean(const GigParams& p);
/// E[X^2] = (chi/psi) K_{lambda+2}(w) / K_lambda(w).
double gig_second_moment(const GigParams& p);

/// Unnormalised log-density.
double gig_log_kernel(const GigParams& p, double x);

}  // namespace matnet
