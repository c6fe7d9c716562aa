#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "matnet/matnorm.hpp"
#include "matnet/prior.hpp"
#include "matnet/random.hpp"

namespace matnet {

/// One layer's observations laid out for the sampler's inner loops: each
/// off-diagonal cell (i, j) owns a contiguous length-T series, cells of the
/// same column are adjacent, and factors are stored factor-major.
class LayerData {
 public:
  LayerData(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& factors);

  int n() const { return n_; }
  int T() const { return T_; }
  int R() const { return R_; }

  std::span<const double> cell(int i, int j) const {
    return {y_.data() + (static_cast<std::size_t>(j) * n_ + i) * T_, static_cast<std::size_t>(T_)};
  }
  std::span<const double> factor(int r) const {
    return {f_.data() + static_cast<std::size_t>(r) * T_, static_cast<std::size_t>(T_)};
  }
  double factor_sq(int r) const { return fsq_[r]; }

 private:
  int n_, T_, R_;
  std::vector<double> y_;
  std::vector<double> f_;
  std::vector<double> fsq_;
};

/// Full Gibbs state of one layer.
struct LayerState {
  std::vector<Eigen::MatrixXd> B;  // R coefficient matrices, zero diagonal
  Eigen::VectorXd sigma2;          // column noise variances
  LayerMixture mix;
  LayerAllocations alloc;
  Eigen::VectorXd rwmh_scale;      // proposal step for log(alpha_m - 1), per component
  Eigen::VectorXi alpha_accepted;  // post-burn-in counters
  Eigen::VectorXi alpha_proposed;

  static LayerState from_prior(const PriorConfig& cfg, int n, int R, Rng& rng, double initial_scale = 1.0);
  bool valid() const;
};

struct ChainState {
  Layered<LayerState> layers;
  int iteration = 0;

  ModelParams params() const;
  MixtureParams mixture() const;
  Allocations allocations() const;
};

struct SamplerConfig {
  int n_iter = 5000;
  int n_burn = 2500;
  int thin = 5;
  std::uint64_t seed = 1;
  double rwmh_target_accept = 0.44;
  double rwmh_adapt_rate = 1.0;
  double rwmh_initial_scale = 1.0;
  int threads = 1;

  void validate() const;
  int saved_draws() const { return (n_iter - n_burn) / thin; }
};

/// Controls the Robbins-Monro step for the alpha proposals within a sweep.
struct AlphaAdaptation {
  bool adapt = false;     // update rwmh_scale after each proposal
  bool record = false;    // count proposals/acceptances
  int iteration = 1;      // 1-based sweep counter for the step size t^-0.6
  double target = 0.44;
  double rate = 1.0;
};

// Full conditional updates, in the order a sweep applies them.
void update_b(LayerState& s, const LayerData& data, Rng& rng);
void update_sigma2(LayerState& s, const LayerData& data, Rng& rng);
void update_allocations(LayerState& s, Rng& rng);
void update_weights(LayerState& s, const PriorConfig& cfg, Rng& rng);
void update_mu(LayerState& s, const PriorConfig& cfg, Rng& rng);
void update_gamma2(LayerState& s, const PriorConfig& cfg, Rng& rng);
void update_alpha(LayerState& s, const PriorConfig& cfg, const AlphaAdaptation& adapt, Rng& rng);
void update_beta(LayerState& s, const PriorConfig& cfg, Rng& rng);

void sweep_layer(LayerState& s, const LayerData& data, const PriorConfig& cfg, const AlphaAdaptation& adapt, Rng& rng);

/// Log of the alpha_m full-conditional kernel (unnormalised, on the alpha scale).
double alpha_log_target(double alpha, int m, const LayerState& s, const PriorConfig& cfg);

/// Joint log density of data and all parameters (up to a constant free of the
/// parameters). Finite for every valid state.
double layer_log_posterior(const LayerState& s, const LayerData& data, const PriorConfig& cfg);

/// Draws Y_t for t = 1..T from the observation model with the state's B and sigma2.
std::vector<Eigen::MatrixXd> draw_layer_response(const LayerState& s, const Eigen::MatrixXd& factors, Rng& rng);

/// Saved draws of one layer, each block stored row-per-draw.
struct LayerDraws {
  int n = 0, R = 0, M_b = 0, M_sigma = 0;
  std::size_t saved = 0;
  std::vector<double> B;       // saved x R x n x n (r, i, j) row-major
  std::vector<double> sigma2;  // saved x n
  std::vector<double> p, q, mu, gamma2, alpha, beta;
  std::vector<double> loglik;  // layer log-likelihood at each saved draw
  Eigen::VectorXd alpha_accept_rate;
  Eigen::VectorXd final_rwmh_scale;

  double coef(std::size_t draw, int r, int i, int j) const {
    return B[((draw * R + r) * n + i) * n + j];
  }
  std::vector<double> coef_trace(int r, int i, int j) const;
  void append(const LayerState& s, double loglik_value);
};

struct PosteriorDraws {
  int n = 0, R = 0;
  Layered<LayerDraws> layers;
  std::size_t count() const { return layers[0].saved; }
};

/// Runs one chain: prior initialisation, then n_iter sweeps per layer. Layers
/// are independent sub-chains with their own RNG streams derived from the seed,
/// so the result does not depend on `threads`.
PosteriorDraws run_chain(const MultilayerPanel& panel, const FactorSeries& factors, const PriorConfig& prior,
                         const SamplerConfig& sampler);

/// Runs a single layer; the building block of run_chain.
LayerDraws run_layer_chain(const LayerData& data, const PriorConfig& prior, const SamplerConfig& sampler, Rng& rng);

}  // namespace matnet
