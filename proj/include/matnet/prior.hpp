#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "matnet/matnorm.hpp"
#include "matnet/random.hpp"

namespace matnet {

/// Fixed hyperparameters of the hierarchical mixture prior.
///
/// Parameterisations:
///   gamma2_1 ~ Gamma(a0, scale b0)          (a0 = 1: Bayesian-Lasso component)
///   gamma2_m ~ InvGamma(a1, scale b1),      m >= 2
///   mu_m     ~ N(0, s2),                    m >= 2, mu_1 = 0
///   alpha_m  ~ Gamma(a2, scale b2) truncated to (1, inf)
///   beta_m   ~ Gamma(a3, rate b3)
///   p ~ Dir(phi_b), q ~ Dir(phi_sigma)
struct PriorConfig {
  int M_b = 3;
  int M_sigma = 2;
  double phi_b = 1.0;
  double phi_sigma = 1.0;
  double s2 = 10.0;
  double a0 = 1.0, b0 = 1.0;
  double a1 = 2.0, b1 = 2.0;
  double a2 = 2.0, b2 = 2.0;
  double a3 = 2.0, b3 = 2.0;

  /// Throws UsageError on non-positive values or M_b < 2 / M_sigma < 1.
  void validate() const;
};

/// Mixture weights and component parameters of one layer. Component 0 of the
/// coefficient mixture is the zero-mean shrinkage component. Invariants:
/// p and q on the simplex; mu(0) = 0 and mu(1) < ... < mu(M_b-1);
/// alpha > 1 and beta/(alpha-1) strictly increasing.
struct LayerMixture {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  Eigen::VectorXd mu;
  Eigen::VectorXd gamma2;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  int M_b() const { return static_cast<int>(p.size()); }
  int M_sigma() const { return static_cast<int>(q.size()); }
};
using MixtureParams = Layered<LayerMixture>;

inline constexpr int kDiagonalAllocation = -1;

/// Latent component labels (0-based). db[r](i, j) indexes the coefficient
/// mixture, dsigma(j) the variance mixture; the diagonal of db holds
/// kDiagonalAllocation.
struct LayerAllocations {
  std::vector<Eigen::MatrixXi> db;
  Eigen::VectorXi dsigma;
};
using Allocations = Layered<LayerAllocations>;

/// Mean of InvGamma(alpha, beta); the key ordering the variance components.
inline double sigma_component_mean(double alpha, double beta) { return beta / (alpha - 1.0); }

/// log N(b | mu_m, gamma2_m). Throws std::out_of_range for a bad m.
double prior_logpdf_b(double b, int m, const LayerMixture& mix);
/// log of the full coefficient mixture density sum_m p_m N(b | mu_m, gamma2_m).
double mixture_logpdf_b(double b, const LayerMixture& mix);

bool coefficient_order_ok(const LayerMixture& mix);
bool variance_order_ok(const LayerMixture& mix);
/// Checks simplex, positivity and both ordering constraints.
bool mixture_valid(const LayerMixture& mix, double tol = 1e-12);

/// Sort coefficient components 1..M_b-1 by mu and relabel allocations.
void sort_coefficient_components(LayerMixture& mix, LayerAllocations& alloc);
/// Sort variance components by beta/(alpha-1) and relabel allocations.
void sort_variance_components(LayerMixture& mix, LayerAllocations& alloc);

struct LayerPriorDraw {
  LayerMixture mix;
  LayerAllocations alloc;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd sigma2;
};

/// Ancestral draw of one layer's full hierarchy.
LayerPriorDraw draw_layer_prior(const PriorConfig& cfg, int n, int R, Rng& rng);

struct PriorDraw {
  MixtureParams mix;
  Allocations alloc;
  ModelParams params;
};

PriorDraw prior_draw(const PriorConfig& cfg, int n, int R, Rng& rng);

/// Digits of `u` in base `base`, least significant first: the inverse
/// lexicographic order u = sum_l d_l base^l.
std::vector<int> inverse_lexicographic_digits(std::uint64_t u, int base, int length);

struct MarginalDetail {
  double log_marginal = 0.0;
  double weight_sum = 0.0;   // sum of p~ q~ over every enumerated term
  std::uint64_t terms = 0;
};

/// Marginal likelihood of all T slices of one layer given the mixture
/// parameters, with B and sigma2 integrated out, by explicit enumeration of
/// every component combination. Coefficients are integrated analytically; the
/// per-column noise variance by adaptive Gauss-Kronrod quadrature.
MarginalDetail marginal_layer_small(const std::vector<Eigen::MatrixXd>& y, const Eigen::MatrixXd& factors,
                                    const LayerMixture& mix);

/// Sum over layers of marginal_layer_small. Requires n <= 2, R <= 2,
/// M_b <= 2, M_sigma <= 2; throws UsageError otherwise.
double marginal_loglik_small(const MultilayerPanel& panel, const FactorSeries& factors, const MixtureParams& mix,
                             const PriorConfig& cfg);

}  // namespace matnet
