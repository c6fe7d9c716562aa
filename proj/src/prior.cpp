#include "matnet/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "matnet/error.hpp"

namespace matnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

double log_inv_gamma(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

// Stable permutation that sorts positions [first, size) by key.
std::vector<int> sorted_positions(const Eigen::VectorXd& key, int first) {
  std::vector<int> perm(key.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin() + first, perm.end(), [&](int a, int b) { return key(a) < key(b); });
  return perm;
}

Eigen::VectorXd permuted(const Eigen::VectorXd& v, const std::vector<int>& perm) {
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(perm[k]);
  return out;
}

std::vector<int> inverse(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = static_cast<int>(k);
  return inv;
}

bool is_identity(const std::vector<int>& perm) {
  for (std::size_t k = 0; k < perm.size(); ++k)
    if (perm[k] != static_cast<int>(k)) return false;
  return true;
}

}  // namespace

void PriorConfig::validate() const {
  if (M_b < 2) throw UsageError("prior: M_b must be >= 2");
  if (M_sigma < 1) throw UsageError("prior: M_sigma must be >= 1");
  const double vals[] = {phi_b, phi_sigma, s2, a0, b0, a1, b1, a2, b2, a3, b3};
  for (double v : vals)
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("prior: hyperparameters must be finite and positive");
}

double prior_logpdf_b(double b, int m, const LayerMixture& mix) {
  if (m < 0 || m >= mix.M_b()) throw std::out_of_range("prior_logpdf_b: component " + std::to_string(m));
  const double mean = (m == 0) ? 0.0 : mix.mu(m);
  return log_normal(b, mean, mix.gamma2(m));
}

double mixture_logpdf_b(double b, const LayerMixture& mix) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(mix.M_b());
  for (int m = 0; m < mix.M_b(); ++m) {
    lw[m] = std::log(mix.p(m)) + prior_logpdf_b(b, m, mix);
    mx = std::max(mx, lw[m]);
  }
  double s = 0.0;
  for (double v : lw) s += std::exp(v - mx);
  return mx + std::log(s);
}

bool coefficient_order_ok(const LayerMixture& mix) {
  if (mix.mu(0) != 0.0) return false;
  for (int m = 2; m < mix.M_b(); ++m)
    if (!(mix.mu(m - 1) < mix.mu(m))) return false;
  return true;
}

bool variance_order_ok(const LayerMixture& mix) {
  for (int m = 0; m < mix.M_sigma(); ++m)
    if (!(mix.alpha(m) > 1.0)) return false;
  for (int m = 1; m < mix.M_sigma(); ++m)
    if (!(sigma_component_mean(mix.alpha(m - 1), mix.beta(m - 1)) < sigma_component_mean(mix.alpha(m), mix.beta(m))))
      return false;
  return true;
}

bool mixture_valid(const LayerMixture& mix, double tol) {
  auto simplex = [tol](const Eigen::VectorXd& w) {
    return (w.array() >= 0.0).all() && std::abs(w.sum() - 1.0) <= tol;
  };
  return simplex(mix.p) && simplex(mix.q) && (mix.gamma2.array() > 0.0).all() && (mix.beta.array() > 0.0).all() &&
         coefficient_order_ok(mix) && variance_order_ok(mix);
}

void sort_coefficient_components(LayerMixture& mix, LayerAllocations& alloc) {
  const auto perm = sorted_positions(mix.mu, 1);
  if (is_identity(perm)) return;
  mix.p = permuted(mix.p, perm);
  mix.mu = permuted(mix.mu, perm);
  mix.gamma2 = permuted(mix.gamma2, perm);
  const auto inv = inverse(perm);
  for (auto& d : alloc.db)
    for (Eigen::Index k = 0; k < d.size(); ++k)
      if (d.data()[k] >= 0) d.data()[k] = inv[d.data()[k]];
}

void sort_variance_components(LayerMixture& mix, LayerAllocations& alloc) {
  Eigen::VectorXd key(mix.M_sigma());
  for (int m = 0; m < mix.M_sigma(); ++m) key(m) = sigma_component_mean(mix.alpha(m), mix.beta(m));
  const auto perm = sorted_positions(key, 0);
  if (is_identity(perm)) return;
  mix.q = permuted(mix.q, perm);
  mix.alpha = permuted(mix.alpha, perm);
  mix.beta = permuted(mix.beta, perm);
  const auto inv = inverse(perm);
  for (Eigen::Index k = 0; k < alloc.dsigma.size(); ++k) alloc.dsigma(k) = inv[alloc.dsigma(k)];
}

LayerPriorDraw draw_layer_prior(const PriorConfig& cfg, int n, int R, Rng& rng) {
  cfg.validate();
  LayerPriorDraw out;
  auto& mix = out.mix;
  const std::vector<double> phib(cfg.M_b, cfg.phi_b);
  const std::vector<double> phis(cfg.M_sigma, cfg.phi_sigma);
  mix.p = Eigen::Map<const Eigen::VectorXd>(rng.dirichlet(phib).data(), cfg.M_b);
  mix.q = Eigen::Map<const Eigen::VectorXd>(rng.dirichlet(phis).data(), cfg.M_sigma);

  mix.mu.resize(cfg.M_b);
  mix.gamma2.resize(cfg.M_b);
  mix.mu(0) = 0.0;
  mix.gamma2(0) = rng.gamma(cfg.a0, 1.0 / cfg.b0);
  for (int m = 1; m < cfg.M_b; ++m) {
    mix.mu(m) = rng.normal(0.0, std::sqrt(cfg.s2));
    mix.gamma2(m) = rng.inv_gamma(cfg.a1, cfg.b1);
  }
  mix.alpha.resize(cfg.M_sigma);
  mix.beta.resize(cfg.M_sigma);
  for (int m = 0; m < cfg.M_sigma; ++m) {
    mix.alpha(m) = rng.truncated_gamma(cfg.a2, cfg.b2, 1.0);
    mix.beta(m) = rng.gamma(cfg.a3, cfg.b3);
  }

  // Sorting exchangeable components before drawing labels is the same as
  // drawing then relabelling.
  out.alloc.db.assign(R, Eigen::MatrixXi::Constant(n, n, kDiagonalAllocation));
  out.alloc.dsigma = Eigen::VectorXi::Zero(n);
  sort_coefficient_components(mix, out.alloc);
  sort_variance_components(mix, out.alloc);

  std::vector<double> logp(cfg.M_b), logq(cfg.M_sigma);
  for (int m = 0; m < cfg.M_b; ++m) logp[m] = std::log(mix.p(m));
  for (int m = 0; m < cfg.M_sigma; ++m) logq[m] = std::log(mix.q(m));

  out.B.assign(R, Eigen::MatrixXd::Zero(n, n));
  for (int r = 0; r < R; ++r)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const int d = rng.categorical_log(logp);
        out.alloc.db[r](i, j) = d;
        out.B[r](i, j) = rng.normal(mix.mu(d), std::sqrt(mix.gamma2(d)));
      }
  out.sigma2.resize(n);
  for (int j = 0; j < n; ++j) {
    const int d = rng.categorical_log(logq);
    out.alloc.dsigma(j) = d;
    out.sigma2(j) = rng.inv_gamma(mix.alpha(d), mix.beta(d));
  }
  return out;
}

PriorDraw prior_draw(const PriorConfig& cfg, int n, int R, Rng& rng) {
  PriorDraw out;
  for (Layer l : kLayers) {
    auto d = draw_layer_prior(cfg, n, R, rng);
    const int li = index(l);
    out.mix[li] = std::move(d.mix);
    out.alloc[li] = std::move(d.alloc);
    out.params.B[li] = std::move(d.B);
    out.params.sigma2[li] = std::move(d.sigma2);
  }
  return out;
}

std::vector<int> inverse_lexicographic_digits(std::uint64_t u, int base, int length) {
  std::vector<int> digits(length);
  for (int l = 0; l < length; ++l) {
    digits[l] = static_cast<int>(u % static_cast<std::uint64_t>(base));
    u /= static_cast<std::uint64_t>(base);
  }
  return digits;
}

namespace {

// log N_T(y | F mu, F diag(g) F' + s2 I)
double log_cell_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& F, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& g, double s2) {
  const auto T = y.size();
  Eigen::MatrixXd cov = F * g.asDiagonal() * F.transpose();
  cov.diagonal().array() += s2;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd z = llt.matrixL().solve(y - F * mu);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(T) * kLog2Pi + logdet + z.squaredNorm());
}

struct CellTerm {
  Eigen::VectorXd y;
  Eigen::VectorXd mu;
  Eigen::VectorXd g;
};

// log of  int IG(s2 | alpha, beta) prod_cells N_T(y | F mu, F G F' + s2 I) ds2
double log_column_integral(const std::vector<CellTerm>& cells, const Eigen::MatrixXd& F, double alpha, double beta) {
  auto h = [&](double v) {
    const double s2 = std::exp(v);
    double out = log_inv_gamma(s2, alpha, beta) + v;
    for (const auto& c : cells) out += log_cell_marginal(c.y, F, c.mu, c.g, s2);
    return out;
  };
  // locate the peak in log-variance, then integrate the rescaled integrand
  double best_v = 0.0, best_h = -std::numeric_limits<double>::infinity();
  for (double v = -30.0; v <= 30.0; v += 0.25) {
    const double hv = h(v);
    if (hv > best_h) {
      best_h = hv;
      best_v = v;
    }
  }
  double lo = best_v - 0.25, hi = best_v + 0.25;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double a = hi - gr * (hi - lo);
    const double b = lo + gr * (hi - lo);
    if (h(a) > h(b))
      hi = b;
    else
      lo = a;
  }
  const double vstar = 0.5 * (lo + hi);
  const double hstar = h(vstar);
  auto g = [&](double w) {
    const double e = h(vstar + w) - hstar;
    return std::isfinite(e) ? std::exp(e) : 0.0;  // s2 overflow far out in the tails
  };
  double err = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -inf, inf, 15, 1e-10, &err);
  return hstar + std::log(integral);
}

}  // namespace

MarginalDetail marginal_layer_small(const std::vector<Eigen::MatrixXd>& y, const Eigen::MatrixXd& factors,
                                    const LayerMixture& mix) {
  const int T = static_cast<int>(y.size());
  if (T == 0 || factors.rows() != T) throw std::invalid_argument("marginal_layer_small: factor rows != T");
  const int n = static_cast<int>(y.front().rows());
  const int R = static_cast<int>(factors.cols());
  const int Mb = mix.M_b();
  const int Ms = mix.M_sigma();

  // off-diagonal cells in column-major order
  std::vector<std::pair<int, int>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) cells.emplace_back(i, j);
  const int nb_digits = static_cast<int>(cells.size()) * R;

  std::uint64_t n_sigma = 1, n_coef = 1;
  for (int k = 0; k < n; ++k) n_sigma *= static_cast<std::uint64_t>(Ms);
  for (int k = 0; k < nb_digits; ++k) n_coef *= static_cast<std::uint64_t>(Mb);

  std::vector<Eigen::VectorXd> series(cells.size(), Eigen::VectorXd(T));
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int t = 0; t < T; ++t) series[c](t) = y[t](cells[c].first, cells[c].second);

  MarginalDetail out;
  std::vector<double> log_terms;
  log_terms.reserve(n_sigma * n_coef);
  for (std::uint64_t u = 0; u < n_sigma; ++u) {
    const auto sig = inverse_lexicographic_digits(u, Ms, n);
    double log_q = 0.0;
    for (int k = 0; k < n; ++k) log_q += std::log(mix.q(sig[k]));
    for (std::uint64_t v = 0; v < n_coef; ++v) {
      const auto dig = inverse_lexicographic_digits(v, Mb, nb_digits);
      double log_p = 0.0;
      for (int d : dig) log_p += std::log(mix.p(d));
      out.weight_sum += std::exp(log_p + log_q);

      double log_lik = 0.0;
      for (int j = 0; j < n; ++j) {
        std::vector<CellTerm> col;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (cells[c].second != j) continue;
          CellTerm term{series[c], Eigen::VectorXd(R), Eigen::VectorXd(R)};
          for (int r = 0; r < R; ++r) {
            const int d = dig[c * R + r];
            term.mu(r) = (d == 0) ? 0.0 : mix.mu(d);
            term.g(r) = mix.gamma2(d);
          }
          col.push_back(std::move(term));
        }
        log_lik += log_column_integral(col, factors, mix.alpha(sig[j]), mix.beta(sig[j]));
      }
      log_terms.push_back(log_p + log_q + log_lik);
      ++out.terms;
    }
  }
  const double mx = *std::max_element(log_terms.begin(), log_terms.end());
  double s = 0.0;
  for (double lt : log_terms) s += std::exp(lt - mx);
  out.log_marginal = mx + std::log(s);
  return out;
}

double marginal_loglik_small(const MultilayerPanel& panel, const FactorSeries& factors, const MixtureParams& mix,
                             const PriorConfig& cfg) {
  if (panel.n > 2 || factors.R() > 2 || cfg.M_b > 2 || cfg.M_sigma > 2)
    throw UsageError("marginal_loglik_small: enumeration limited to n, R, M_b, M_sigma <= 2");
  panel.validate();
  double total = 0.0;
  for (Layer l : kLayers) total += marginal_layer_small(panel.y[index(l)], factors.values, mix[index(l)]).log_marginal;
  return total;
}

}  // namespace matnet
