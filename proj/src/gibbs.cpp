#include "matnet/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "matnet/error.hpp"
#include "matnet/gig.hpp"
#include "matnet/kernels.hpp"

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

double log_gamma_rate(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_dirichlet(const Eigen::VectorXd& w, double phi) {
  const double M = static_cast<double>(w.size());
  double out = std::lgamma(M * phi) - M * std::lgamma(phi);
  for (Eigen::Index m = 0; m < w.size(); ++m) out += (phi - 1.0) * std::log(w(m));
  return out;
}

double component_mean(const LayerMixture& mix, int m) { return m == 0 ? 0.0 : mix.mu(m); }

// e = y_ij - sum_r b_r f_r
void cell_residual(const LayerState& s, const LayerData& data, int i, int j, std::vector<double>& e) {
  const auto y = data.cell(i, j);
  std::copy(y.begin(), y.end(), e.begin());
  for (int r = 0; r < data.R(); ++r) kernels::axpy(-s.B[r](i, j), data.factor(r), e);
}

double layer_loglik_data(const LayerState& s, const LayerData& data) {
  const int n = data.n(), T = data.T();
  std::vector<double> e(T);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cell_residual(s, data, i, j, e);
      ss += kernels::sum_sq(e);
    }
    const double cnt = static_cast<double>(T) * (n - 1);
    total += -0.5 * cnt * (kLog2Pi + std::log(s.sigma2(j))) - 0.5 * ss / s.sigma2(j);
  }
  return total;
}

}  // namespace

LayerData::LayerData(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& factors)
    : n_(slices.empty() ? 0 : static_cast<int>(slices.front().rows())),
      T_(static_cast<int>(slices.size())),
      R_(static_cast<int>(factors.cols())) {
  if (factors.rows() != T_) throw DataError("factor rows do not match the number of panel slices");
  y_.assign(static_cast<std::size_t>(n_) * n_ * T_, 0.0);
  for (int t = 0; t < T_; ++t) {
    if (slices[t].rows() != n_ || slices[t].cols() != n_) throw DataError("panel slice is not n x n");
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i)
        if (i != j) y_[(static_cast<std::size_t>(j) * n_ + i) * T_ + t] = slices[t](i, j);
  }
  for (double v : y_)
    if (!std::isfinite(v)) throw DataError("panel contains non-finite responses");
  f_.resize(static_cast<std::size_t>(R_) * T_);
  fsq_.resize(R_);
  for (int r = 0; r < R_; ++r) {
    for (int t = 0; t < T_; ++t) f_[static_cast<std::size_t>(r) * T_ + t] = factors(t, r);
    fsq_[r] = kernels::sum_sq(factor(r));
  }
}

LayerState LayerState::from_prior(const PriorConfig& cfg, int n, int R, Rng& rng, double initial_scale) {
  auto d = draw_layer_prior(cfg, n, R, rng);
  LayerState s;
  s.B = std::move(d.B);
  s.sigma2 = std::move(d.sigma2);
  s.mix = std::move(d.mix);
  s.alloc = std::move(d.alloc);
  s.rwmh_scale = Eigen::VectorXd::Constant(cfg.M_sigma, initial_scale);
  s.alpha_accepted = Eigen::VectorXi::Zero(cfg.M_sigma);
  s.alpha_proposed = Eigen::VectorXi::Zero(cfg.M_sigma);
  return s;
}

bool LayerState::valid() const {
  if (!mixture_valid(mix, 1e-12)) return false;
  if (!(sigma2.array() > 0.0).all() || !sigma2.allFinite()) return false;
  if (!(rwmh_scale.array() > 0.0).all()) return false;
  const int n = static_cast<int>(sigma2.size());
  for (std::size_t r = 0; r < B.size(); ++r)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int d = alloc.db[r](i, j);
        if (i == j) {
          if (B[r](i, j) != 0.0 || d != kDiagonalAllocation) return false;
        } else if (d < 0 || d >= mix.M_b() || !std::isfinite(B[r](i, j))) {
          return false;
        }
      }
  for (int j = 0; j < n; ++j)
    if (alloc.dsigma(j) < 0 || alloc.dsigma(j) >= mix.M_sigma()) return false;
  return true;
}

ModelParams ChainState::params() const {
  ModelParams p;
  for (int l = 0; l < kNumLayers; ++l) {
    p.B[l] = layers[l].B;
    p.sigma2[l] = layers[l].sigma2;
  }
  return p;
}

MixtureParams ChainState::mixture() const {
  MixtureParams m;
  for (int l = 0; l < kNumLayers; ++l) m[l] = layers[l].mix;
  return m;
}

Allocations ChainState::allocations() const {
  Allocations a;
  for (int l = 0; l < kNumLayers; ++l) a[l] = layers[l].alloc;
  return a;
}

void SamplerConfig::validate() const {
  if (n_iter <= 0 || n_burn < 0 || n_burn >= n_iter) throw UsageError("sampler: need 0 <= burn < iters");
  if (thin < 1) throw UsageError("sampler: thin must be >= 1");
  if (!(rwmh_target_accept > 0.0 && rwmh_target_accept < 1.0)) throw UsageError("sampler: target accept in (0,1)");
  if (!(rwmh_adapt_rate > 0.0)) throw UsageError("sampler: adapt rate must be positive");
  if (!(rwmh_initial_scale > 0.0)) throw UsageError("sampler: initial scale must be positive");
  if (threads < 1) throw UsageError("sampler: threads must be >= 1");
}

void update_b(LayerState& s, const LayerData& data, Rng& rng) {
  const int n = data.n(), R = data.R();
  std::vector<double> e(data.T());
  for (int j = 0; j < n; ++j) {
    const double s2 = s.sigma2(j);
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cell_residual(s, data, i, j, e);
      for (int r = 0; r < R; ++r) {
        const int d = s.alloc.db[r](i, j);
        const double g = s.mix.gamma2(d);
        const double b_old = s.B[r](i, j);
        // sum_t f_rt * eps_t with eps the residual excluding factor r
        const double fe = kernels::dot(data.factor(r), e) + b_old * data.factor_sq(r);
        const double var = 1.0 / (1.0 / g + data.factor_sq(r) / s2);
        const double mean = var * (fe / s2 + component_mean(s.mix, d) / g);
        if (!std::isfinite(mean) || !std::isfinite(var)) throw NumericalError("update_b: non-finite residuals");
        const double b_new = rng.normal(mean, std::sqrt(var));
        kernels::axpy(b_old - b_new, data.factor(r), e);
        s.B[r](i, j) = b_new;
      }
    }
  }
}

void update_sigma2(LayerState& s, const LayerData& data, Rng& rng) {
  const int n = data.n(), T = data.T();
  std::vector<double> e(T);
  for (int j = 0; j < n; ++j) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cell_residual(s, data, i, j, e);
      ss += kernels::sum_sq(e);
    }
    if (!std::isfinite(ss)) throw NumericalError("update_sigma2: non-finite residuals");
    const int d = s.alloc.dsigma(j);
    const double shape = s.mix.alpha(d) + 0.5 * static_cast<double>(T) * (n - 1);
    const double scale = s.mix.beta(d) + 0.5 * ss;
    const double draw = rng.inv_gamma(shape, scale);
    if (!(draw > 0.0) || !std::isfinite(draw)) throw NumericalError("update_sigma2: invalid variance draw");
    s.sigma2(j) = draw;
  }
}

void update_allocations(LayerState& s, Rng& rng) {
  const int Mb = s.mix.M_b(), Ms = s.mix.M_sigma();
  std::vector<double> logp(Mb), sd(Mb), lw(Mb);
  for (int m = 0; m < Mb; ++m) logp[m] = std::log(s.mix.p(m));
  const int n = static_cast<int>(s.sigma2.size());
  for (std::size_t r = 0; r < s.B.size(); ++r)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const double b = s.B[r](i, j);
        for (int m = 0; m < Mb; ++m) lw[m] = logp[m] + log_normal(b, component_mean(s.mix, m), s.mix.gamma2(m));
        s.alloc.db[r](i, j) = rng.categorical_log(lw);
      }
  std::vector<double> lq(Ms);
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < Ms; ++m)
      lq[m] = std::log(s.mix.q(m)) + log_inv_gamma(s.sigma2(j), s.mix.alpha(m), s.mix.beta(m));
    s.alloc.dsigma(j) = rng.categorical_log(lq);
  }
}

void update_weights(LayerState& s, const PriorConfig& cfg, Rng& rng) {
  std::vector<double> cb(s.mix.M_b(), cfg.phi_b);
  for (const auto& d : s.alloc.db)
    for (Eigen::Index k = 0; k < d.size(); ++k)
      if (d.data()[k] >= 0) cb[d.data()[k]] += 1.0;
  std::vector<double> cs(s.mix.M_sigma(), cfg.phi_sigma);
  for (Eigen::Index j = 0; j < s.alloc.dsigma.size(); ++j) cs[s.alloc.dsigma(j)] += 1.0;
  const auto p = rng.dirichlet(cb);
  const auto q = rng.dirichlet(cs);
  s.mix.p = Eigen::Map<const Eigen::VectorXd>(p.data(), s.mix.M_b());
  s.mix.q = Eigen::Map<const Eigen::VectorXd>(q.data(), s.mix.M_sigma());
}

namespace {

struct ComponentStats {
  std::vector<double> count, sum, sum_sq;
};

ComponentStats coefficient_stats(const LayerState& s) {
  const int Mb = s.mix.M_b();
  ComponentStats st{std::vector<double>(Mb, 0.0), std::vector<double>(Mb, 0.0), std::vector<double>(Mb, 0.0)};
  for (std::size_t r = 0; r < s.B.size(); ++r) {
    const auto& d = s.alloc.db[r];
    const auto& b = s.B[r];
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      const int m = d.data()[k];
      if (m < 0) continue;
      const double v = b.data()[k];
      st.count[m] += 1.0;
      st.sum[m] += v;
      st.sum_sq[m] += v * v;
    }
  }
  return st;
}

}  // namespace

void update_mu(LayerState& s, const PriorConfig& cfg, Rng& rng) {
  const auto st = coefficient_stats(s);
  for (int m = 1; m < s.mix.M_b(); ++m) {
    const double g = s.mix.gamma2(m);
    const double var = 1.0 / (1.0 / cfg.s2 + st.count[m] / g);
    const double mean = var * st.sum[m] / g;
    s.mix.mu(m) = rng.normal(mean, std::sqrt(var));
  }
  sort_coefficient_components(s.mix, s.alloc);
}

void update_gamma2(LayerState& s, const PriorConfig& cfg, Rng& rng) {
  const auto st = coefficient_stats(s);
  GigParams gig{cfg.a0 - 0.5 * st.count[0], 2.0 / cfg.b0, st.sum_sq[0]};
  // chi = 0 with lambda <= 0 only if every allocated coefficient is exactly zero
  if (gig.chi <= 0.0 && gig.lambda <= 0.0) gig.chi = std::numeric_limits<double>::min();
  s.mix.gamma2(0) = sample_gig(gig, rng);
  for (int m = 1; m < s.mix.M_b(); ++m) {
    const double mu = s.mix.mu(m);
    // sum (b - mu)^2 = sum b^2 - 2 mu sum b + K mu^2
    const double dev = std::max(0.0, st.sum_sq[m] - 2.0 * mu * st.sum[m] + st.count[m] * mu * mu);
    s.mix.gamma2(m) = rng.inv_gamma(cfg.a1 + 0.5 * st.count[m], cfg.b1 + 0.5 * dev);
  }
}

namespace {

struct VarianceStats {
  std::vector<double> count, sum_log, sum_inv;
};

VarianceStats variance_stats(const LayerState& s) {
  const int Ms = s.mix.M_sigma();
  VarianceStats st{std::vector<double>(Ms, 0.0), std::vector<double>(Ms, 0.0), std::vector<double>(Ms, 0.0)};
  for (Eigen::Index j = 0; j < s.sigma2.size(); ++j) {
    const int m = s.alloc.dsigma(j);
    st.count[m] += 1.0;
    st.sum_log[m] += std::log(s.sigma2(j));
    st.sum_inv[m] += 1.0 / s.sigma2(j);
  }
  return st;
}

double alpha_kernel(double alpha, double beta, double count, double sum_log, const PriorConfig& cfg) {
  if (!(alpha > 1.0)) return -std::numeric_limits<double>::infinity();
  return (cfg.a2 - 1.0) * std::log(alpha) - alpha / cfg.b2 + count * (alpha * std::log(beta) - std::lgamma(alpha)) -
         alpha * sum_log;
}

}  // namespace

double alpha_log_target(double alpha, int m, const LayerState& s, const PriorConfig& cfg) {
  const auto st = variance_stats(s);
  return alpha_kernel(alpha, s.mix.beta(m), st.count[m], st.sum_log[m], cfg);
}

void update_alpha(LayerState& s, const PriorConfig& cfg, const AlphaAdaptation& adapt, Rng& rng) {
  const auto st = variance_stats(s);
  const int Ms = s.mix.M_sigma();
  auto ordered_with = [&](int m, double alpha) {
    const double key = sigma_component_mean(alpha, s.mix.beta(m));
    if (m > 0 && !(sigma_component_mean(s.mix.alpha(m - 1), s.mix.beta(m - 1)) < key)) return false;
    if (m + 1 < Ms && !(key < sigma_component_mean(s.mix.alpha(m + 1), s.mix.beta(m + 1)))) return false;
    return true;
  };
  for (int m = 0; m < Ms; ++m) {
    const double a_cur = s.mix.alpha(m);
    const double u_cur = std::log(a_cur - 1.0);
    const double u_new = u_cur + s.rwmh_scale(m) * rng.normal();
    const double a_new = 1.0 + std::exp(u_new);

    double accept_prob = 0.0;
    if (std::isfinite(a_new) && a_new > 1.0 && ordered_with(m, a_new)) {
      // random walk on u = log(alpha - 1); Jacobian d alpha / du = alpha - 1
      const double lp_new = alpha_kernel(a_new, s.mix.beta(m), st.count[m], st.sum_log[m], cfg) + u_new;
      const double lp_cur = alpha_kernel(a_cur, s.mix.beta(m), st.count[m], st.sum_log[m], cfg) + u_cur;
      const double log_ratio = lp_new - lp_cur;
      if (std::isfinite(log_ratio)) accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    }
    const bool accepted = accept_prob > 0.0 && rng.uniform() < accept_prob;
    if (accepted) s.mix.alpha(m) = a_new;
    if (adapt.record) {
      s.alpha_proposed(m) += 1;
      if (accepted) s.alpha_accepted(m) += 1;
    }
    if (adapt.adapt) {
      const double step = adapt.rate / std::pow(static_cast<double>(std::max(1, adapt.iteration)), 0.6);
      s.rwmh_scale(m) *= std::exp(step * (accept_prob - adapt.target));
      s.rwmh_scale(m) = std::clamp(s.rwmh_scale(m), 1e-6, 1e3);
    }
  }
}

void update_beta(LayerState& s, const PriorConfig& cfg, Rng& rng) {
  const auto st = variance_stats(s);
  for (int m = 0; m < s.mix.M_sigma(); ++m)
    s.mix.beta(m) = rng.gamma(cfg.a3 + s.mix.alpha(m) * st.count[m], cfg.b3 + st.sum_inv[m]);
  sort_variance_components(s.mix, s.alloc);
}

void sweep_layer(LayerState& s, const LayerData& data, const PriorConfig& cfg, const AlphaAdaptation& adapt, Rng& rng) {
  update_b(s, data, rng);
  update_sigma2(s, data, rng);
  update_allocations(s, rng);
  update_weights(s, cfg, rng);
  update_mu(s, cfg, rng);
  update_gamma2(s, cfg, rng);
  update_alpha(s, cfg, adapt, rng);
  update_beta(s, cfg, rng);
}

double layer_log_posterior(const LayerState& s, const LayerData& data, const PriorConfig& cfg) {
  double lp = layer_loglik_data(s, data);
  const auto& mix = s.mix;
  const int n = data.n();
  for (std::size_t r = 0; r < s.B.size(); ++r)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const int d = s.alloc.db[r](i, j);
        lp += std::log(mix.p(d)) + log_normal(s.B[r](i, j), component_mean(mix, d), mix.gamma2(d));
      }
  for (int j = 0; j < n; ++j) {
    const int d = s.alloc.dsigma(j);
    lp += std::log(mix.q(d)) + log_inv_gamma(s.sigma2(j), mix.alpha(d), mix.beta(d));
  }
  lp += log_dirichlet(mix.p, cfg.phi_b) + log_dirichlet(mix.q, cfg.phi_sigma);
  lp += log_gamma_rate(mix.gamma2(0), cfg.a0, 1.0 / cfg.b0);
  for (int m = 1; m < mix.M_b(); ++m)
    lp += log_normal(mix.mu(m), 0.0, cfg.s2) + log_inv_gamma(mix.gamma2(m), cfg.a1, cfg.b1);
  for (int m = 0; m < mix.M_sigma(); ++m)
    lp += log_gamma_rate(mix.alpha(m), cfg.a2, 1.0 / cfg.b2) + log_gamma_rate(mix.beta(m), cfg.a3, cfg.b3);
  return lp;
}

std::vector<Eigen::MatrixXd> draw_layer_response(const LayerState& s, const Eigen::MatrixXd& factors, Rng& rng) {
  const auto n = s.sigma2.size();
  const auto T = factors.rows();
  std::vector<Eigen::MatrixXd> y(T, Eigen::MatrixXd::Zero(n, n));
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sd = std::sqrt(s.sigma2(j));
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        double mean = 0.0;
        for (std::size_t r = 0; r < s.B.size(); ++r) mean += s.B[r](i, j) * factors(t, static_cast<Eigen::Index>(r));
        y[t](i, j) = mean + sd * rng.normal();
      }
    }
  return y;
}

std::vector<double> LayerDraws::coef_trace(int r, int i, int j) const {
  std::vector<double> out(saved);
  for (std::size_t s = 0; s < saved; ++s) out[s] = coef(s, r, i, j);
  return out;
}

void LayerDraws::append(const LayerState& s, double loglik_value) {
  for (int r = 0; r < R; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B.push_back(s.B[r](i, j));
  sigma2.insert(sigma2.end(), s.sigma2.data(), s.sigma2.data() + n);
  auto push = [](std::vector<double>& dst, const Eigen::VectorXd& v) { dst.insert(dst.end(), v.data(), v.data() + v.size()); };
  push(p, s.mix.p);
  push(q, s.mix.q);
  push(mu, s.mix.mu);
  push(gamma2, s.mix.gamma2);
  push(alpha, s.mix.alpha);
  push(beta, s.mix.beta);
  loglik.push_back(loglik_value);
  ++saved;
}

LayerDraws run_layer_chain(const LayerData& data, const PriorConfig& prior, const SamplerConfig& sampler, Rng& rng) {
  prior.validate();
  sampler.validate();
  auto state = LayerState::from_prior(prior, data.n(), data.R(), rng, sampler.rwmh_initial_scale);
  LayerDraws draws;
  draws.n = data.n();
  draws.R = data.R();
  draws.M_b = prior.M_b;
  draws.M_sigma = prior.M_sigma;
  const std::size_t expect = static_cast<std::size_t>(sampler.saved_draws());
  draws.B.reserve(expect * data.R() * data.n() * data.n());

  for (int it = 1; it <= sampler.n_iter; ++it) {
    AlphaAdaptation adapt;
    adapt.adapt = it <= sampler.n_burn;
    adapt.record = it > sampler.n_burn;
    adapt.iteration = it;
    adapt.target = sampler.rwmh_target_accept;
    adapt.rate = sampler.rwmh_adapt_rate;
    sweep_layer(state, data, prior, adapt, rng);
    if (it > sampler.n_burn && (it - sampler.n_burn) % sampler.thin == 0)
      draws.append(state, layer_loglik_data(state, data));
  }
  draws.alpha_accept_rate = Eigen::VectorXd::Zero(prior.M_sigma);
  for (int m = 0; m < prior.M_sigma; ++m)
    if (state.alpha_proposed(m) > 0)
      draws.alpha_accept_rate(m) = static_cast<double>(state.alpha_accepted(m)) / state.alpha_proposed(m);
  draws.final_rwmh_scale = state.rwmh_scale;
  return draws;
}

PosteriorDraws run_chain(const MultilayerPanel& panel, const FactorSeries& factors, const PriorConfig& prior,
                         const SamplerConfig& sampler) {
  panel.validate();
  factors.validate();
  prior.validate();
  sampler.validate();
  if (factors.T() != panel.T) throw DataError("factor series length does not match the panel");

  PosteriorDraws out;
  out.n = panel.n;
  out.R = factors.R();
  auto run_one = [&](int l) {
    const LayerData data(panel.y[l], factors.values);
    Rng rng = Rng::stream(sampler.seed, static_cast<std::uint64_t>(l));
    out.layers[l] = run_layer_chain(data, prior, sampler, rng);
  };

  const int workers = std::min(sampler.threads, kNumLayers);
  if (workers <= 1) {
    for (int l = 0; l < kNumLayers; ++l) run_one(l);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int l = next++; l < kNumLayers; l = next++) {
        try {
          run_one(l);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace matnet
