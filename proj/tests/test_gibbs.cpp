#include <doctest.h>

#include <cmath>

#include "matnet/error.hpp"
#include "matnet/gibbs.hpp"
#include "sampler_checks.hpp"

using namespace matnet;

TEST_CASE("each conditional update reproduces its analytic moments") {
  for (const auto& c : checks::conjugacy_checks(40000, 11)) {
    INFO(c.name << " mean " << c.mean << " want " << c.want_mean << " var " << c.var << " want " << c.want_var);
    CHECK(c.ok(4.5));
  }
}

TEST_CASE("alpha proposal scale adapts toward the target acceptance") {
  const auto r = checks::rwmh_check(5000, 60000, 3);
  INFO("accept " << r.accept << " scale " << r.final_scale << " mean " << r.mean << " want " << r.want);
  CHECK(std::abs(r.accept - 0.44) < 0.1);
  CHECK(std::abs(r.mean - r.want) < 4.0 * r.se);
}

TEST_CASE("sweeps keep the state valid and the posterior finite") {
  auto c = checks::frozen_case(2, 5);
  const LayerData data(c.y, c.f);
  Rng rng(9);
  for (int it = 1; it <= 300; ++it) {
    AlphaAdaptation a{.adapt = it <= 100, .record = it > 100, .iteration = it};
    sweep_layer(c.s, data, c.cfg, a, rng);
    REQUIRE(c.s.valid());
    REQUIRE(std::isfinite(layer_log_posterior(c.s, data, c.cfg)));
    for (int j = 0; j < 3; ++j) REQUIRE(c.s.B[0](j, j) == 0.0);
  }
  CHECK(c.s.alpha_proposed.sum() == 2 * 200);
}

TEST_CASE("unsorted components are rejected by valid()") {
  auto c = checks::frozen_case(2, 5);
  CHECK(c.s.valid());
  std::swap(c.s.mix.mu(0), c.s.mix.mu(1));
  CHECK_FALSE(c.s.valid());
}

namespace {

MultilayerPanel toy_panel(int n, int T, std::uint64_t seed) {
  Rng rng(seed);
  MultilayerPanel p;
  p.n = n;
  p.T = T;
  for (int t = 0; t < T; ++t) p.dates.push_back("d" + std::to_string(t));
  for (int i = 0; i < n; ++i) {
    p.node_labels.push_back("F" + std::to_string(i));
    p.sector_of.push_back(0);
  }
  p.sector_names = {"S1"};
  for (auto& layer : p.y) {
    layer.resize(T);
    for (auto& m : layer) {
      m = Eigen::MatrixXd::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (i != j) m(i, j) = rng.normal();
    }
  }
  return p;
}

FactorSeries toy_factors(int T, int R, std::uint64_t seed) {
  Rng rng(seed);
  FactorSeries f;
  f.values.resize(T, R);
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < R; ++r) f.values(t, r) = rng.normal();
  for (int r = 0; r < R; ++r) f.names.push_back("f" + std::to_string(r));
  for (int t = 0; t < T; ++t) f.dates.push_back("d" + std::to_string(t));
  return f;
}

}  // namespace

TEST_CASE("chains are reproducible and independent of the thread count") {
  const auto panel = toy_panel(4, 25, 1);
  const auto f = toy_factors(25, 2, 2);
  PriorConfig prior;
  SamplerConfig s{.n_iter = 60, .n_burn = 20, .thin = 4, .seed = 77};
  const auto a = run_chain(panel, f, prior, s);
  s.threads = 4;
  const auto b = run_chain(panel, f, prior, s);
  REQUIRE(a.count() == 10);
  for (int l = 0; l < kNumLayers; ++l) {
    CHECK(a.layers[l].B == b.layers[l].B);
    CHECK(a.layers[l].sigma2 == b.layers[l].sigma2);
    CHECK(a.layers[l].alpha == b.layers[l].alpha);
  }
  s.seed = 78;
  const auto c = run_chain(panel, f, prior, s);
  CHECK(a.layers[0].B != c.layers[0].B);
}

TEST_CASE("layers use distinct streams") {
  const auto panel = toy_panel(3, 20, 4);
  auto same = panel;
  for (auto& layer : same.y) layer = panel.y[0];
  const auto f = toy_factors(20, 1, 5);
  const auto d = run_chain(same, f, PriorConfig{}, SamplerConfig{.n_iter = 20, .n_burn = 10, .thin = 1, .seed = 3});
  CHECK(d.layers[0].B != d.layers[1].B);
}

TEST_CASE("saved draws carry the documented shapes") {
  const auto panel = toy_panel(3, 20, 6);
  const auto f = toy_factors(20, 2, 7);
  PriorConfig prior;
  prior.M_b = 3;
  prior.M_sigma = 2;
  const SamplerConfig s{.n_iter = 30, .n_burn = 10, .thin = 2, .seed = 1};
  const auto d = run_chain(panel, f, prior, s);
  const auto& L = d.layers[2];
  CHECK(L.saved == 10);
  CHECK(L.B.size() == 10u * 2 * 9);
  CHECK(L.sigma2.size() == 30u);
  CHECK(L.mu.size() == 30u);
  CHECK(L.alpha.size() == 20u);
  CHECK(L.loglik.size() == 10u);
  for (std::size_t k = 0; k < L.saved; ++k) CHECK(L.coef(k, 1, 2, 2) == 0.0);
  CHECK(L.coef_trace(0, 0, 1).size() == 10u);
}

TEST_CASE("sampler configuration is validated") {
  CHECK_THROWS_AS((SamplerConfig{.n_iter = 10, .n_burn = 10, .thin = 1}.validate()), UsageError);
  CHECK_THROWS_AS((SamplerConfig{.n_iter = 10, .n_burn = 2, .thin = 0}.validate()), UsageError);
  CHECK_NOTHROW((SamplerConfig{.n_iter = 10, .n_burn = 2, .thin = 2}.validate()));
}
