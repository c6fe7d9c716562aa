#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matnet/analytics.hpp"
#include "matnet/error.hpp"
#include "matnet/random.hpp"
#include "oracles.hpp"

using namespace matnet;

namespace {

// Shortest window width over all windows of k order statistics.
double shortest_width(const std::vector<double>& s, std::size_t k) {
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + k <= s.size(); ++a) w = std::min(w, s[a + k - 1] - s[a]);
  return w;
}

PosteriorSummary random_summary(int n, int R, Rng& rng) {
  PosteriorSummary s(n, R, 0.95);
  for (Layer l : kLayers)
    for (int r = 0; r < R; ++r)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          auto& c = s.at(l, r, i, j);
          c.mean = rng.normal();
          c.significant = rng.uniform() < 0.4;
          c.hpd = c.significant ? (c.mean > 0 ? Interval{0.1, 2 * c.mean} : Interval{2 * c.mean, -0.1}) : Interval{-1, 1};
        }
  return s;
}

Eigen::MatrixXi random_digraph(int n, double p, Rng& rng) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < p) a(i, j) = 1;
  return a;
}

}  // namespace

TEST_CASE("HPDI on small samples") {
  const std::vector<double> grid{-2, -1, 0, 1, 2};
  const auto iv = hpdi(grid, 0.6, 1);
  CHECK(iv.lower == -1.0);
  CHECK(iv.upper == 1.0);
  const std::vector<double> flat(30, 2.5);
  const auto c = hpdi(flat, 0.95);
  CHECK(c.lower == 2.5);
  CHECK(c.upper == 2.5);
  CHECK_THROWS_AS(hpdi(grid, 0.6), DataError);
  CHECK_THROWS_AS(hpdi(flat, 1.0), UsageError);
}

TEST_CASE("HPDI of normal draws approaches the central interval") {
  Rng rng(1);
  std::vector<double> x(100000);
  for (double& v : x) v = rng.normal();
  std::sort(x.begin(), x.end());
  const auto iv = hpdi(x, 0.95);
  CHECK(std::abs(iv.lower + 1.959964) < 0.05);
  CHECK(std::abs(iv.upper - 1.959964) < 0.05);
}

TEST_CASE("HPDI is a shortest covering window") {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t N = 20 + static_cast<std::size_t>(rng.uniform() * 200);
    std::vector<double> x(N);
    for (double& v : x) v = rep % 2 ? std::exp(rng.normal()) : std::round(4 * rng.normal()) / 4;
    std::sort(x.begin(), x.end());
    const double level = 0.5 + 0.49 * rng.uniform();
    const auto k = static_cast<std::size_t>(std::ceil(level * N - 1e-9));
    const auto iv = hpdi(x, level);
    CHECK(iv.upper - iv.lower == shortest_width(x, k));
    const auto inside = std::count_if(x.begin(), x.end(), [&](double v) { return v >= iv.lower && v <= iv.upper; });
    CHECK(static_cast<std::size_t>(inside) >= k);
  }
}

TEST_CASE("significance follows the HPDI") {
  Rng rng(3);
  std::vector<double> pos(200), sym(200);
  for (double& v : pos) v = 0.5 + rng.uniform();
  for (std::size_t k = 0; k < sym.size(); ++k) sym[k] = (k % 2 ? 1.0 : -1.0) * rng.uniform();
  const auto a = summarize_draws(pos, 0.95);
  CHECK(a.significant);
  CHECK(a.mean > 0.0);
  CHECK_FALSE(summarize_draws(sym, 0.95).significant);
}

TEST_CASE("widening the level never creates significance") {
  Rng rng(4);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> d(400);
    const double mu = 0.3 * rng.normal();
    for (double& v : d) v = mu + 0.15 * rng.normal();
    bool prev = true;
    for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
      const bool s = summarize_draws(d, level).significant;
      CHECK((prev || !s));
      prev = s;
    }
  }
}

TEST_CASE("significance_filter summarises every off-diagonal coefficient") {
  PosteriorDraws d;
  d.n = 2;
  d.R = 1;
  Rng rng(5);
  for (auto& L : d.layers) {
    L.n = 2;
    L.R = 1;
    L.saved = 100;
    for (std::size_t k = 0; k < 100; ++k) {
      L.B.push_back(0.0);
      L.B.push_back(1.0 + 0.1 * rng.normal());  // (0, 1): clearly positive
      L.B.push_back(0.1 * rng.normal());        // (1, 0): around zero
      L.B.push_back(0.0);
    }
  }
  const auto s = significance_filter(d, 0.95);
  for (Layer l : kLayers) {
    CHECK(s.at(l, 0, 0, 1).significant);
    CHECK_FALSE(s.at(l, 0, 1, 0).significant);
    CHECK_FALSE(s.at(l, 0, 0, 0).significant);
    CHECK(s.at(l, 0, 0, 1).mean == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("sector net effects") {
  PosteriorSummary empty(3, 1, 0.95);
  const auto none = sector_net_effects(empty, {0, 1, 1}, 2);
  for (const auto& m : none[0]) CHECK(m.cwiseAbs().sum() == 0);

  PosteriorSummary one(3, 1, 0.95);
  auto& c = one.at(Layer::Leverage, 0, 2, 0);  // edge 0 -> 2, sector 0 -> sector 1
  c.mean = -0.4;
  c.significant = true;
  const auto m = sector_net_effects(one, {0, 1, 1}, 2);
  CHECK(m[index(Layer::Leverage)][0](1, 0) == 1);
  CHECK(m[index(Layer::Leverage)][0].cwiseAbs().sum() == 1);
  CHECK(m[index(Layer::Return)][0].cwiseAbs().sum() == 0);

  Rng rng(6);
  const int n = 9, R = 2, S = 3;
  const auto s = random_summary(n, R, rng);
  std::vector<int> sec(n);
  for (int i = 0; i < n; ++i) sec[i] = static_cast<int>(rng.uniform() * S);
  const auto got = sector_net_effects(s, sec, S);
  for (Layer l : kLayers)
    for (int r = 0; r < R; ++r)
      for (int a = 0; a < S; ++a)
        for (int b = 0; b < S; ++b) {
          int want = 0, pairs = 0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              if (i == j || sec[i] != a || sec[j] != b) continue;
              ++pairs;
              const auto& cs = s.at(l, r, i, j);
              if (cs.significant) want += cs.mean < 0 ? 1 : -1;
            }
          CHECK(got[index(l)][r](a, b) == want);
          CHECK(std::abs(got[index(l)][r](a, b)) <= pairs);
        }
}

TEST_CASE("impact aggregates") {
  PosteriorSummary one(3, 1, 0.95);
  auto& c = one.at(Layer::Return, 0, 0, 1);  // b_12 in one-based labels
  c.mean = -0.3;
  c.significant = true;
  const auto a = impact_aggregates(one)[index(Layer::Return)][0];
  CHECK(a[0].in_neg == doctest::Approx(-0.3));
  CHECK(a[1].out_neg == doctest::Approx(-0.3));
  CHECK(a[0].btw_neg == doctest::Approx(-0.3));
  CHECK(a[2].btw_neg == 0.0);
  CHECK(a[0].in_pos == 0.0);

  const auto zero = impact_aggregates(PosteriorSummary(3, 2, 0.95));
  for (const auto& node : zero[1][1]) {
    CHECK(node.btw_pos == 0.0);
    CHECK(node.btw_neg == 0.0);
  }

  Rng rng(7);
  const int n = 7, R = 2;
  const auto s = random_summary(n, R, rng);
  const auto agg = impact_aggregates(s);
  for (Layer l : kLayers)
    for (int r = 0; r < R; ++r)
      for (int i = 0; i < n; ++i) {
        double ip = 0, in = 0, op = 0, on = 0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const auto& row = s.at(l, r, i, j);
          const auto& col = s.at(l, r, j, i);
          if (row.significant) (row.mean > 0 ? ip : in) += row.mean;
          if (col.significant) (col.mean > 0 ? op : on) += col.mean;
        }
        const auto& g = agg[index(l)][r][i];
        CHECK(g.in_pos == doctest::Approx(ip).epsilon(1e-14));
        CHECK(g.in_neg == doctest::Approx(in).epsilon(1e-14));
        CHECK(g.out_pos == doctest::Approx(op).epsilon(1e-14));
        CHECK(g.out_neg == doctest::Approx(on).epsilon(1e-14));
        CHECK(g.btw_pos == g.in_pos + g.out_pos);
        CHECK(g.btw_neg == g.in_neg + g.out_neg);
        CHECK(g.in_pos >= 0.0);
        CHECK(g.out_neg <= 0.0);
      }
}

TEST_CASE("adjacency and degrees") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Ones(3, 3);
  p(0, 1) = 0.0005;
  p(2, 1) = 0.001;
  p(1, 0) = 0.002;
  p(1, 1) = 0.0;
  const auto adj = adjacency_from_pvalues(p, 0.001);
  CHECK(adj(0, 1) == 1);
  CHECK(adj(2, 1) == 1);
  CHECK(adj(1, 0) == 0);
  CHECK(adj(1, 1) == 0);
  CHECK(degree(adj, DegreeKind::In) == std::vector<int>{1, 0, 1});
  CHECK(degree(adj, DegreeKind::Out) == std::vector<int>{0, 2, 0});

  const int n = 6;
  CHECK(degree(Eigen::MatrixXi::Zero(n, n), DegreeKind::Total) == std::vector<int>(n, 0));
  Eigen::MatrixXi full = Eigen::MatrixXi::Ones(n, n);
  full.diagonal().setZero();
  CHECK(degree(full, DegreeKind::Total) == std::vector<int>(n, 2 * (n - 1)));

  Rng rng(8);
  const auto g = random_digraph(8, 0.3, rng);
  std::vector<std::pair<int, int>> edges;  // (from, to)
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (g(i, j)) edges.emplace_back(j, i);
  std::vector<int> in(8, 0), out(8, 0);
  for (auto [from, to] : edges) {
    ++out[from];
    ++in[to];
  }
  CHECK(degree(g, DegreeKind::In) == in);
  CHECK(degree(g, DegreeKind::Out) == out);
}

TEST_CASE("betweenness") {
  Eigen::MatrixXi path = Eigen::MatrixXi::Zero(3, 3);
  path(1, 0) = 1;  // a -> b
  path(2, 1) = 1;  // b -> c
  CHECK(betweenness(path) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(betweenness(path, true)[1] == doctest::Approx(0.5));

  Eigen::MatrixXi full = Eigen::MatrixXi::Ones(5, 5);
  full.diagonal().setZero();
  CHECK(betweenness(full) == std::vector<double>(5, 0.0));

  for (int code = 0; code < 64; ++code) {
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(3, 3);
    int bit = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) a(i, j) = (code >> bit++) & 1;
    const auto got = betweenness(a);
    const auto want = oracle::betweenness(a);
    for (int v = 0; v < 3; ++v) CHECK(std::abs(got[v] - want[v]) <= 1e-12);
  }
  Rng rng(9);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 2 + rep % 7;
    const auto a = random_digraph(n, 0.15 + 0.5 * rng.uniform(), rng);
    const auto got = betweenness(a);
    const auto want = oracle::betweenness(a);
    for (int v = 0; v < n; ++v) CHECK(std::abs(got[v] - want[v]) <= 1e-12 * std::max(1.0, want[v]));
  }
}

TEST_CASE("type-1 quantiles and tercile movers") {
  const std::vector<double> six{6, 5, 4, 3, 2, 1};
  CHECK(empirical_quantile(six, 1.0 / 3.0) == 2.0);
  CHECK(empirical_quantile(six, 2.0 / 3.0) == 4.0);
  CHECK(empirical_quantile(six, 0.0) == 1.0);
  CHECK(empirical_quantile(six, 1.0) == 6.0);

  const std::vector<double> v{0.3, 0.1, 0.7, 0.5, 0.9, 0.2};
  CHECK(tercile_movers(v, v).empty());

  std::vector<double> after(v);
  after[1] = 10.0;  // the minimum jumps to the maximum
  CHECK(tercile_movers(v, after) == std::vector<int>{1});

  // ties at both boundaries: the lower tercile keeps the tied values
  const std::vector<double> before{1, 1, 1, 2, 3, 4};
  const std::vector<double> later{5, 5, 9, 5, 5, 1};
  // q1/3(before) = 1 -> nodes 0, 1, 2 are low; q2/3(later) = 5 -> only node 2 is above
  CHECK(tercile_movers(before, later) == std::vector<int>{2});

  Rng rng(10);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 3 + rep % 20;
    std::vector<double> b(n), a(n);
    for (int i = 0; i < n; ++i) {
      b[i] = std::round(3 * rng.uniform());
      a[i] = std::round(3 * rng.uniform());
    }
    std::vector<double> sb(b), sa(a);
    std::sort(sb.begin(), sb.end());
    std::sort(sa.begin(), sa.end());
    // rank rule: the smallest value whose cumulative share reaches p
    auto q = [&](const std::vector<double>& s, int num) {
      for (int k = 1; k <= n; ++k)
        if (3 * k >= num * n) return s[k - 1];
      return s.back();
    };
    std::vector<int> want;
    for (int i = 0; i < n; ++i)
      if (b[i] <= q(sb, 1) && a[i] > q(sa, 2)) want.push_back(i);
    CHECK(tercile_movers(b, a) == want);
  }
  CHECK_THROWS_AS(tercile_movers(std::vector<double>{1.0}, std::vector<double>{}), DataError);
}
