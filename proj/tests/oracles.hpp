#pragma once

// Brute-force reference computations, written independently of the library.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

namespace oracle {

struct FTest {
  double f = 0.0;
  double p = 1.0;
  int rows = 0;
};

// Restricted and unrestricted OLS on the raw (uncentred) design with an
// explicit intercept column, solved by column-pivoted QR.
inline FTest granger(std::span<const double> y, std::span<const double> x, int m) {
  const int T = static_cast<int>(y.size());
  std::vector<int> rows;
  for (int t = m; t < T; ++t) {
    bool ok = std::isfinite(y[t]);
    for (int l = 1; l <= m; ++l) ok = ok && std::isfinite(y[t - l]) && std::isfinite(x[t - l]);
    if (ok) rows.push_back(t);
  }
  const int N = static_cast<int>(rows.size());
  Eigen::MatrixXd Xu(N, 1 + 2 * m), Xr(N, 1 + m);
  Eigen::VectorXd Y(N);
  for (int k = 0; k < N; ++k) {
    const int t = rows[k];
    Y(k) = y[t];
    Xu(k, 0) = Xr(k, 0) = 1.0;
    for (int l = 1; l <= m; ++l) {
      Xu(k, l) = Xr(k, l) = y[t - l];
      Xu(k, m + l) = x[t - l];
    }
  }
  auto ssr = [&](const Eigen::MatrixXd& X) {
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
    return (Y - X * beta).squaredNorm();
  };
  const double su = ssr(Xu), sr = ssr(Xr);
  const double d2 = N - 2.0 * m - 1.0;
  FTest out;
  out.rows = N;
  out.f = ((sr - su) / m) / (su / d2);
  boost::math::fisher_f dist(m, d2);
  out.p = boost::math::cdf(boost::math::complement(dist, std::max(out.f, 0.0)));
  return out;
}

inline double garman_klass(double o, double h, double l, double c) {
  return 0.511 * (h - l) * (h - l) - 0.383 * (c - o) * (c - o) -
         0.019 * ((c - o) * (h + l - 2.0 * o) - 2.0 * (h - o) * (l - o));
}

// Betweenness by listing every simple path between every ordered pair and
// keeping the shortest ones. adj(i, j) != 0 means an edge j -> i.
inline std::vector<double> betweenness(const Eigen::MatrixXi& adj) {
  const int n = static_cast<int>(adj.rows());
  std::vector<double> bc(n, 0.0);
  std::vector<int> path;
  std::vector<char> on(n, 0);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      if (s == t) continue;
      std::vector<std::vector<int>> found;
      int best = std::numeric_limits<int>::max();
      std::function<void(int)> dfs = [&](int u) {
        if (u == t) {
          const int len = static_cast<int>(path.size()) - 1;
          if (len < best) {
            best = len;
            found.clear();
          }
          if (len == best) found.push_back(path);
          return;
        }
        for (int v = 0; v < n; ++v)
          if (v != u && adj(v, u) != 0 && !on[v]) {
            on[v] = 1;
            path.push_back(v);
            dfs(v);
            path.pop_back();
            on[v] = 0;
          }
      };
      on[s] = 1;
      path = {s};
      dfs(s);
      on[s] = 0;
      if (found.empty()) continue;
      std::vector<int> through(n, 0);
      for (const auto& p : found)
        for (std::size_t k = 1; k + 1 < p.size(); ++k) ++through[p[k]];
      for (int v = 0; v < n; ++v) bc[v] += static_cast<double>(through[v]) / static_cast<double>(found.size());
    }
  return bc;
}

}  // namespace oracle
