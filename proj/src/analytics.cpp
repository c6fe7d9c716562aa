#include "matnet/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "matnet/error.hpp"

namespace matnet {

Interval hpdi(std::span<const double> sorted, double level, std::size_t min_draws) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("hpdi: level must be in (0, 1)");
  const std::size_t N = sorted.size();
  if (N < std::max<std::size_t>(min_draws, 1)) throw DataError("hpdi: insufficient draws");
  auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(N) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, N);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a + k <= N; ++a) {
    const double width = sorted[a + k - 1] - sorted[a];
    if (width < best) {
      best = width;
      ties.assign(1, a);
    } else if (width == best) {
      ties.push_back(a);
    }
  }
  const std::size_t a = ties[(ties.size() - 1) / 2];
  return {sorted[a], sorted[a + k - 1]};
}

CoefSummary summarize_draws(std::vector<double> draws, double level, std::size_t min_draws) {
  CoefSummary s;
  const auto N = static_cast<double>(draws.size());
  if (draws.empty()) throw DataError("summarize_draws: no draws");
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= N;
  double ss = 0.0;
  for (double x : draws) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.sd = draws.size() > 1 ? std::sqrt(ss / (N - 1.0)) : 0.0;
  std::sort(draws.begin(), draws.end());
  s.hpd = hpdi(draws, level, min_draws);
  s.significant = s.hpd.lower > 0.0 || s.hpd.upper < 0.0;
  return s;
}

PosteriorSummary::PosteriorSummary(int n, int R, double level) : n_(n), R_(R), level_(level) {
  for (auto& c : coef_) c.assign(static_cast<std::size_t>(R) * n * n, CoefSummary{});
}

PosteriorSummary significance_filter(const PosteriorDraws& draws, double level, std::size_t min_draws) {
  PosteriorSummary out(draws.n, draws.R, level);
  for (Layer l : kLayers) {
    const auto& ld = draws.layers[index(l)];
    for (int r = 0; r < draws.R; ++r)
      for (int i = 0; i < draws.n; ++i)
        for (int j = 0; j < draws.n; ++j)
          if (i != j) out.at(l, r, i, j) = summarize_draws(ld.coef_trace(r, i, j), level, min_draws);
  }
  return out;
}

SectorMatrices sector_net_effects(const PosteriorSummary& summary, const std::vector<int>& sector_of, int n_sectors) {
  const int n = summary.n();
  if (static_cast<int>(sector_of.size()) != n) throw DataError("sector_net_effects: sector map size mismatch");
  for (int s : sector_of)
    if (s < 0 || s >= n_sectors) throw DataError("sector_net_effects: sector index out of range");
  SectorMatrices out;
  for (Layer l : kLayers) {
    auto& mats = out[index(l)];
    mats.assign(summary.R(), Eigen::MatrixXi::Zero(n_sectors, n_sectors));
    for (int r = 0; r < summary.R(); ++r)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const auto& c = summary.at(l, r, i, j);
          if (!c.significant) continue;
          // negative coefficient lowers the p-value, raising the edge probability
          mats[r](sector_of[i], sector_of[j]) += c.mean < 0.0 ? 1 : (c.mean > 0.0 ? -1 : 0);
        }
  }
  return out;
}

ImpactAggregates impact_aggregates(const PosteriorSummary& summary) {
  const int n = summary.n();
  ImpactAggregates out;
  for (Layer l : kLayers) {
    auto& per_factor = out[index(l)];
    per_factor.assign(summary.R(), std::vector<NodeImpact>(n));
    for (int r = 0; r < summary.R(); ++r) {
      auto& nodes = per_factor[r];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const auto& c = summary.at(l, r, i, j);  // edge j -> i
          if (!c.significant) continue;
          if (c.mean > 0.0) {
            nodes[i].in_pos += c.mean;
            nodes[j].out_pos += c.mean;
          } else {
            nodes[i].in_neg += c.mean;
            nodes[j].out_neg += c.mean;
          }
        }
      for (auto& v : nodes) {
        v.btw_pos = v.in_pos + v.out_pos;
        v.btw_neg = v.in_neg + v.out_neg;
      }
    }
  }
  return out;
}

Eigen::MatrixXi adjacency_from_pvalues(const Eigen::MatrixXd& pvalues, double level) {
  const auto n = pvalues.rows();
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && pvalues(i, j) <= level) adj(i, j) = 1;
  return adj;
}

std::vector<int> degree(const Eigen::MatrixXi& adj, DegreeKind kind) {
  const auto n = adj.rows();
  std::vector<int> d(n, 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || adj(i, j) == 0) continue;
      if (kind != DegreeKind::Out) ++d[i];  // incoming to i
      if (kind != DegreeKind::In) ++d[j];   // outgoing from j
    }
  return d;
}

std::vector<double> betweenness(const Eigen::MatrixXi& adj, bool normalized) {
  const int n = static_cast<int>(adj.rows());
  std::vector<std::vector<int>> succ(n);
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (v != w && adj(w, v) != 0) succ[v].push_back(w);

  std::vector<double> cb(n, 0.0);
  std::vector<int> stack, dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int>> pred(n);
  for (int s = 0; s < n; ++s) {
    stack.clear();
    for (int v = 0; v < n; ++v) {
      pred[v].clear();
      dist[v] = -1;
      sigma[v] = 0.0;
      delta[v] = 0.0;
    }
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      stack.push_back(v);
      for (int w : succ[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const int w = *it;
      for (int v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  if (normalized && n > 2) {
    const double scale = 1.0 / (static_cast<double>(n - 1) * (n - 2));
    for (double& c : cb) c *= scale;
  }
  return cb;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("empirical_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const auto N = values.size();
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(N) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, N);
  return values[k - 1];
}

std::vector<int> tercile_movers(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) throw DataError("tercile_movers: size mismatch");
  if (before.empty()) return {};
  const std::vector<double> b(before.begin(), before.end()), a(after.begin(), after.end());
  const double low_cut = empirical_quantile(b, 1.0 / 3.0);
  const double high_cut = empirical_quantile(a, 2.0 / 3.0);
  std::vector<int> movers;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i] <= low_cut && a[i] > high_cut) movers.push_back(static_cast<int>(i));
  return movers;
}

}  // namespace matnet
