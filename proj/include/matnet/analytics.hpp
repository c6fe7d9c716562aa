#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "matnet/gibbs.hpp"
#include "matnet/matnorm.hpp"

namespace matnet {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Shortest interval holding ceil(level * N) consecutive order statistics of
/// an ascending sample. Equal-width candidates resolve to the middle one, so
/// symmetric samples give symmetric intervals. Throws DataError when fewer
/// than `min_draws` values are supplied.
Interval hpdi(std::span<const double> sorted, double level, std::size_t min_draws = 20);

struct CoefSummary {
  double mean = 0.0;
  double sd = 0.0;
  Interval hpd;
  bool significant = false;  // zero lies outside the HPD interval
};

CoefSummary summarize_draws(std::vector<double> draws, double level, std::size_t min_draws = 20);

/// Per-coefficient posterior summaries for all layers, indexed (r, i, j).
/// Diagonal entries are zero and never significant.
class PosteriorSummary {
 public:
  PosteriorSummary() = default;
  PosteriorSummary(int n, int R, double level);

  int n() const { return n_; }
  int R() const { return R_; }
  double level() const { return level_; }

  CoefSummary& at(Layer l, int r, int i, int j) { return coef_[index(l)][offset(r, i, j)]; }
  const CoefSummary& at(Layer l, int r, int i, int j) const { return coef_[index(l)][offset(r, i, j)]; }

 private:
  std::size_t offset(int r, int i, int j) const {
    return (static_cast<std::size_t>(r) * n_ + i) * n_ + j;
  }
  int n_ = 0, R_ = 0;
  double level_ = 0.95;
  Layered<std::vector<CoefSummary>> coef_;
};

PosteriorSummary significance_filter(const PosteriorDraws& draws, double level, std::size_t min_draws = 20);

/// Per (layer, factor): S x S matrix whose (s_i, s_j) entry counts
/// significant probability-increasing edges j -> i (negative coefficient)
/// minus significant probability-decreasing ones.
using SectorMatrices = Layered<std::vector<Eigen::MatrixXi>>;
SectorMatrices sector_net_effects(const PosteriorSummary& summary, const std::vector<int>& sector_of, int n_sectors);

struct NodeImpact {
  double in_pos = 0.0, in_neg = 0.0;
  double out_pos = 0.0, out_neg = 0.0;
  double btw_pos = 0.0, btw_neg = 0.0;
};

/// Per (layer, factor, node) sums of significant coefficient means over the
/// node's incoming (row) and outgoing (column) edges, split by sign.
using ImpactAggregates = Layered<std::vector<std::vector<NodeImpact>>>;
ImpactAggregates impact_aggregates(const PosteriorSummary& summary);

/// adj(i, j) = 1 means an edge j -> i. Built from p-values as pval(i, j) <= level.
Eigen::MatrixXi adjacency_from_pvalues(const Eigen::MatrixXd& pvalues, double level);

enum class DegreeKind { In, Out, Total };
std::vector<int> degree(const Eigen::MatrixXi& adj, DegreeKind kind);

/// Directed betweenness (Brandes), raw shortest-path counts unless normalised
/// by (n-1)(n-2).
std::vector<double> betweenness(const Eigen::MatrixXi& adj, bool normalized = false);

/// Type-1 empirical quantile of an unsorted sample.
double empirical_quantile(std::vector<double> values, double p);

/// Nodes in the bottom tercile before (value <= q1/3) and the top tercile
/// after (value > q2/3). Ties at a boundary fall to the lower tercile.
std::vector<int> tercile_movers(std::span<const double> before, std::span<const double> after);

}  // namespace matnet
