#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "matnet/matnorm.hpp"

namespace matnet {

/// Parses "YYYY-MM-DD"; throws DataError on anything else.
std::chrono::sys_days parse_date(const std::string& iso);
std::string format_date(std::chrono::sys_days d);
/// The Friday on or after `d` (weeks run Saturday..Friday).
std::chrono::sys_days week_ending_friday(std::chrono::sys_days d);

/// One daily (or already weekly) quote in price levels.
struct Quote {
  std::string firm;
  std::string sector;
  std::chrono::sys_days date;
  double open, high, low, close, total_return_close;
};

/// Weekly log prices, n firms x W weeks; missing weeks are NaN.
struct PricePanel {
  std::vector<std::string> firms;
  std::vector<std::string> sectors;  // per firm, may be empty strings
  std::vector<std::string> weeks;    // ISO dates of the Friday closing each week
  Eigen::MatrixXd open, high, low, close, total_return;

  int n() const { return static_cast<int>(firms.size()); }
  int W() const { return static_cast<int>(weeks.size()); }
};

/// Friday-anchored weekly bars: first open, max high, min low, last close and
/// last total-return close of each week, in logs. Throws DataError on
/// non-positive prices.
PricePanel aggregate_weekly(std::vector<Quote> quotes);

/// r_t = log TR_t - log TR_{t-1}; n x (W-1). NaN where either week is missing.
Eigen::MatrixXd compute_returns(const PricePanel& prices);

/// Garman-Klass range variance from weekly log prices. Throws DataError unless
/// low <= min(open, close) and high >= max(open, close).
double garman_klass(double open, double high, double low, double close);

/// Returns and Garman-Klass variances on the common weekly grid (the first
/// price week is consumed by the return difference).
struct SignalPanel {
  Eigen::MatrixXd returns;     // n x T
  Eigen::MatrixXd volatility;  // n x T, floored at 0
  std::vector<std::string> dates;
  std::vector<std::string> firms;
  std::vector<std::string> sectors;
  std::size_t negative_gk_flags = 0;  // GK values that were floored

  int n() const { return static_cast<int>(returns.rows()); }
  int T() const { return static_cast<int>(returns.cols()); }
  const Eigen::MatrixXd& signal(int which) const { return which == 0 ? returns : volatility; }
};

SignalPanel build_signals(const PricePanel& prices);

/// F-test that `source` Granger-causes `target` in a bivariate VAR(lag) with
/// intercept, estimated by least squares on the rows where every needed value
/// is finite (listwise deletion).
struct GrangerTest {
  double f_stat = 0.0;
  double pvalue = 1.0;
  int effective_n = 0;
  bool degenerate = false;  // singular design or too few rows; pvalue is 1
};

GrangerTest granger_test(std::span<const double> target, std::span<const double> source, int lag);

/// pval_ij tests j -> i (the equation of x_i), pval_ji tests i -> j.
struct PairwiseGranger {
  GrangerTest ij;
  GrangerTest ji;
};

PairwiseGranger pairwise_granger(std::span<const double> x_i, std::span<const double> x_j, int lag);

enum class PTransform { Identity, Probit, Logit };
std::string to_string(PTransform t);
PTransform parse_transform(const std::string& s);

struct GrangerConfig {
  int window = 104;
  int lag = 1;
  PTransform transform = PTransform::Probit;
  double clip_eps = 1e-6;
  int step = 1;
  int threads = 1;

  void validate() const;
};

/// Increasing map of a p-value to the regression response, after clipping to
/// [clip_eps, 1 - clip_eps].
double transform_pvalue(double p, const GrangerConfig& cfg);

int window_count(int T, int window, int step);

struct ExtractedPanel {
  MultilayerPanel response;                        // transformed p-values, diagonal 0
  Layered<std::vector<Eigen::MatrixXd>> pvalues;   // raw p-values; NaN on flagged cells and diagonal
  Layered<std::vector<int>> flagged;               // flagged cell count per slice
  Layered<std::vector<int>> trimmed;               // cells that lost rows to missing weeks, per slice
};

/// Rolling-window pairwise tests for all four layers. Cell (i, j) of layer lk
/// tests "layer-k signal of j causes layer-l signal of i".
ExtractedPanel build_multilayer_panel(const SignalPanel& signals, const GrangerConfig& cfg);

/// Fraction of the n(n-1) ordered pairs with pvalue <= level. NaN cells (the
/// diagonal, flagged tests) never count as links.
double density(const Eigen::MatrixXd& pvalues, double level);

}  // namespace matnet
