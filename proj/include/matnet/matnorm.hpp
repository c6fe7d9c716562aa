#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "matnet/random.hpp"

namespace matnet {

/// The four directed sub-networks of the two-layer (return, volatility)
/// system. Y_lk holds tests of "layer-k series of node j causes layer-l
/// series of node i" in cell (i, j).
enum class Layer : int {
  Return = 0,       // Y_11, returns cause returns
  Volatility = 1,   // Y_22, volatility causes volatility
  RiskPremium = 2,  // Y_12, volatility causes returns
  Leverage = 3,     // Y_21, returns cause volatility
};

inline constexpr std::array<Layer, 4> kLayers{Layer::Return, Layer::Volatility, Layer::RiskPremium, Layer::Leverage};
inline constexpr int kNumLayers = 4;

template <class T>
using Layered = std::array<T, kNumLayers>;

constexpr int index(Layer l) { return static_cast<int>(l); }
std::string_view layer_name(Layer l);  // "return", "volatility", "risk_premium", "leverage"
std::string_view layer_code(Layer l);  // "11", "22", "12", "21"
Layer layer_from_name(std::string_view name);

/// Signal index (0 = returns, 1 = volatility) of the response side and the
/// causing side of a layer.
int target_signal(Layer l);
int source_signal(Layer l);

struct MatrixNormal {
  Eigen::MatrixXd mean;     // n x p
  Eigen::MatrixXd row_cov;  // n x n
  Eigen::MatrixXd col_cov;  // p x p
};

/// log density of X ~ MN(M, row_cov, col_cov), i.e. vec(X) ~ N(vec M, col_cov (x) row_cov).
/// Throws std::invalid_argument on shape mismatch and NumericalError when a
/// covariance is not positive definite.
double matnorm_logpdf(const Eigen::MatrixXd& x, const MatrixNormal& dist);

/// X = M + L1 Z L2' with L1 L1' = row_cov, L2 L2' = col_cov.
Eigen::MatrixXd matnorm_sample(const MatrixNormal& dist, Rng& rng);

/// T time points x 4 layers of n x n response matrices. Diagonal cells hold
/// the sentinel 0 and never enter the likelihood.
struct MultilayerPanel {
  int n = 0;
  int T = 0;
  Layered<std::vector<Eigen::MatrixXd>> y;
  std::vector<std::string> node_labels;
  std::vector<int> sector_of;
  std::vector<std::string> sector_names;
  std::vector<std::string> dates;

  /// Throws DataError when layers disagree in shape or metadata is short.
  void validate() const;
};

struct FactorSeries {
  Eigen::MatrixXd values;  // T x R
  std::vector<std::string> names;
  std::vector<std::string> dates;

  int T() const { return static_cast<int>(values.rows()); }
  int R() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

/// Coefficient matrices and column noise variances for every layer.
/// Cell (i, j) of layer lk has mean sum_r B_lk,r(i, j) f_r,t and variance sigma2_lk(j).
struct ModelParams {
  Layered<std::vector<Eigen::MatrixXd>> B;  // R matrices, n x n, zero diagonal
  Layered<Eigen::VectorXd> sigma2;          // n positive entries

  static ModelParams zeros(int n, int R);
};

/// Masked log-likelihood of one layer: the diagonal is excluded from the trace
/// and from the normalising constant.
double layer_loglik(const std::vector<Eigen::MatrixXd>& y, const Eigen::MatrixXd& factors,
                    const std::vector<Eigen::MatrixXd>& B, const Eigen::VectorXd& sigma2);

double model_loglik(const MultilayerPanel& panel, const FactorSeries& factors, const ModelParams& params);

}  // namespace matnet
