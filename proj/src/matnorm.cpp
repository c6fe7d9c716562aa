#include "matnet/matnorm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "matnet/error.hpp"
#include "matnet/kernels.hpp"

namespace matnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& s, const char* what) {
  if (s.rows() != s.cols()) throw std::invalid_argument(std::string(what) + " is not square");
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

std::string_view layer_name(Layer l) {
  switch (l) {
    case Layer::Return:
      return "return";
    case Layer::Volatility:
      return "volatility";
    case Layer::RiskPremium:
      return "risk_premium";
    case Layer::Leverage:
      return "leverage";
  }
  return "?";
}

std::string_view layer_code(Layer l) {
  switch (l) {
    case Layer::Return:
      return "11";
    case Layer::Volatility:
      return "22";
    case Layer::RiskPremium:
      return "12";
    case Layer::Leverage:
      return "21";
  }
  return "?";
}

Layer layer_from_name(std::string_view name) {
  for (Layer l : kLayers)
    if (layer_name(l) == name || layer_code(l) == name) return l;
  throw DataError("unknown layer '" + std::string(name) + "'");
}

int target_signal(Layer l) { return (l == Layer::Return || l == Layer::RiskPremium) ? 0 : 1; }
int source_signal(Layer l) { return (l == Layer::Return || l == Layer::Leverage) ? 0 : 1; }

double matnorm_logpdf(const Eigen::MatrixXd& x, const MatrixNormal& dist) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (dist.mean.rows() != n || dist.mean.cols() != p || dist.row_cov.rows() != n || dist.col_cov.rows() != p)
    throw std::invalid_argument("matnorm_logpdf: dimension mismatch");
  const auto row = checked_llt(dist.row_cov, "row covariance");
  const auto col = checked_llt(dist.col_cov, "column covariance");

  // tr(col^-1 D' row^-1 D) = || L1^-1 D L2^-T ||_F^2
  Eigen::MatrixXd w = row.matrixL().solve(x - dist.mean);
  Eigen::MatrixXd v = col.matrixL().solve(w.transpose());
  const double quad = v.squaredNorm();

  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  return -0.5 * nd * pd * kLog2Pi - 0.5 * pd * log_det(row) - 0.5 * nd * log_det(col) - 0.5 * quad;
}

Eigen::MatrixXd matnorm_sample(const MatrixNormal& dist, Rng& rng) {
  const auto row = checked_llt(dist.row_cov, "row covariance");
  const auto col = checked_llt(dist.col_cov, "column covariance");
  const auto n = dist.row_cov.rows();
  const auto p = dist.col_cov.rows();
  if (dist.mean.rows() != n || dist.mean.cols() != p) throw std::invalid_argument("matnorm_sample: dimension mismatch");
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.normal();
  Eigen::MatrixXd l1 = row.matrixL();
  Eigen::MatrixXd l2 = col.matrixL();
  return dist.mean + l1 * z * l2.transpose();
}

void MultilayerPanel::validate() const {
  if (n < 2) throw DataError("panel needs at least 2 nodes");
  for (Layer l : kLayers) {
    const auto& slices = y[index(l)];
    if (static_cast<int>(slices.size()) != T)
      throw DataError("layer " + std::string(layer_name(l)) + " has " + std::to_string(slices.size()) +
                      " slices, expected " + std::to_string(T));
    for (const auto& m : slices)
      if (m.rows() != n || m.cols() != n) throw DataError("layer " + std::string(layer_name(l)) + " slice is not n x n");
  }
  if (!node_labels.empty() && static_cast<int>(node_labels.size()) != n) throw DataError("node label count != n");
  if (!sector_of.empty() && static_cast<int>(sector_of.size()) != n) throw DataError("sector map size != n");
  if (!dates.empty() && static_cast<int>(dates.size()) != T) throw DataError("date count != T");
}

void FactorSeries::validate() const {
  if (!values.allFinite()) throw DataError("factor series contains non-finite values");
  if (!names.empty() && static_cast<int>(names.size()) != R()) throw DataError("factor name count != R");
  if (!dates.empty() && static_cast<int>(dates.size()) != T()) throw DataError("factor date count != T");
}

ModelParams ModelParams::zeros(int n, int R) {
  ModelParams p;
  for (auto& b : p.B) b.assign(R, Eigen::MatrixXd::Zero(n, n));
  for (auto& s : p.sigma2) s = Eigen::VectorXd::Ones(n);
  return p;
}

double layer_loglik(const std::vector<Eigen::MatrixXd>& y, const Eigen::MatrixXd& factors,
                    const std::vector<Eigen::MatrixXd>& B, const Eigen::VectorXd& sigma2) {
  const auto T = static_cast<Eigen::Index>(y.size());
  const auto R = factors.cols();
  if (factors.rows() != T) throw std::invalid_argument("layer_loglik: factor rows != T");
  if (static_cast<Eigen::Index>(B.size()) != R) throw std::invalid_argument("layer_loglik: coefficient count != R");
  if (T == 0) return 0.0;
  const auto n = y.front().rows();
  if (sigma2.size() != n) throw std::invalid_argument("layer_loglik: sigma2 size != n");
  for (const auto& b : B)
    if (b.rows() != n || b.cols() != n) throw std::invalid_argument("layer_loglik: coefficient shape");

  // Column-major residual cube per column j so the masked sum is one contiguous kernel call.
  std::vector<double> resid(static_cast<std::size_t>(T * n));
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(sigma2(j) > 0.0)) throw std::invalid_argument("layer_loglik: sigma2 must be positive");
    std::size_t k = 0;
    for (Eigen::Index t = 0; t < T; ++t) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        double mean = 0.0;
        for (Eigen::Index r = 0; r < R; ++r) mean += B[r](i, j) * factors(t, r);
        resid[k++] = y[t](i, j) - mean;
      }
    }
    const double ss = kernels::sum_sq(std::span<const double>(resid.data(), k));
    total += -0.5 * static_cast<double>(k) * (kLog2Pi + std::log(sigma2(j))) - 0.5 * ss / sigma2(j);
  }
  return total;
}

double model_loglik(const MultilayerPanel& panel, const FactorSeries& factors, const ModelParams& params) {
  if (factors.T() != panel.T) throw std::invalid_argument("model_loglik: factor T != panel T");
  double total = 0.0;
  for (Layer l : kLayers) {
    const int li = index(l);
    total += layer_loglik(panel.y[li], factors.values, params.B[li], params.sigma2[li]);
  }
  return total;
}

}  // namespace matnet
