#pragma once

// Statistical helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace testsupport {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe iid_mean(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

// Standard error from non-overlapping batch means; robust to autocorrelation
// when each batch is much longer than the correlation time.
inline MeanSe batch_means(const std::vector<double>& x, std::size_t batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t k = 0; k < len; ++k) means[b] += x[b * len + k];
    means[b] /= static_cast<double>(len);
  }
  return iid_mean(means);
}

// Effective sample size implied by the batch-means variance.
inline double batch_ess(const std::vector<double>& x, std::size_t batches = 50) {
  const auto bm = batch_means(x, batches);
  const auto iid = iid_mean(x);
  if (bm.se <= 0.0) return static_cast<double>(x.size());
  return static_cast<double>(x.size()) * (iid.se * iid.se) / (bm.se * bm.se);
}

// Kolmogorov-Smirnov statistic of a sample against U(0, 1).
inline double ks_uniform_statistic(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    d = std::max(d, (static_cast<double>(k) + 1.0) / n - u[k]);
    d = std::max(d, u[k] - static_cast<double>(k) / n);
  }
  return d;
}

// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("matnet_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
