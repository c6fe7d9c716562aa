#include "matnet/granger.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include "matnet/error.hpp"
#include "matnet/kernels.hpp"

namespace matnet {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::chrono::sys_days parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw DataError("invalid date '" + iso + "', expected YYYY-MM-DD");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("invalid date '" + iso + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::chrono::sys_days week_ending_friday(std::chrono::sys_days d) {
  const std::chrono::weekday wd{d};
  const auto ahead = (std::chrono::Friday - wd).count();  // 0..6
  return d + std::chrono::days{ahead};
}

PricePanel aggregate_weekly(std::vector<Quote> quotes) {
  std::stable_sort(quotes.begin(), quotes.end(), [](const Quote& a, const Quote& b) { return a.date < b.date; });
  std::map<std::string, int> firm_index;
  std::vector<std::string> firms, sectors;
  std::set<std::chrono::sys_days> week_set;
  for (const auto& q : quotes) {
    for (double v : {q.open, q.high, q.low, q.close, q.total_return_close})
      if (!(v > 0.0) || !std::isfinite(v))
        throw DataError("non-positive price for firm " + q.firm + " on " + format_date(q.date));
    if (firm_index.emplace(q.firm, 0).second) {
      firms.push_back(q.firm);
      sectors.push_back(q.sector);
    }
    week_set.insert(week_ending_friday(q.date));
  }
  std::sort(firms.begin(), firms.end());
  std::map<std::string, std::string> sector_of;
  for (const auto& q : quotes) sector_of.emplace(q.firm, q.sector);
  for (std::size_t i = 0; i < firms.size(); ++i) {
    firm_index[firms[i]] = static_cast<int>(i);
    sectors[i] = sector_of[firms[i]];
  }
  std::vector<std::chrono::sys_days> weeks(week_set.begin(), week_set.end());
  std::map<std::chrono::sys_days, int> week_index;
  for (std::size_t w = 0; w < weeks.size(); ++w) week_index[weeks[w]] = static_cast<int>(w);

  PricePanel out;
  out.firms = firms;
  out.sectors = sectors;
  for (auto w : weeks) out.weeks.push_back(format_date(w));
  const auto n = static_cast<Eigen::Index>(firms.size());
  const auto W = static_cast<Eigen::Index>(weeks.size());
  out.open = out.high = out.low = out.close = out.total_return = Eigen::MatrixXd::Constant(n, W, kNaN);
  for (const auto& q : quotes) {  // date-sorted: first quote of a week opens it, last closes it
    const int i = firm_index[q.firm];
    const int w = week_index[week_ending_friday(q.date)];
    if (std::isnan(out.open(i, w))) {
      out.open(i, w) = std::log(q.open);
      out.high(i, w) = std::log(q.high);
      out.low(i, w) = std::log(q.low);
    } else {
      out.high(i, w) = std::max(out.high(i, w), std::log(q.high));
      out.low(i, w) = std::min(out.low(i, w), std::log(q.low));
    }
    out.close(i, w) = std::log(q.close);
    out.total_return(i, w) = std::log(q.total_return_close);
  }
  return out;
}

Eigen::MatrixXd compute_returns(const PricePanel& prices) {
  if (prices.W() < 2) throw DataError("compute_returns: need at least 2 weeks");
  const auto& tr = prices.total_return;
  Eigen::MatrixXd r(tr.rows(), tr.cols() - 1);
  for (Eigen::Index i = 0; i < tr.rows(); ++i)
    for (Eigen::Index t = 1; t < tr.cols(); ++t) r(i, t - 1) = tr(i, t) - tr(i, t - 1);  // NaN propagates
  return r;
}

double garman_klass(double open, double high, double low, double close) {
  const double tol = 1e-12 * (1.0 + std::abs(high) + std::abs(low));
  if (!(low <= std::min(open, close) + tol) || !(high >= std::max(open, close) - tol) || !(low <= high + tol))
    throw DataError("garman_klass: expected low <= open, close <= high");
  const double hl = high - low;
  const double co = close - open;
  return 0.511 * hl * hl - 0.383 * co * co -
         0.019 * (co * (high + low - 2.0 * open) - 2.0 * (high - open) * (low - open));
}

SignalPanel build_signals(const PricePanel& prices) {
  SignalPanel s;
  s.returns = compute_returns(prices);
  const auto n = static_cast<Eigen::Index>(prices.n());
  const auto T = s.returns.cols();
  s.volatility = Eigen::MatrixXd::Constant(n, T, kNaN);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto w = t + 1;
      const double o = prices.open(i, w), h = prices.high(i, w), l = prices.low(i, w), c = prices.close(i, w);
      if (std::isnan(o) || std::isnan(h) || std::isnan(l) || std::isnan(c)) continue;
      double v = garman_klass(o, h, l, c);
      if (v < 0.0) {
        v = 0.0;
        ++s.negative_gk_flags;
      }
      s.volatility(i, t) = v;
    }
  s.dates.assign(prices.weeks.begin() + 1, prices.weeks.end());
  s.firms = prices.firms;
  s.sectors = prices.sectors;
  return s;
}

GrangerTest granger_test(std::span<const double> target, std::span<const double> source, int lag) {
  if (target.size() != source.size()) throw std::invalid_argument("granger_test: series lengths differ");
  if (lag < 1) throw std::invalid_argument("granger_test: lag must be >= 1");
  const int T = static_cast<int>(target.size());
  const int k = 2 * lag;

  // listwise selection of usable rows
  std::vector<int> rows;
  for (int t = lag; t < T; ++t) {
    bool ok = std::isfinite(target[t]);
    for (int l = 1; l <= lag && ok; ++l) ok = std::isfinite(target[t - l]) && std::isfinite(source[t - l]);
    if (ok) rows.push_back(t);
  }
  GrangerTest out;
  out.effective_n = static_cast<int>(rows.size());
  const int N = out.effective_n;
  if (N < k + 2) {
    out.degenerate = true;
    return out;
  }

  // centred columns absorb the intercept: [own lags..., source lags...]
  std::vector<std::vector<double>> cols(k, std::vector<double>(N));
  std::vector<double> y(N);
  for (int a = 0; a < N; ++a) {
    const int t = rows[a];
    y[a] = target[t];
    for (int l = 1; l <= lag; ++l) {
      cols[l - 1][a] = target[t - l];
      cols[lag + l - 1][a] = source[t - l];
    }
  }
  // centring; a column whose centred energy is rounding noise is constant
  auto centre = [N](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= N;
    const double raw = kernels::sum_sq(v);
    for (double& x : v) x -= m;
    return kernels::sum_sq(v) > 1e-20 * raw;
  };
  bool varies = centre(y);
  for (auto& c : cols) varies = centre(c) && varies;
  if (!varies) {
    out.degenerate = true;
    return out;
  }

  Eigen::MatrixXd gram(k, k);
  Eigen::VectorXd xty(k);
  for (int a = 0; a < k; ++a) {
    xty(a) = kernels::dot(cols[a], y);
    for (int b = 0; b <= a; ++b) gram(a, b) = gram(b, a) = kernels::dot(cols[a], cols[b]);
  }

  // Least squares on the first `p` columns, residual sum of squares or NaN if singular.
  auto ssr = [&](int p) {
    Eigen::VectorXd scale(p);
    for (int a = 0; a < p; ++a) {
      if (!(gram(a, a) > 0.0)) return kNaN;
      scale(a) = 1.0 / std::sqrt(gram(a, a));
    }
    const Eigen::MatrixXd g = scale.asDiagonal() * gram.topLeftCorner(p, p) * scale.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return kNaN;
    const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
    if (!(min_pivot > 1e-7)) return kNaN;  // correlation-scale Cholesky pivot
    const Eigen::VectorXd beta = scale.asDiagonal() * llt.solve(scale.asDiagonal() * xty.head(p));
    std::vector<double> res(y);
    for (int a = 0; a < p; ++a) kernels::axpy(-beta(a), cols[a], res);
    return kernels::sum_sq(res);
  };

  const double ssr_u = ssr(k);
  const double ssr_r = ssr(lag);
  const double sst = kernels::sum_sq(y);
  if (std::isnan(ssr_u) || std::isnan(ssr_r)) {
    out.degenerate = true;
    return out;
  }
  const int dof = N - k - 1;
  if (ssr_u <= 1e-14 * sst) {
    // exact fit of the unrestricted model
    if (ssr_r <= 1e-14 * sst) {
      out.degenerate = true;
      return out;
    }
    out.f_stat = std::numeric_limits<double>::infinity();
    out.pvalue = 0.0;
    return out;
  }
  out.f_stat = std::max(0.0, ((ssr_r - ssr_u) / lag) / (ssr_u / dof));
  const boost::math::fisher_f_distribution<double> dist(lag, dof);
  out.pvalue = boost::math::cdf(boost::math::complement(dist, out.f_stat));
  return out;
}

PairwiseGranger pairwise_granger(std::span<const double> x_i, std::span<const double> x_j, int lag) {
  return {granger_test(x_i, x_j, lag), granger_test(x_j, x_i, lag)};
}

std::string to_string(PTransform t) {
  switch (t) {
    case PTransform::Identity:
      return "identity";
    case PTransform::Probit:
      return "probit";
    case PTransform::Logit:
      return "logit";
  }
  return "?";
}

PTransform parse_transform(const std::string& s) {
  if (s == "identity") return PTransform::Identity;
  if (s == "probit") return PTransform::Probit;
  if (s == "logit") return PTransform::Logit;
  throw UsageError("unknown transform '" + s + "' (identity|probit|logit)");
}

void GrangerConfig::validate() const {
  if (lag < 1) throw UsageError("granger: lag must be >= 1");
  if (window <= 2 * lag + 1) throw UsageError("granger: window must exceed 2*lag + 1");
  if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw UsageError("granger: clip_eps must be in (0, 0.5)");
  if (step < 1) throw UsageError("granger: step must be >= 1");
  if (threads < 1) throw UsageError("granger: threads must be >= 1");
}

double transform_pvalue(double p, const GrangerConfig& cfg) {
  const double c = std::clamp(p, cfg.clip_eps, 1.0 - cfg.clip_eps);
  switch (cfg.transform) {
    case PTransform::Identity:
      return c;
    case PTransform::Probit:
      return boost::math::quantile(boost::math::normal_distribution<double>(), c);
    case PTransform::Logit:
      return std::log(c / (1.0 - c));
  }
  return c;
}

int window_count(int T, int window, int step) {
  if (T < window) return 0;
  return (T - window) / step + 1;
}

ExtractedPanel build_multilayer_panel(const SignalPanel& signals, const GrangerConfig& cfg) {
  cfg.validate();
  const int n = signals.n();
  const int T = signals.T();
  if (T < cfg.window) throw DataError("build_multilayer_panel: fewer weeks than the window length");
  const int slices = window_count(T, cfg.window, cfg.step);

  ExtractedPanel out;
  auto& panel = out.response;
  panel.n = n;
  panel.T = slices;
  panel.node_labels = signals.firms;
  panel.sector_names.clear();
  std::map<std::string, int> sector_index;
  for (const auto& s : signals.sectors) sector_index.emplace(s, 0);
  for (auto& [name, idx] : sector_index) {
    idx = static_cast<int>(panel.sector_names.size());
    panel.sector_names.push_back(name);
  }
  for (const auto& s : signals.sectors) panel.sector_of.push_back(sector_index[s]);
  for (int w = 0; w < slices; ++w) panel.dates.push_back(signals.dates[w * cfg.step + cfg.window - 1]);
  for (int l = 0; l < kNumLayers; ++l) {
    panel.y[l].assign(slices, Eigen::MatrixXd::Zero(n, n));
    out.pvalues[l].assign(slices, Eigen::MatrixXd::Constant(n, n, kNaN));
    out.flagged[l].assign(slices, 0);
    out.trimmed[l].assign(slices, 0);
  }

  // row-major copies so each node's window is a contiguous span
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat sig[2] = {signals.returns, signals.volatility};

  auto run_window = [&](int w) {
    const int start = w * cfg.step;
    for (Layer layer : kLayers) {
      const int l = index(layer);
      const RowMat& tgt = sig[target_signal(layer)];
      const RowMat& src = sig[source_signal(layer)];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const std::span<const double> x(tgt.data() + static_cast<std::size_t>(i) * T + start, cfg.window);
          const std::span<const double> z(src.data() + static_cast<std::size_t>(j) * T + start, cfg.window);
          const auto test = granger_test(x, z, cfg.lag);
          if (test.effective_n < cfg.window - cfg.lag) ++out.trimmed[l][w];
          if (test.degenerate) {
            ++out.flagged[l][w];
            panel.y[l][w](i, j) = transform_pvalue(1.0, cfg);
          } else {
            out.pvalues[l][w](i, j) = test.pvalue;
            panel.y[l][w](i, j) = transform_pvalue(test.pvalue, cfg);
          }
        }
    }
  };

  const int workers = std::max(1, std::min(cfg.threads, slices));
  if (workers == 1) {
    for (int w = 0; w < slices; ++w) run_window(w);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int k = 0; k < workers; ++k)
    pool.emplace_back([&] {
      for (int w = next++; w < slices; w = next++) {
        try {
          run_window(w);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

double density(const Eigen::MatrixXd& pvalues, double level) {
  const auto n = pvalues.rows();
  if (n < 2) return 0.0;
  std::size_t links = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && pvalues(i, j) <= level) ++links;  // NaN compares false
  return static_cast<double>(links) / static_cast<double>(n * (n - 1));
}

}  // namespace matnet
