#include "matnet/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "matnet/analytics.hpp"
#include "matnet/csv.hpp"
#include "matnet/error.hpp"
#include "matnet/gibbs.hpp"
#include "matnet/granger.hpp"
#include "matnet/io.hpp"

namespace matnet {

namespace fs = std::filesystem;

namespace {

Json granger_json(const GrangerConfig& g) {
  // threads deliberately left out: output never depends on it
  return {{"window", g.window}, {"lag", g.lag}, {"transform", to_string(g.transform)}, {"clip_eps", g.clip_eps},
          {"step", g.step}};
}

Json prior_json(const PriorConfig& p) {
  return {{"M_b", p.M_b}, {"M_sigma", p.M_sigma}, {"phi_b", p.phi_b}, {"phi_sigma", p.phi_sigma},
          {"s2", p.s2},   {"a0", p.a0},           {"b0", p.b0},       {"a1", p.a1},
          {"b1", p.b1},   {"a2", p.a2},           {"b2", p.b2},       {"a3", p.a3},
          {"b3", p.b3}};
}

Json sampler_json(const SamplerConfig& s) {
  return {{"iters", s.n_iter},
          {"burn", s.n_burn},
          {"thin", s.thin},
          {"seed", s.seed},
          {"rwmh_target", s.rwmh_target_accept},
          {"rwmh_rate", s.rwmh_adapt_rate},
          {"rwmh_initial_scale", s.rwmh_initial_scale}};
}

std::string node_label(int i, int n) {
  const int width = n < 10 ? 1 : (n < 100 ? 2 : (n < 1000 ? 3 : 4));
  std::string digits = std::to_string(i + 1);
  return "F" + std::string(width - digits.size(), '0') + digits;
}

// Latest slice on or before `date`; the first / last slice when empty.
int snapshot_index(const std::vector<std::string>& dates, const std::string& date, bool first) {
  if (dates.empty()) throw DataError("panel has no slices");
  if (date.empty()) return first ? 0 : static_cast<int>(dates.size()) - 1;
  const auto it = std::upper_bound(dates.begin(), dates.end(), date);
  if (it == dates.begin()) throw DataError("snapshot date " + date + " precedes the first slice");
  return static_cast<int>(it - dates.begin()) - 1;
}

}  // namespace

void cmd_extract(const RunConfig& cfg) {
  cfg.granger.validate();
  if (cfg.prices.empty()) throw UsageError("config: paths.prices is required for extract");
  if (!fs::exists(cfg.prices)) throw UsageError("prices file not found: " + cfg.prices.string());
  const auto quotes = read_quotes(cfg.prices, cfg.sectors);
  const auto prices = aggregate_weekly(quotes);
  const auto signals = build_signals(prices);
  std::clog << "extract: " << signals.n() << " firms, " << signals.T() << " signal weeks\n";
  const auto extracted = build_multilayer_panel(signals, cfg.granger);

  Json config;
  config["granger"] = granger_json(cfg.granger);
  Json inputs{{"prices", sha256_file(cfg.prices)}};
  if (!cfg.sectors.empty()) inputs["sectors"] = sha256_file(cfg.sectors);
  config["inputs"] = inputs;
  write_panel(cfg.panel_dir(), extracted, &signals, config);

  std::size_t flagged = 0;
  for (const auto& f : extracted.flagged)
    for (int c : f) flagged += static_cast<std::size_t>(c);
  std::clog << "extract: " << extracted.response.T << " slices per layer, " << flagged
            << " flagged cells, " << signals.negative_gk_flags << " floored volatility values\n";
}

void cmd_estimate(const RunConfig& cfg) {
  cfg.prior.validate();
  cfg.sampler.validate();
  cfg.analysis.validate();
  if (cfg.factors.empty()) throw UsageError("config: paths.factors is required for estimate");
  if (!fs::exists(cfg.factors)) throw UsageError("factors file not found: " + cfg.factors.string());
  const auto loaded = read_panel(cfg.panel_dir());
  const auto& panel = loaded.panel.response;
  auto factors = align_factors(read_factors(cfg.factors), panel.dates);
  const auto scaling = standardize(factors);

  std::clog << "estimate: n=" << panel.n << " T=" << panel.T << " R=" << factors.R() << ", " << cfg.sampler.n_iter
            << " sweeps\n";
  const auto draws = run_chain(panel, factors, cfg.prior, cfg.sampler);
  const auto summary = significance_filter(draws, cfg.analysis.hpdi_level);

  const auto dir = cfg.estimate_dir();
  Json files = Json::object();
  files["draws.csv"] = write_file(dir / "draws.csv", draws_csv(draws, cfg.sampler));
  files["summary.csv"] = write_file(dir / "summary.csv", summary_csv(summary, panel.node_labels, factors.names));
  files["diagnostics.json"] = write_json(dir / "diagnostics.json", diagnostics_json(draws));

  Json manifest;
  manifest["kind"] = "estimate";
  manifest["upstream"] = {{"panel_manifest", loaded.manifest_hash}, {"factors", sha256_file(cfg.factors)}};
  manifest["n"] = panel.n;
  manifest["T"] = panel.T;
  manifest["R"] = factors.R();
  manifest["labels"] = panel.node_labels;
  manifest["factors"] = factors.names;
  manifest["standardization"] = {{"mean", scaling.mean}, {"sd", scaling.sd}};
  manifest["prior"] = prior_json(cfg.prior);
  manifest["sampler"] = sampler_json(cfg.sampler);
  manifest["saved_draws"] = draws.count();
  manifest["hpdi_level"] = cfg.analysis.hpdi_level;
  manifest["files"] = files;
  write_json(dir / "manifest.json", manifest);
  std::clog << "estimate: " << draws.count() << " saved draws\n";
}

void cmd_analyze(const RunConfig& cfg) {
  cfg.analysis.validate();
  const auto& opt = cfg.analysis;
  const auto loaded = read_panel(cfg.panel_dir());
  const auto& panel = loaded.panel.response;
  const auto est_dir = cfg.estimate_dir();
  const auto est = read_json(est_dir / "manifest.json");
  verify_manifest_files(est_dir, est);
  if (est.at("upstream").at("panel_manifest").get<std::string>() != loaded.manifest_hash)
    throw DataError("estimate artifacts were produced from a different panel; rerun estimate");
  const auto factor_names = est.at("factors").get<std::vector<std::string>>();
  const int n = panel.n;
  const int R = static_cast<int>(factor_names.size());

  PosteriorSummary summary;
  if (std::abs(est.at("hpdi_level").get<double>() - opt.hpdi_level) < 1e-12) {
    summary = read_summary(est_dir / "summary.csv", panel.node_labels, factor_names, opt.hpdi_level);
  } else {
    const auto draws = read_draws(est_dir / "draws.csv", n, R, est.at("prior").at("M_b").get<int>(),
                                  est.at("prior").at("M_sigma").get<int>());
    summary = significance_filter(draws, opt.hpdi_level);
  }

  const auto dir = cfg.analysis_dir();
  const auto& labels = panel.node_labels;
  auto sector = [&](int i) { return panel.sector_names[panel.sector_of[i]]; };
  Json files = Json::object();
  Json tables = Json::object();
  auto emit = [&](const std::string& name, const std::vector<std::string>& columns, const std::string& body) {
    files[name] = write_file(dir / name, body);
    tables[name] = columns;
  };

  {  // densities over time
    const std::vector<std::string> cols{"date", "layer", "level", "density"};
    std::ostringstream out;
    CsvWriter w(out);
    w.row(cols);
    for (int t = 0; t < panel.T; ++t)
      for (Layer l : kLayers)
        for (double level : {opt.density_level, opt.edge_level})
          w.row({panel.dates[t], std::string(layer_name(l)), format_double(level),
                 format_double(density(loaded.panel.pvalues[index(l)][t], level))});
    emit("densities.csv", cols, out.str());
  }
  {  // significant edge impacts
    const std::vector<std::string> cols{"layer",      "factor",     "target",     "source", "target_sector",
                                        "source_sector", "mean", "hpdi_lower", "hpdi_upper", "effect"};
    std::ostringstream out;
    CsvWriter w(out);
    w.row(cols);
    for (Layer l : kLayers)
      for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& c = summary.at(l, r, i, j);
            if (!c.significant) continue;
            w.row({std::string(layer_name(l)), factor_names[r], labels[i], labels[j], sector(i), sector(j),
                   format_double(c.mean), format_double(c.hpd.lower), format_double(c.hpd.upper),
                   c.mean < 0.0 ? "increases_probability" : "decreases_probability"});
          }
    emit("edge_impacts.csv", cols, out.str());
  }
  {  // sector net effects
    const int S = static_cast<int>(panel.sector_names.size());
    const auto mats = sector_net_effects(summary, panel.sector_of, S);
    const std::vector<std::string> cols{"layer", "factor", "target_sector", "source_sector", "net_effect"};
    std::ostringstream out;
    CsvWriter w(out);
    w.row(cols);
    for (Layer l : kLayers)
      for (int r = 0; r < R; ++r)
        for (int a = 0; a < S; ++a)
          for (int b = 0; b < S; ++b)
            w.row({std::string(layer_name(l)), factor_names[r], panel.sector_names[a], panel.sector_names[b],
                   std::to_string(mats[index(l)][r](a, b))});
    emit("sector_effects.csv", cols, out.str());
  }
  {  // per-node impact aggregates
    const auto agg = impact_aggregates(summary);
    const std::vector<std::string> cols{"layer",  "factor",  "node",    "sector",  "in_pos",
                                        "in_neg", "out_pos", "out_neg", "btw_pos", "btw_neg"};
    std::ostringstream out;
    CsvWriter w(out);
    w.row(cols);
    for (Layer l : kLayers)
      for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i) {
          const auto& v = agg[index(l)][r][i];
          w.row({std::string(layer_name(l)), factor_names[r], labels[i], sector(i), format_double(v.in_pos),
                 format_double(v.in_neg), format_double(v.out_pos), format_double(v.out_neg),
                 format_double(v.btw_pos), format_double(v.btw_neg)});
        }
    emit("node_impacts.csv", cols, out.str());
  }

  const int before = snapshot_index(panel.dates, opt.before_date, true);
  const int after = snapshot_index(panel.dates, opt.after_date, false);
  {  // centralities at the snapshots, and tercile movers between them
    const std::vector<std::string> cols{"snapshot",   "date",         "layer",      "node",
                                        "sector",     "in_degree",    "out_degree", "total_degree",
                                        "betweenness"};
    const std::vector<std::string> mover_cols{"layer", "node", "sector", "betweenness_before", "betweenness_after"};
    std::ostringstream out, movers;
    CsvWriter w(out), wm(movers);
    w.row(cols);
    wm.row(mover_cols);
    for (Layer l : kLayers) {
      std::vector<double> btw[2];
      for (int k = 0; k < 2; ++k) {
        const int t = k == 0 ? before : after;
        const auto adj = adjacency_from_pvalues(loaded.panel.pvalues[index(l)][t], opt.edge_level);
        const auto din = degree(adj, DegreeKind::In);
        const auto dout = degree(adj, DegreeKind::Out);
        btw[k] = betweenness(adj);
        for (int i = 0; i < n; ++i)
          w.row({k == 0 ? "before" : "after", panel.dates[t], std::string(layer_name(l)), labels[i], sector(i),
                 std::to_string(din[i]), std::to_string(dout[i]), std::to_string(din[i] + dout[i]),
                 format_double(btw[k][i])});
      }
      for (int i : tercile_movers(btw[0], btw[1]))
        wm.row({std::string(layer_name(l)), labels[i], sector(i), format_double(btw[0][i]),
                format_double(btw[1][i])});
    }
    emit("centrality.csv", cols, out.str());
    emit("tercile_movers.csv", mover_cols, movers.str());
  }

  Json index;
  index["kind"] = "analysis";
  index["upstream"] = {{"estimate_manifest", sha256_file(est_dir / "manifest.json")},
                       {"panel_manifest", loaded.manifest_hash}};
  index["hpdi_level"] = opt.hpdi_level;
  index["density_levels"] = {opt.density_level, opt.edge_level};
  index["edge_level"] = opt.edge_level;
  index["snapshots"] = {{"before", panel.dates[before]}, {"after", panel.dates[after]}};
  index["layers"] = Json::array();
  for (Layer l : kLayers)
    index["layers"].push_back({{"name", std::string(layer_name(l))}, {"code", std::string(layer_code(l))}});
  index["sign_convention"] =
      "coefficients act on the transformed p-value: a negative coefficient raises the edge probability "
      "(effect = increases_probability)";
  index["tables"] = tables;
  index["files"] = files;
  write_json(dir / "index.json", index);
  std::clog << "analyze: wrote " << files.size() << " tables to " << dir.string() << "\n";
}

namespace {

std::vector<std::string> weekly_dates(const std::string& start, int count) {
  auto d = week_ending_friday(parse_date(start));
  std::vector<std::string> out;
  for (int t = 0; t < count; ++t, d += std::chrono::days{7}) out.push_back(format_date(d));
  return out;
}

FactorSeries random_factors(int T, int R, const std::vector<std::string>& dates, Rng& rng) {
  FactorSeries f;
  f.values.resize(T, R);
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < R; ++r) f.values(t, r) = rng.normal();
  for (int r = 0; r < R; ++r) f.names.push_back("factor" + std::to_string(r + 1));
  f.dates = dates;
  standardize(f);
  return f;
}

// Each off-diagonal entry is zero with probability `sparsity`, else +-value.
Eigen::MatrixXd sparse_matrix(int n, double sparsity, double value, Rng& rng) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const bool nonzero = rng.uniform() >= sparsity;
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      if (nonzero) m(i, j) = sign * value;
    }
  return m;
}

std::string run_ini(const SyntheticSpec& spec, bool with_prices) {
  std::ostringstream out;
  out << "[paths]\n";
  if (with_prices) out << "prices = prices.csv\nsectors = sectors.csv\n";
  out << "factors = factors.csv\noutput = .\n\n";
  out << "[granger]\nwindow = " << spec.window << "\nlag = " << spec.lag << "\n\n";
  out << "[sampler]\niters = " << spec.iters << "\nburn = " << spec.burn << "\nthin = " << spec.thin
      << "\nseed = " << spec.seed << "\n";
  return out.str();
}

}  // namespace

void cmd_simulate(const SyntheticSpec& spec, const fs::path& out) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = spec.n;
  std::vector<std::string> labels, sectors;
  for (int i = 0; i < n; ++i) {
    labels.push_back(node_label(i, n));
    sectors.push_back("S" + std::to_string(i % spec.n_sectors + 1));
  }
  {
    std::ostringstream s;
    CsvWriter w(s);
    w.row({"firm_id", "sector"});
    for (int i = 0; i < n; ++i) w.row({labels[i], sectors[i]});
    write_file(out / "sectors.csv", s.str());
  }

  if (spec.mode == SimulationMode::Panel) {
    const auto dates = weekly_dates(spec.start_date, spec.T);
    const auto factors = random_factors(spec.T, spec.R, dates, rng);
    ExtractedPanel ex;
    auto& panel = ex.response;
    panel.n = n;
    panel.T = spec.T;
    panel.node_labels = labels;
    panel.dates = dates;
    for (int s = 1; s <= spec.n_sectors; ++s) panel.sector_names.push_back("S" + std::to_string(s));
    for (int i = 0; i < n; ++i) panel.sector_of.push_back(i % spec.n_sectors);

    std::ostringstream truth_b, truth_s;
    CsvWriter wb(truth_b), ws(truth_s);
    wb.row({"layer", "factor", "target", "source", "value"});
    ws.row({"layer", "node", "sigma2"});
    const boost::math::normal_distribution<double> std_normal;
    const double sigma2 = spec.noise_scale * spec.noise_scale;
    for (Layer l : kLayers) {
      std::vector<Eigen::MatrixXd> B;
      for (int r = 0; r < spec.R; ++r) {
        B.push_back(sparse_matrix(n, spec.sparsity, spec.coef_value, rng));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j)
              wb.row({std::string(layer_name(l)), factors.names[r], labels[i], labels[j], format_double(B[r](i, j))});
      }
      for (int i = 0; i < n; ++i) ws.row({std::string(layer_name(l)), labels[i], format_double(sigma2)});
      auto& y = panel.y[index(l)];
      auto& pv = ex.pvalues[index(l)];
      for (int t = 0; t < spec.T; ++t) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, std::nan(""));
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            double v = spec.noise_scale * rng.normal();
            for (int r = 0; r < spec.R; ++r) v += B[r](i, j) * factors.values(t, r);
            m(i, j) = v;
            p(i, j) = boost::math::cdf(std_normal, v);  // the p-value a probit response implies
          }
        y.push_back(std::move(m));
        pv.push_back(std::move(p));
      }
      ex.flagged[index(l)].assign(spec.T, 0);
      ex.trimmed[index(l)].assign(spec.T, 0);
    }
    write_file(out / "truth_B.csv", truth_b.str());
    write_file(out / "truth_sigma2.csv", truth_s.str());
    write_file(out / "factors.csv", factors_csv(factors));
    Json config{{"simulated", true}, {"seed", spec.seed}, {"granger", granger_json(GrangerConfig{})}};
    write_panel(out / "panel", ex, nullptr, config);
    write_file(out / "run.ini", run_ini(spec, false));
    return;
  }

  // Prices mode: sparse VAR(1) returns with a volatility channel fed by lagged
  // returns, turned into weekly OHLC quotes.
  const int weeks = spec.T + 1;
  const auto dates = weekly_dates(spec.start_date, weeks);
  Eigen::MatrixXd A = sparse_matrix(n, spec.sparsity, spec.coef_value, rng);
  A.diagonal().setConstant(0.1);
  const double radius = A.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.6) A *= 0.6 / radius;
  const Eigen::MatrixXd G = sparse_matrix(n, spec.sparsity, spec.coef_value, rng);

  const double shock = 0.02 * spec.noise_scale;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n), logvol = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd close = Eigen::VectorXd::Constant(n, std::log(100.0));
  std::vector<Quote> quotes;
  for (int t = 0; t < weeks; ++t) {
    Eigen::VectorXd r_next = A * r;
    Eigen::VectorXd lv_next = 0.5 * logvol + 20.0 * (G * r.cwiseAbs());
    for (int i = 0; i < n; ++i) {
      lv_next(i) += 0.2 * rng.normal();
      r_next(i) += shock * std::exp(0.5 * lv_next(i)) * rng.normal();
    }
    r = r_next;
    logvol = lv_next;
    for (int i = 0; i < n; ++i) {
      const double o = close(i) + 0.002 * rng.normal();
      const double c = o + r(i);
      const double range = shock * std::exp(0.5 * logvol(i));
      const double h = std::max(o, c) + range * std::abs(rng.normal());
      const double lo = std::min(o, c) - range * std::abs(rng.normal());
      close(i) = c;
      quotes.push_back({labels[i], sectors[i], parse_date(dates[t]), std::exp(o), std::exp(h), std::exp(lo),
                        std::exp(c), std::exp(c)});
    }
  }
  write_file(out / "prices.csv", quotes_csv(quotes));
  // factors on the signal weeks (the first price week has no return)
  const std::vector<std::string> signal_dates(dates.begin() + 1, dates.end());
  write_file(out / "factors.csv", factors_csv(random_factors(spec.T, spec.R, signal_dates, rng)));

  std::ostringstream truth;
  CsvWriter w(truth);
  w.row({"block", "target", "source", "value"});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      w.row({"return_var", labels[i], labels[j], format_double(A(i, j))});
      w.row({"return_to_vol", labels[i], labels[j], format_double(G(i, j))});
    }
  write_file(out / "truth_var.csv", truth.str());
  write_file(out / "run.ini", run_ini(spec, true));
}

}  // namespace matnet
