#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matnet/analytics.hpp"
#include "matnet/gibbs.hpp"
#include "matnet/granger.hpp"
#include "matnet/matnorm.hpp"

namespace matnet {

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes `content` (creating parent directories) and returns its SHA-256.
std::string write_file(const std::filesystem::path& path, const std::string& content);
std::string write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);

/// Checks every {"files": {name: hash}} entry of a manifest against the files
/// next to it; DataError on a mismatch.
void verify_manifest_files(const std::filesystem::path& dir, const Json& manifest);

/// Price table with columns firm_id,date,open,high,low,close,total_return_close
/// (an optional sector column is honoured). `sectors` may name a firm_id,sector
/// table that overrides it.
std::vector<Quote> read_quotes(const std::filesystem::path& prices, const std::filesystem::path& sectors = {});
std::string quotes_csv(const std::vector<Quote>& quotes);

/// Extraction artifacts: one long-format CSV per layer (date,i,j,value), one
/// p-value CSV per layer, optional signals CSV and manifest.json.
Json write_panel(const std::filesystem::path& dir, const ExtractedPanel& panel, const SignalPanel* signals,
                 const Json& config);

struct LoadedPanel {
  ExtractedPanel panel;
  Json manifest;
  std::string manifest_hash;
};
LoadedPanel read_panel(const std::filesystem::path& dir);

/// Wide factor table: date column followed by one column per factor.
FactorSeries read_factors(const std::filesystem::path& path);
std::string factors_csv(const FactorSeries& f);
/// Rows of `f` matching `dates` in order; DataError if one is missing.
FactorSeries align_factors(const FactorSeries& f, const std::vector<std::string>& dates);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;
};
/// Zero mean, unit (sample) variance per column. DataError on a constant factor.
Standardization standardize(FactorSeries& f);

/// One row per (sweep, layer, block); values are ';'-joined. Blocks: B (r,i,j
/// order, off-diagonal only), sigma2, p, q, mu, gamma2, alpha, beta, loglik.
std::string draws_csv(const PosteriorDraws& draws, const SamplerConfig& sampler);
PosteriorDraws read_draws(const std::filesystem::path& path, int n, int R, int M_b, int M_sigma);

/// Columns: layer,factor,target,source,mean,sd,hpdi_lower,hpdi_upper,significant.
std::string summary_csv(const PosteriorSummary& summary, const std::vector<std::string>& labels,
                        const std::vector<std::string>& factor_names);
PosteriorSummary read_summary(const std::filesystem::path& path, const std::vector<std::string>& labels,
                              const std::vector<std::string>& factor_names, double level);

Json diagnostics_json(const PosteriorDraws& draws);

}  // namespace matnet
