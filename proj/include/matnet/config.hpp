#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "matnet/gibbs.hpp"
#include "matnet/granger.hpp"
#include "matnet/prior.hpp"

namespace matnet {

struct AnalysisConfig {
  double hpdi_level = 0.95;
  double density_level = 0.01;
  double edge_level = 0.001;  // adjacency threshold for centralities
  std::string before_date;    // snapshot dates; empty means first / last slice
  std::string after_date;

  void validate() const;
};

/// INI file with sections [paths], [granger], [prior], [sampler], [analysis].
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::filesystem::path prices;
  std::filesystem::path sectors;  // optional firm_id,sector table
  std::filesystem::path factors;
  std::filesystem::path output;
  GrangerConfig granger;
  PriorConfig prior;
  SamplerConfig sampler;
  AnalysisConfig analysis;

  std::filesystem::path panel_dir() const { return output / "panel"; }
  std::filesystem::path estimate_dir() const { return output / "estimate"; }
  std::filesystem::path analysis_dir() const { return output / "analysis"; }
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

enum class SimulationMode { Panel, Prices };

/// Synthetic data recipe. Panel mode draws the response directly from the
/// regression model; prices mode simulates weekly OHLC quotes from a sparse
/// VAR so the whole pipeline can run on it.
struct SyntheticSpec {
  SimulationMode mode = SimulationMode::Panel;
  int n = 5;
  int T = 60;           // panel slices, or signal weeks in prices mode
  int R = 2;
  double sparsity = 0.7;  // fraction of exactly-zero true coefficients
  double coef_value = 0.5;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  int n_sectors = 2;
  std::string start_date = "2016-01-01";  // a Friday
  // settings copied into the generated run config
  int window = 104;
  int lag = 1;
  int iters = 2000;
  int burn = 1000;
  int thin = 2;

  void validate() const;
};

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

}  // namespace matnet
