#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "matnet/commands.hpp"
#include "matnet/config.hpp"
#include "matnet/error.hpp"
#include "matnet/granger.hpp"

namespace {

template <class T>
void override_with(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Granger-network extraction and Bayesian matrix-variate impact regression"};
  app.require_subcommand(1);

  std::string config_path, spec_path, out_dir;
  std::optional<int> window, lag, iters, burn, thin, threads, gthreads;
  std::optional<std::string> transform;
  std::optional<std::uint64_t> seed;
  std::optional<double> hpdi, density_level, edge_level;

  auto* extract = app.add_subcommand("extract", "prices -> four-layer p-value panel");
  extract->add_option("--config", config_path, "run config (INI)")->required();
  extract->add_option("--window", window, "rolling window length in weeks");
  extract->add_option("--lag", lag, "VAR lag order");
  extract->add_option("--transform", transform, "identity | probit | logit");
  extract->add_option("--threads", gthreads, "worker threads");

  auto* estimate = app.add_subcommand("estimate", "panel + factors -> posterior draws and summary");
  estimate->add_option("--config", config_path, "run config (INI)")->required();
  estimate->add_option("--iters", iters, "total sweeps");
  estimate->add_option("--burn", burn, "burn-in sweeps");
  estimate->add_option("--thin", thin, "keep every k-th sweep after burn-in");
  estimate->add_option("--seed", seed, "random seed");
  estimate->add_option("--threads", threads, "worker threads (1 = bit-reproducible)");

  auto* analyze = app.add_subcommand("analyze", "summary + p-values -> analytics tables");
  analyze->add_option("--config", config_path, "run config (INI)")->required();
  analyze->add_option("--hpdi", hpdi, "HPD interval level");
  analyze->add_option("--density-level", density_level, "p-value level for densities");
  analyze->add_option("--edge-level", edge_level, "p-value level for centrality adjacency");

  auto* simulate = app.add_subcommand("simulate", "write synthetic data and a run config");
  simulate->add_option("--spec", spec_path, "synthetic spec (INI)")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) {
      matnet::cmd_simulate(matnet::load_synthetic_spec(spec_path), out_dir);
      return 0;
    }
    auto cfg = matnet::load_run_config(config_path);
    override_with(window, cfg.granger.window);
    override_with(lag, cfg.granger.lag);
    override_with(gthreads, cfg.granger.threads);
    if (transform) cfg.granger.transform = matnet::parse_transform(*transform);
    override_with(iters, cfg.sampler.n_iter);
    override_with(burn, cfg.sampler.n_burn);
    override_with(thin, cfg.sampler.thin);
    override_with(seed, cfg.sampler.seed);
    override_with(threads, cfg.sampler.threads);
    override_with(hpdi, cfg.analysis.hpdi_level);
    override_with(density_level, cfg.analysis.density_level);
    override_with(edge_level, cfg.analysis.edge_level);
    cfg.validate();

    if (*extract) matnet::cmd_extract(cfg);
    if (*estimate) matnet::cmd_estimate(cfg);
    if (*analyze) matnet::cmd_analyze(cfg);
    return 0;
  } catch (const matnet::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const matnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const matnet::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
