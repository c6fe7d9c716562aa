#include "matnet/config.hpp"

#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "matnet/error.hpp"

namespace matnet {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

pt::ptree read_ini(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("config " + path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return tree;
}

// Unknown keys are almost always typos; refuse them.
void check_keys(const pt::ptree& tree, const std::string& section, const std::set<std::string>& allowed) {
  const auto child = tree.get_child_optional(section);
  if (!child) return;
  for (const auto& [key, _] : *child)
    if (!allowed.count(key)) throw UsageError("config: unknown key '" + section + "." + key + "'");
}

template <class T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  try {
    // get_optional<T> quietly yields nothing on a bad conversion; get<T> throws
    if (tree.get_optional<std::string>(key)) target = tree.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw UsageError("config: bad value for '" + key + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void AnalysisConfig::validate() const {
  for (double v : {hpdi_level, edge_level})
    if (!(v > 0.0 && v < 1.0)) throw UsageError("analysis: hpdi and edge levels must lie in (0, 1)");
  // a density at level 1 is the share of unflagged cells, a useful sanity column
  if (!(density_level > 0.0 && density_level <= 1.0)) throw UsageError("analysis: density level must lie in (0, 1]");
  if (!before_date.empty()) parse_date(before_date);
  if (!after_date.empty()) parse_date(after_date);
}

void RunConfig::validate() const {
  if (output.empty()) throw UsageError("config: paths.output is required");
  granger.validate();
  prior.validate();
  sampler.validate();
  analysis.validate();
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  const auto tree = read_ini(path);
  check_keys(tree, "paths", {"prices", "sectors", "factors", "output"});
  check_keys(tree, "granger", {"window", "lag", "transform", "clip_eps", "step", "threads"});
  check_keys(tree, "prior",
             {"M_b", "M_sigma", "phi_b", "phi_sigma", "s2", "a0", "b0", "a1", "b1", "a2", "b2", "a3", "b3"});
  check_keys(tree, "sampler",
             {"iters", "burn", "thin", "seed", "threads", "rwmh_target", "rwmh_rate", "rwmh_initial_scale"});
  check_keys(tree, "analysis", {"hpdi", "density_level", "edge_level", "before", "after"});
  for (const auto& [section, _] : tree)
    if (!std::set<std::string>{"paths", "granger", "prior", "sampler", "analysis"}.count(section))
      throw UsageError("config: unknown section '" + section + "'");

  const fs::path base = fs::absolute(path).parent_path();
  RunConfig c;
  std::string s;
  s.clear(), read(tree, "paths.prices", s), c.prices = resolve(base, s);
  s.clear(), read(tree, "paths.sectors", s), c.sectors = resolve(base, s);
  s.clear(), read(tree, "paths.factors", s), c.factors = resolve(base, s);
  s.clear(), read(tree, "paths.output", s), c.output = resolve(base, s);

  read(tree, "granger.window", c.granger.window);
  read(tree, "granger.lag", c.granger.lag);
  std::string transform = to_string(c.granger.transform);
  read(tree, "granger.transform", transform);
  c.granger.transform = parse_transform(transform);
  read(tree, "granger.clip_eps", c.granger.clip_eps);
  read(tree, "granger.step", c.granger.step);
  read(tree, "granger.threads", c.granger.threads);

  auto& p = c.prior;
  read(tree, "prior.M_b", p.M_b);
  read(tree, "prior.M_sigma", p.M_sigma);
  read(tree, "prior.phi_b", p.phi_b);
  read(tree, "prior.phi_sigma", p.phi_sigma);
  read(tree, "prior.s2", p.s2);
  read(tree, "prior.a0", p.a0);
  read(tree, "prior.b0", p.b0);
  read(tree, "prior.a1", p.a1);
  read(tree, "prior.b1", p.b1);
  read(tree, "prior.a2", p.a2);
  read(tree, "prior.b2", p.b2);
  read(tree, "prior.a3", p.a3);
  read(tree, "prior.b3", p.b3);

  auto& sm = c.sampler;
  read(tree, "sampler.iters", sm.n_iter);
  read(tree, "sampler.burn", sm.n_burn);
  read(tree, "sampler.thin", sm.thin);
  read(tree, "sampler.seed", sm.seed);
  read(tree, "sampler.threads", sm.threads);
  read(tree, "sampler.rwmh_target", sm.rwmh_target_accept);
  read(tree, "sampler.rwmh_rate", sm.rwmh_adapt_rate);
  read(tree, "sampler.rwmh_initial_scale", sm.rwmh_initial_scale);

  read(tree, "analysis.hpdi", c.analysis.hpdi_level);
  read(tree, "analysis.density_level", c.analysis.density_level);
  read(tree, "analysis.edge_level", c.analysis.edge_level);
  read(tree, "analysis.before", c.analysis.before_date);
  read(tree, "analysis.after", c.analysis.after_date);
  return c;
}

void SyntheticSpec::validate() const {
  if (n < 2) throw UsageError("simulate: n must be >= 2");
  if (R < 1) throw UsageError("simulate: R must be >= 1");
  if (lag < 1) throw UsageError("simulate: lag must be >= 1");
  if (T <= 2 * lag + 2) throw UsageError("simulate: T must exceed 2*lag + 2");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw UsageError("simulate: sparsity must lie in [0, 1]");
  if (!(noise_scale > 0.0)) throw UsageError("simulate: noise_scale must be positive");
  if (n_sectors < 1 || n_sectors > n) throw UsageError("simulate: n_sectors must lie in [1, n]");
  if (mode == SimulationMode::Prices && T < window) throw UsageError("simulate: prices mode needs T >= window");
  parse_date(start_date);
}

SyntheticSpec load_synthetic_spec(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("spec file not found: " + path.string());
  const auto tree = read_ini(path);
  for (const auto& [section, _] : tree)
    if (section != "synthetic") throw UsageError("spec: unknown section '" + section + "'");
  check_keys(tree, "synthetic",
             {"mode", "n", "T", "R", "sparsity", "coef_value", "noise_scale", "seed", "n_sectors", "start_date",
              "window", "lag", "iters", "burn", "thin"});
  SyntheticSpec s;
  std::string mode = "panel";
  read(tree, "synthetic.mode", mode);
  if (mode == "panel")
    s.mode = SimulationMode::Panel;
  else if (mode == "prices")
    s.mode = SimulationMode::Prices;
  else
    throw UsageError("spec: mode must be panel or prices");
  read(tree, "synthetic.n", s.n);
  read(tree, "synthetic.T", s.T);
  read(tree, "synthetic.R", s.R);
  read(tree, "synthetic.sparsity", s.sparsity);
  read(tree, "synthetic.coef_value", s.coef_value);
  read(tree, "synthetic.noise_scale", s.noise_scale);
  read(tree, "synthetic.seed", s.seed);
  read(tree, "synthetic.n_sectors", s.n_sectors);
  read(tree, "synthetic.start_date", s.start_date);
  read(tree, "synthetic.window", s.window);
  read(tree, "synthetic.lag", s.lag);
  read(tree, "synthetic.iters", s.iters);
  read(tree, "synthetic.burn", s.burn);
  read(tree, "synthetic.thin", s.thin);
  s.validate();
  return s;
}

}  // namespace matnet
