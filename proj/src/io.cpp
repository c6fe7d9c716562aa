#include "matnet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "matnet/csv.hpp"
#include "matnet/error.hpp"

namespace matnet {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
  return sha256_hex(content);
}

std::string write_json(const fs::path& path, const Json& doc) { return write_file(path, doc.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing artifact " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void verify_manifest_files(const fs::path& dir, const Json& manifest) {
  if (!manifest.contains("files")) return;
  for (const auto& [name, hash] : manifest["files"].items()) {
    const auto p = dir / name;
    if (!fs::exists(p)) throw DataError("missing artifact " + p.string());
    if (sha256_file(p) != hash.get<std::string>())
      throw DataError("hash mismatch for " + p.string() + "; rerun the upstream stage");
  }
}

std::vector<Quote> read_quotes(const fs::path& prices, const fs::path& sectors) {
  const auto t = read_csv(prices);
  const auto c_firm = t.column("firm_id"), c_date = t.column("date");
  const auto c_o = t.column("open"), c_h = t.column("high"), c_l = t.column("low"), c_c = t.column("close");
  const auto c_tr = t.column("total_return_close");
  const bool has_sector = t.has_column("sector");
  std::map<std::string, std::string> sector_of;
  if (!sectors.empty()) {
    const auto s = read_csv(sectors);
    const auto f = s.column("firm_id"), c = s.column("sector");
    for (const auto& row : s.rows) sector_of[row[f]] = row[c];
  }
  std::vector<Quote> quotes;
  quotes.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Quote q;
    q.firm = row[c_firm];
    if (q.firm.empty()) throw DataError(t.source + ": line " + std::to_string(t.line_of(r)) + ": empty firm_id");
    try {
      q.date = parse_date(row[c_date]);
    } catch (const DataError& e) {
      throw DataError(t.source + ": line " + std::to_string(t.line_of(r)) + ", column 'date': " + e.what());
    }
    q.open = t.number(r, c_o);
    q.high = t.number(r, c_h);
    q.low = t.number(r, c_l);
    q.close = t.number(r, c_c);
    q.total_return_close = t.number(r, c_tr);
    if (has_sector) q.sector = row[t.column("sector")];
    if (auto it = sector_of.find(q.firm); it != sector_of.end()) q.sector = it->second;
    quotes.push_back(std::move(q));
  }
  if (!sectors.empty())
    for (const auto& q : quotes)
      if (!sector_of.count(q.firm)) throw DataError(sectors.string() + ": no sector for firm " + q.firm);
  return quotes;
}

std::string quotes_csv(const std::vector<Quote>& quotes) {
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"firm_id", "date", "open", "high", "low", "close", "total_return_close"});
  for (const auto& q : quotes)
    w.row({q.firm, format_date(q.date), format_double(q.open), format_double(q.high), format_double(q.low),
           format_double(q.close), format_double(q.total_return_close)});
  return out.str();
}

namespace {

std::string layer_file(Layer l) { return "layer_" + std::string(layer_name(l)) + ".csv"; }
std::string pvalue_file(Layer l) { return "pvalues_" + std::string(layer_name(l)) + ".csv"; }

std::string long_csv(const std::vector<Eigen::MatrixXd>& slices, const std::vector<std::string>& dates,
                     const std::vector<std::string>& labels, const char* value_name) {
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"date", "i", "j", value_name});
  for (std::size_t t = 0; t < slices.size(); ++t)
    for (Eigen::Index i = 0; i < slices[t].rows(); ++i)
      for (Eigen::Index j = 0; j < slices[t].cols(); ++j)
        if (i != j) w.row({dates[t], labels[i], labels[j], format_double(slices[t](i, j))});
  return out.str();
}

void read_long_csv(const fs::path& path, const std::map<std::string, int>& date_index,
                   const std::map<std::string, int>& label_index, std::vector<Eigen::MatrixXd>& slices) {
  const auto t = read_csv(path);
  const auto cd = t.column("date"), ci = t.column("i"), cj = t.column("j");
  const std::size_t cv = 3;
  if (t.header.size() != 4) throw DataError(path.string() + ": expected 4 columns");
  auto lookup = [&](const std::map<std::string, int>& m, const std::string& key, std::size_t row) {
    const auto it = m.find(key);
    if (it == m.end())
      throw DataError(path.string() + ": line " + std::to_string(t.line_of(row)) + ": unknown key '" + key + "'");
    return it->second;
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int s = lookup(date_index, t.rows[r][cd], r);
    const int i = lookup(label_index, t.rows[r][ci], r);
    const int j = lookup(label_index, t.rows[r][cj], r);
    if (i == j) throw DataError(path.string() + ": line " + std::to_string(t.line_of(r)) + ": diagonal cell");
    slices[s](i, j) = t.number(r, cv);
  }
}

}  // namespace

Json write_panel(const fs::path& dir, const ExtractedPanel& extracted, const SignalPanel* signals,
                 const Json& config) {
  const auto& panel = extracted.response;
  Json files = Json::object();
  for (Layer l : kLayers) {
    files[layer_file(l)] = write_file(dir / layer_file(l), long_csv(panel.y[index(l)], panel.dates,
                                                                     panel.node_labels, "value"));
    files[pvalue_file(l)] = write_file(dir / pvalue_file(l), long_csv(extracted.pvalues[index(l)], panel.dates,
                                                                      panel.node_labels, "pvalue"));
  }
  Json manifest;
  manifest["kind"] = "panel";
  manifest["n"] = panel.n;
  manifest["T"] = panel.T;
  manifest["labels"] = panel.node_labels;
  std::vector<std::string> sectors;
  for (int s : panel.sector_of) sectors.push_back(panel.sector_names[s]);
  manifest["sectors"] = sectors;
  manifest["dates"] = panel.dates;
  manifest["config"] = config;
  Json flagged = Json::object();
  for (Layer l : kLayers) flagged[std::string(layer_name(l))] = extracted.flagged[index(l)];
  manifest["flagged"] = flagged;
  Json trimmed = Json::object();
  for (Layer l : kLayers)
    if (!extracted.trimmed[index(l)].empty()) trimmed[std::string(layer_name(l))] = extracted.trimmed[index(l)];
  manifest["trimmed"] = trimmed;
  if (signals) {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"date", "firm", "return", "volatility"});
    for (int t = 0; t < signals->T(); ++t)
      for (int i = 0; i < signals->n(); ++i)
        w.row({signals->dates[t], signals->firms[i], format_double(signals->returns(i, t)),
               format_double(signals->volatility(i, t))});
    files["signals.csv"] = write_file(dir / "signals.csv", out.str());
    manifest["negative_gk_flags"] = signals->negative_gk_flags;
  }
  manifest["files"] = files;
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

LoadedPanel read_panel(const fs::path& dir) {
  LoadedPanel out;
  const auto manifest_path = dir / "manifest.json";
  out.manifest = read_json(manifest_path);
  out.manifest_hash = sha256_file(manifest_path);
  verify_manifest_files(dir, out.manifest);
  const auto& m = out.manifest;
  auto& panel = out.panel.response;
  try {
    panel.n = m.at("n").get<int>();
    panel.T = m.at("T").get<int>();
    panel.node_labels = m.at("labels").get<std::vector<std::string>>();
    panel.dates = m.at("dates").get<std::vector<std::string>>();
    const auto sectors = m.at("sectors").get<std::vector<std::string>>();
    std::map<std::string, int> sector_index;
    for (const auto& s : sectors) sector_index.emplace(s, 0);
    for (auto& [name, idx] : sector_index) {
      idx = static_cast<int>(panel.sector_names.size());
      panel.sector_names.push_back(name);
    }
    for (const auto& s : sectors) panel.sector_of.push_back(sector_index[s]);
    for (Layer l : kLayers) {
      const auto key = std::string(layer_name(l));
      if (m.contains("flagged") && m["flagged"].contains(key))
        out.panel.flagged[index(l)] = m["flagged"][key].get<std::vector<int>>();
      else
        out.panel.flagged[index(l)].assign(panel.T, 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  std::map<std::string, int> date_index, label_index;
  for (int t = 0; t < panel.T; ++t) date_index[panel.dates.at(t)] = t;
  for (int i = 0; i < panel.n; ++i) label_index[panel.node_labels.at(i)] = i;
  for (Layer l : kLayers) {
    auto& y = panel.y[index(l)];
    auto& pv = out.panel.pvalues[index(l)];
    y.assign(panel.T, Eigen::MatrixXd::Zero(panel.n, panel.n));
    pv.assign(panel.T, Eigen::MatrixXd::Constant(panel.n, panel.n, std::nan("")));
    read_long_csv(dir / layer_file(l), date_index, label_index, y);
    if (fs::exists(dir / pvalue_file(l))) read_long_csv(dir / pvalue_file(l), date_index, label_index, pv);
  }
  panel.validate();
  return out;
}

FactorSeries read_factors(const fs::path& path) {
  const auto t = read_csv(path);
  const auto cd = t.column("date");
  FactorSeries f;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != cd) {
      cols.push_back(c);
      f.names.push_back(t.header[c]);
    }
  if (cols.empty()) throw DataError(path.string() + ": no factor columns");
  f.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    f.dates.push_back(t.rows[r][cd]);
    parse_date(f.dates.back());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = t.number(r, cols[k]);
      if (!std::isfinite(v))
        throw DataError(path.string() + ": line " + std::to_string(t.line_of(r)) + ", column '" + t.header[cols[k]] +
                        "': missing or non-finite value");
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return f;
}

std::string factors_csv(const FactorSeries& f) {
  std::ostringstream out;
  CsvWriter w(out);
  std::vector<std::string> header{"date"};
  header.insert(header.end(), f.names.begin(), f.names.end());
  w.row(header);
  for (int t = 0; t < f.T(); ++t) {
    std::vector<std::string> row{f.dates[t]};
    for (int r = 0; r < f.R(); ++r) row.push_back(format_double(f.values(t, r)));
    w.row(row);
  }
  return out.str();
}

FactorSeries align_factors(const FactorSeries& f, const std::vector<std::string>& dates) {
  std::map<std::string, int> at;
  for (int t = 0; t < f.T(); ++t)
    if (!at.emplace(f.dates[t], t).second) throw DataError("factors: duplicate date " + f.dates[t]);
  FactorSeries out;
  out.names = f.names;
  out.dates = dates;
  out.values.resize(static_cast<Eigen::Index>(dates.size()), f.R());
  for (std::size_t t = 0; t < dates.size(); ++t) {
    const auto it = at.find(dates[t]);
    if (it == at.end()) throw DataError("factors: no row for panel date " + dates[t]);
    out.values.row(static_cast<Eigen::Index>(t)) = f.values.row(it->second);
  }
  return out;
}

Standardization standardize(FactorSeries& f) {
  Standardization s;
  const auto T = f.values.rows();
  if (T < 2) throw DataError("standardize: need at least 2 rows");
  for (Eigen::Index r = 0; r < f.values.cols(); ++r) {
    auto col = f.values.col(r);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(T - 1));
    if (!(sd > 0.0)) throw DataError("standardize: factor '" + f.names[r] + "' is constant");
    col = (col.array() - mean) / sd;
    s.mean.push_back(mean);
    s.sd.push_back(sd);
  }
  return s;
}

namespace {

std::string join(const double* v, std::size_t count) {
  std::string s;
  for (std::size_t k = 0; k < count; ++k) {
    if (k) s += ';';
    s += format_double(v[k]);
  }
  return s;
}

std::vector<double> split(const std::string& s, const std::string& where) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(';', start);
    const auto piece = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    double v = 0.0;
    if (piece == "NaN") {
      v = std::nan("");
    } else {
      const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
      if (ec != std::errc{} || ptr != piece.data() + piece.size())
        throw DataError(where + ": bad number '" + piece + "'");
    }
    out.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string draws_csv(const PosteriorDraws& draws, const SamplerConfig& sampler) {
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"sweep", "layer", "block", "values"});
  const int n = draws.n, R = draws.R;
  for (std::size_t s = 0; s < draws.count(); ++s) {
    const auto sweep = std::to_string(sampler.n_burn + static_cast<int>(s + 1) * sampler.thin);
    for (Layer l : kLayers) {
      const auto& d = draws.layers[index(l)];
      const std::string name(layer_name(l));
      std::vector<double> b;
      b.reserve(static_cast<std::size_t>(R) * n * (n - 1));
      for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j) b.push_back(d.coef(s, r, i, j));
      w.row({sweep, name, "B", join(b.data(), b.size())});
      w.row({sweep, name, "sigma2", join(d.sigma2.data() + s * n, n)});
      w.row({sweep, name, "p", join(d.p.data() + s * d.M_b, d.M_b)});
      w.row({sweep, name, "q", join(d.q.data() + s * d.M_sigma, d.M_sigma)});
      w.row({sweep, name, "mu", join(d.mu.data() + s * d.M_b, d.M_b)});
      w.row({sweep, name, "gamma2", join(d.gamma2.data() + s * d.M_b, d.M_b)});
      w.row({sweep, name, "alpha", join(d.alpha.data() + s * d.M_sigma, d.M_sigma)});
      w.row({sweep, name, "beta", join(d.beta.data() + s * d.M_sigma, d.M_sigma)});
      w.row({sweep, name, "loglik", format_double(d.loglik[s])});
    }
  }
  return out.str();
}

PosteriorDraws read_draws(const fs::path& path, int n, int R, int M_b, int M_sigma) {
  const auto t = read_csv(path);
  const auto c_layer = t.column("layer"), c_block = t.column("block"), c_values = t.column("values");
  PosteriorDraws out;
  out.n = n;
  out.R = R;
  for (auto& d : out.layers) {
    d.n = n;
    d.R = R;
    d.M_b = M_b;
    d.M_sigma = M_sigma;
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.string() + ": line " + std::to_string(t.line_of(r));
    Layer layer;
    try {
      layer = layer_from_name(row[c_layer]);
    } catch (const std::exception&) {
      throw DataError(where + ": unknown layer '" + row[c_layer] + "'");
    }
    auto& d = out.layers[index(layer)];
    const auto v = split(row[c_values], where);
    const auto& block = row[c_block];
    auto expect = [&](std::size_t k) {
      if (v.size() != k) throw DataError(where + ": block " + block + " has " + std::to_string(v.size()) + " values");
    };
    if (block == "B") {
      expect(static_cast<std::size_t>(R) * n * (n - 1));
      std::size_t k = 0;
      for (int rr = 0; rr < R; ++rr)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) d.B.push_back(i == j ? 0.0 : v[k++]);
      ++d.saved;
    } else if (block == "sigma2") {
      expect(n), d.sigma2.insert(d.sigma2.end(), v.begin(), v.end());
    } else if (block == "p") {
      expect(M_b), d.p.insert(d.p.end(), v.begin(), v.end());
    } else if (block == "q") {
      expect(M_sigma), d.q.insert(d.q.end(), v.begin(), v.end());
    } else if (block == "mu") {
      expect(M_b), d.mu.insert(d.mu.end(), v.begin(), v.end());
    } else if (block == "gamma2") {
      expect(M_b), d.gamma2.insert(d.gamma2.end(), v.begin(), v.end());
    } else if (block == "alpha") {
      expect(M_sigma), d.alpha.insert(d.alpha.end(), v.begin(), v.end());
    } else if (block == "beta") {
      expect(M_sigma), d.beta.insert(d.beta.end(), v.begin(), v.end());
    } else if (block == "loglik") {
      expect(1), d.loglik.push_back(v[0]);
    } else {
      throw DataError(where + ": unknown block '" + block + "'");
    }
  }
  for (const auto& d : out.layers)
    if (d.saved != out.layers[0].saved || d.loglik.size() != d.saved)
      throw DataError(path.string() + ": inconsistent draw counts across layers or blocks");
  return out;
}

std::string summary_csv(const PosteriorSummary& summary, const std::vector<std::string>& labels,
                        const std::vector<std::string>& factor_names) {
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"layer", "factor", "target", "source", "mean", "sd", "hpdi_lower", "hpdi_upper", "significant"});
  for (Layer l : kLayers)
    for (int r = 0; r < summary.R(); ++r)
      for (int i = 0; i < summary.n(); ++i)
        for (int j = 0; j < summary.n(); ++j) {
          if (i == j) continue;
          const auto& c = summary.at(l, r, i, j);
          w.row({std::string(layer_name(l)), factor_names[r], labels[i], labels[j], format_double(c.mean),
                 format_double(c.sd), format_double(c.hpd.lower), format_double(c.hpd.upper),
                 c.significant ? "1" : "0"});
        }
  return out.str();
}

PosteriorSummary read_summary(const fs::path& path, const std::vector<std::string>& labels,
                              const std::vector<std::string>& factor_names, double level) {
  const auto t = read_csv(path);
  const int n = static_cast<int>(labels.size());
  const int R = static_cast<int>(factor_names.size());
  std::map<std::string, int> node, factor;
  for (int i = 0; i < n; ++i) node[labels[i]] = i;
  for (int r = 0; r < R; ++r) factor[factor_names[r]] = r;
  const auto c_layer = t.column("layer"), c_factor = t.column("factor"), c_t = t.column("target"),
             c_s = t.column("source"), c_mean = t.column("mean"), c_sd = t.column("sd"),
             c_lo = t.column("hpdi_lower"), c_hi = t.column("hpdi_upper"), c_sig = t.column("significant");
  PosteriorSummary out(n, R, level);
  std::size_t seen = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.string() + ": line " + std::to_string(t.line_of(r));
    auto find = [&](const std::map<std::string, int>& m, const std::string& key) {
      const auto it = m.find(key);
      if (it == m.end()) throw DataError(where + ": unknown key '" + key + "'");
      return it->second;
    };
    Layer layer;
    try {
      layer = layer_from_name(row[c_layer]);
    } catch (const std::exception&) {
      throw DataError(where + ": unknown layer '" + row[c_layer] + "'");
    }
    auto& c = out.at(layer, find(factor, row[c_factor]), find(node, row[c_t]), find(node, row[c_s]));
    c.mean = t.number(r, c_mean);
    c.sd = t.number(r, c_sd);
    c.hpd = {t.number(r, c_lo), t.number(r, c_hi)};
    c.significant = row[c_sig] == "1";
    ++seen;
  }
  if (seen != static_cast<std::size_t>(kNumLayers) * R * n * (n - 1))
    throw DataError(path.string() + ": expected one row per off-diagonal coefficient");
  return out;
}

Json diagnostics_json(const PosteriorDraws& draws) {
  auto moments = [](const std::vector<double>& v, std::size_t width, std::size_t saved) {
    Json mean = Json::array(), sd = Json::array();
    for (std::size_t k = 0; k < width; ++k) {
      double m = 0.0, ss = 0.0;
      for (std::size_t s = 0; s < saved; ++s) m += v[s * width + k];
      m /= static_cast<double>(saved);
      for (std::size_t s = 0; s < saved; ++s) ss += (v[s * width + k] - m) * (v[s * width + k] - m);
      mean.push_back(m);
      sd.push_back(saved > 1 ? std::sqrt(ss / static_cast<double>(saved - 1)) : 0.0);
    }
    return Json{{"mean", mean}, {"sd", sd}};
  };
  Json out;
  out["draws"] = draws.count();
  Json layers = Json::object();
  for (Layer l : kLayers) {
    const auto& d = draws.layers[index(l)];
    Json j;
    j["alpha_accept_rate"] = std::vector<double>(d.alpha_accept_rate.data(),
                                                 d.alpha_accept_rate.data() + d.alpha_accept_rate.size());
    j["final_rwmh_scale"] = std::vector<double>(d.final_rwmh_scale.data(),
                                                d.final_rwmh_scale.data() + d.final_rwmh_scale.size());
    if (d.saved > 0) {
      j["loglik"] = moments(d.loglik, 1, d.saved);
      j["sigma2"] = moments(d.sigma2, d.n, d.saved);
      j["p"] = moments(d.p, d.M_b, d.saved);
      j["q"] = moments(d.q, d.M_sigma, d.saved);
      j["mu"] = moments(d.mu, d.M_b, d.saved);
      j["gamma2"] = moments(d.gamma2, d.M_b, d.saved);
      j["alpha"] = moments(d.alpha, d.M_sigma, d.saved);
      j["beta"] = moments(d.beta, d.M_sigma, d.saved);
    }
    layers[std::string(layer_name(l))] = j;
  }
  out["layers"] = layers;
  return out;
}

}  // namespace matnet
