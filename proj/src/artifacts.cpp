#include "iwmev/artifacts.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iwmev/errors.hpp"

namespace iwmev {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  }
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingArtifact, "missing artifact " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json parse_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number '" + cell + "'");
    }
  }
  return out;
}

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i]))) return false;
  }
  return true;
}

}  // namespace

void write_tpm(const std::string& dir, const Tpm& tpm, const std::vector<double>& p_grid, double dt_sdp,
               const std::vector<std::string>& sources) {
  std::ostringstream csv;
  csv << "p_from_w";
  for (double p : p_grid) csv << ",to_" << fmt(p);
  csv << '\n';
  for (std::size_t i = 0; i < tpm.n; ++i) {
    csv << fmt(p_grid[i]);
    for (std::size_t j = 0; j < tpm.n; ++j) csv << ',' << fmt(tpm.at(i, j));
    csv << '\n';
  }
  const std::string text = csv.str();
  json side;
  side["p_grid"] = p_grid;
  side["dt_sdp"] = dt_sdp;
  side["sources"] = sources;
  side["counts"] = tpm.counts;
  side["checksum"] = checksum_hex(text);
  write_text(dir + "/tpm.csv", text);
  write_text(dir + "/tpm.json", side.dump(2));
}

TpmArtifact read_tpm(const std::string& dir, const std::vector<double>& expected_p_grid,
                     double expected_dt) {
  const std::string text = read_text(dir + "/tpm.csv");
  const json side = parse_json(dir + "/tpm.json");
  TpmArtifact art;
  try {
    art.p_grid = side.at("p_grid").get<std::vector<double>>();
    art.dt_sdp = side.at("dt_sdp").get<double>();
    art.sources = side.at("sources").get<std::vector<std::string>>();
    art.checksum = side.at("checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, dir + "/tpm.json: " + e.what());
  }
  if (checksum_hex(text) != art.checksum) {
    throw Error(ErrorCode::ChecksumMismatch, dir + "/tpm.csv does not match its sidecar checksum");
  }
  if (!same_grid(art.p_grid, expected_p_grid) || std::abs(art.dt_sdp - expected_dt) > 1e-12) {
    throw Error(ErrorCode::GridMismatch, "TPM demand grid or dt differs from the active config");
  }
  const std::size_t n = art.p_grid.size();
  std::vector<double> p;
  p.reserve(n * n);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<double> row = parse_csv_row(line);
    if (row.size() != n + 1) {
      throw Error(ErrorCode::ParseError, dir + "/tpm.csv: row has the wrong width");
    }
    p.insert(p.end(), row.begin() + 1, row.end());
    ++rows;
  }
  if (rows != n) {
    throw Error(ErrorCode::ParseError, dir + "/tpm.csv: wrong number of rows");
  }
  art.tpm.n = n;
  art.tpm.p = std::move(p);
  if (side.contains("counts")) {
    art.tpm.counts = side.at("counts").get<std::vector<double>>();
  }
  return art;
}

void write_policy(const std::string& dir, const TrainResult& trained, const SdpSettings& settings,
                  const SkidConfig& skid, const std::string& tpm_checksum) {
  const Policy& pol = trained.policy;
  const StateGrid& g = pol.grid;
  std::ostringstream csv;
  csv << "ip,iv,ilf,ilr,p_dem_w,v_mps,lambda_f,lambda_r,p_front_w\n";
  for (std::size_t s = 0; s < pol.front_power.size(); ++s) {
    const StateGrid::Tuple t = g.decompose(s);
    csv << t.ip << ',' << t.iv << ',' << t.ilf << ',' << t.ilr << ',' << fmt(g.p[t.ip]) << ','
        << fmt(g.v[t.iv]) << ',' << fmt(g.lam[t.ilf]) << ',' << fmt(g.lam[t.ilr]) << ','
        << fmt(pol.front_power[s]) << '\n';
  }
  const std::string text = csv.str();
  json side;
  side["grid"] = {{"p", g.p}, {"v", g.v}, {"lambda", g.lam}, {"u", g.u}};
  side["settings"] = {{"gamma", settings.gamma},     {"alpha", settings.alpha},
                      {"eval_tol", settings.eval_tol}, {"tie_tol", settings.tie_tol},
                      {"dt_sdp", settings.dt_sdp},   {"nominal_soc", settings.nominal_soc}};
  side["skid"] = {{"lambda_crit", skid.lambda_crit}, {"extend_to_traction", skid.extend_to_traction}};
  side["policy_changes"] = trained.changes;
  side["eval_sweeps"] = trained.eval_sweeps;
  side["tpm_checksum"] = tpm_checksum;
  side["checksum"] = checksum_hex(text);
  write_text(dir + "/policy.csv", text);
  write_text(dir + "/policy.json", side.dump(2));
}

PolicyArtifact read_policy(const std::string& dir, const StateGrid& expected_grid) {
  const std::string text = read_text(dir + "/policy.csv");
  const json side = parse_json(dir + "/policy.json");
  PolicyArtifact art;
  StateGrid& g = art.policy.grid;
  try {
    const json& jg = side.at("grid");
    g.p = jg.at("p").get<std::vector<double>>();
    g.v = jg.at("v").get<std::vector<double>>();
    g.lam = jg.at("lambda").get<std::vector<double>>();
    g.u = jg.at("u").get<std::vector<double>>();
    art.tpm_checksum = side.at("tpm_checksum").get<std::string>();
    art.checksum = side.at("checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, dir + "/policy.json: " + e.what());
  }
  if (checksum_hex(text) != art.checksum) {
    throw Error(ErrorCode::ChecksumMismatch, dir + "/policy.csv does not match its sidecar checksum");
  }
  if (!same_grid(g.p, expected_grid.p) || !same_grid(g.v, expected_grid.v) ||
      !same_grid(g.lam, expected_grid.lam) || !same_grid(g.u, expected_grid.u)) {
    throw Error(ErrorCode::GridMismatch, "policy grid differs from the active config");
  }
  art.policy.front_power.assign(g.num_states(), 0.0);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<double> row = parse_csv_row(line);
    if (row.size() != 9) {
      throw Error(ErrorCode::ParseError, dir + "/policy.csv: row has the wrong width");
    }
    const auto idx = [&](int k) { return static_cast<std::size_t>(row[k]); };
    if (idx(0) >= g.p.size() || idx(1) >= g.v.size() || idx(2) >= g.lam.size() || idx(3) >= g.lam.size()) {
      throw Error(ErrorCode::ParseError, dir + "/policy.csv: state index out of range");
    }
    art.policy.front_power[g.state_index(idx(0), g.rest_index(idx(1), idx(2), idx(3)))] = row[8];
    ++rows;
  }
  if (rows != g.num_states()) {
    throw Error(ErrorCode::ParseError, dir + "/policy.csv: wrong number of rows");
  }
  return art;
}

void write_rule(const std::string& path, const GrdpFit& fit, const std::string& source) {
  json j = {{"a", fit.rule.a}, {"b", fit.rule.b}, {"r2", fit.r2}, {"source", source}};
  write_text(path, j.dump(2));
}

LinearRule read_rule(const std::string& path) {
  const json j = parse_json(path);
  LinearRule rule;
  try {
    rule.a = j.at("a").get<double>();
    rule.b = j.at("b").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!std::isfinite(rule.a) || !std::isfinite(rule.b)) {
    throw Error(ErrorCode::ParseError, path + ": rule coefficients must be finite");
  }
  return rule;
}

}  // namespace iwmev
