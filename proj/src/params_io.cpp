#include "windemos/params_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "windemos/dataset.hpp"

namespace windemos {

namespace {

const char* kCorrMagic = "windemos-correlation v1";
const char* kParamsMagic = "windemos-params v1";

std::map<std::string, std::string> read_kv(std::istream& in, const std::string& terminator) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == terminator) return kv;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find(' ');
    if (pos == std::string::npos) {
      throw Error(ErrorCode::MalformedInput, "bad key-value line: " + line);
    }
    kv[line.substr(0, pos)] = line.substr(pos + 1);
  }
  if (!terminator.empty()) {
    throw Error(ErrorCode::MalformedInput, "missing '" + terminator + "' terminator");
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorCode::MalformedInput, "missing key: " + key);
  return it->second;
}

std::vector<double> parse_list(const std::string& text) {
  std::istringstream ss(text);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok));
  return out;
}

}  // namespace

void write_correlation_file(const std::string& path, const CorrelationFit& fit,
                            std::optional<double> sector1_corr) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << kCorrMagic << "\n";
  out << "k " << fit.model.k << "\n";
  out << "r " << format_double(fit.model.r) << "\n";
  out << "s " << format_double(fit.model.s) << "\n";
  out << "phi " << format_double(fit.model.phi) << "\n";
  out << "rss " << format_double(fit.weighted_rss) << "\n";
  out << "phi_identified " << (fit.phi_identified ? 1 : 0) << "\n";
  if (sector1_corr) out << "sector1_corr " << format_double(*sector1_corr) << "\n";
  for (const auto& res : fit.residuals) {
    out << "residual_" << res.sector << " " << format_double(res.center_dir) << " "
        << format_double(res.corr) << " " << format_double(res.weight) << " "
        << format_double(res.residual) << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_correlation_file(const std::string& path, const CorrelationFile& file) {
  CorrelationFit fit;
  fit.model = file.model;
  fit.weighted_rss = file.weighted_rss;
  fit.phi_identified = file.phi_identified;
  write_correlation_file(path, fit, file.sector1_corr);
}

CorrelationFile load_correlation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (!magic.empty() && magic.back() == '\r') magic.pop_back();
  if (magic != kCorrMagic) {
    throw Error(ErrorCode::MalformedInput, path + ": not a correlation file");
  }
  const auto kv = read_kv(in, "");
  CorrelationFile f;
  f.model.k = static_cast<int>(parse_double(require(kv, "k")));
  f.model.r = parse_double(require(kv, "r"));
  f.model.s = parse_double(require(kv, "s"));
  f.model.phi = parse_double(require(kv, "phi"));
  f.weighted_rss = kv.count("rss") ? parse_double(kv.at("rss")) : 0.0;
  f.phi_identified = !kv.count("phi_identified") || kv.at("phi_identified") == "1";
  if (kv.count("sector1_corr")) f.sector1_corr = parse_double(kv.at("sector1_corr"));
  return f;
}

void write_params_file(const std::string& path, const std::vector<ParameterRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << kParamsMagic << "\n";
  for (const auto& rec : records) {
    const EmosParameters& p = rec.params;
    out << "record\n";
    out << "scope " << to_string(p.scope) << "\n";
    out << "station " << (p.station_id.empty() ? "-" : p.station_id) << "\n";
    out << "fitted_at " << format_iso8601(p.fitted_at) << "\n";
    out << "a_u " << format_double(p.means.a_u) << "\n";
    out << "b_u " << format_double(p.means.b_u) << "\n";
    out << "a_v " << format_double(p.means.a_v) << "\n";
    out << "b_v " << format_double(p.means.b_v) << "\n";
    if (p.means.general()) {
      out << "b_u_members";
      for (double b : p.means.b_u_members) out << " " << format_double(b);
      out << "\nb_v_members";
      for (double b : p.means.b_v_members) out << " " << format_double(b);
      out << "\n";
    }
    out << "c_u " << format_double(p.vars.c_u) << "\n";
    out << "d_u " << format_double(p.vars.d_u) << "\n";
    out << "c_v " << format_double(p.vars.c_v) << "\n";
    out << "d_v " << format_double(p.vars.d_v) << "\n";
    out << "corr_r " << format_double(p.corr.r) << "\n";
    out << "corr_s " << format_double(p.corr.s) << "\n";
    out << "corr_k " << p.corr.k << "\n";
    out << "corr_phi " << format_double(p.corr.phi) << "\n";
    out << "var_converged " << (p.var_converged ? 1 : 0) << "\n";
    out << "fallback_regional " << (rec.fallback_regional ? 1 : 0) << "\n";
    out << "end\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

std::vector<ParameterRecord> load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kParamsMagic) {
    throw Error(ErrorCode::MalformedInput, path + ": not a parameters file");
  }
  std::vector<ParameterRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line != "record") {
      throw Error(ErrorCode::MalformedInput, path + ": expected 'record', got '" + line + "'");
    }
    const auto kv = read_kv(in, "end");
    ParameterRecord rec;
    EmosParameters& p = rec.params;
    p.scope = scope_from_string(require(kv, "scope"));
    const std::string station = require(kv, "station");
    p.station_id = station == "-" ? "" : station;
    p.fitted_at = parse_iso8601(require(kv, "fitted_at"));
    p.means.a_u = parse_double(require(kv, "a_u"));
    p.means.b_u = parse_double(require(kv, "b_u"));
    p.means.a_v = parse_double(require(kv, "a_v"));
    p.means.b_v = parse_double(require(kv, "b_v"));
    if (kv.count("b_u_members")) {
      p.means.b_u_members = parse_list(kv.at("b_u_members"));
      p.means.b_v_members = parse_list(require(kv, "b_v_members"));
    }
    p.vars.c_u = parse_double(require(kv, "c_u"));
    p.vars.d_u = parse_double(require(kv, "d_u"));
    p.vars.c_v = parse_double(require(kv, "c_v"));
    p.vars.d_v = parse_double(require(kv, "d_v"));
    p.corr.r = parse_double(require(kv, "corr_r"));
    p.corr.s = parse_double(require(kv, "corr_s"));
    p.corr.k = static_cast<int>(parse_double(require(kv, "corr_k")));
    p.corr.phi = parse_double(require(kv, "corr_phi"));
    p.var_converged = !kv.count("var_converged") || kv.at("var_converged") == "1";
    rec.fallback_regional = kv.count("fallback_regional") && kv.at("fallback_regional") == "1";
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace windemos
