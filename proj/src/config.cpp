#include "qsolchain/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qsolchain/csv.hpp"
#include "qsolchain/version.hpp"

namespace qsol::cli {

using protocol::ProtocolConfig;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("line " + std::to_string(line) + ": invalid number '" +
                     v + "'");
  return out;
}

long parse_long(const std::string& v, int line) {
  long out = 0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("line " + std::to_string(line) + ": invalid integer '" +
                     v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) parts.push_back(trim(cur));
  return parts;
}

}  // namespace

ProtocolConfig parse_config_text(const std::string& text) {
  ProtocolConfig cfg;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line) +
                       ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("line " + std::to_string(line) +
                       ": expected 'key = value'");
    if (!seen.insert(key).second)
      throw ParseError("line " + std::to_string(line) + ": duplicate key '" +
                       key + "'");

    if (key == "two_s") {
      cfg.two_s = static_cast<int>(parse_long(value, line));
    } else if (key == "N") {
      const long n = parse_long(value, line);
      if (n < 0) throw ValidationError("N");
      cfg.n_sites = static_cast<std::size_t>(n);
    } else if (key == "n_A") {
      const long n = parse_long(value, line);
      if (n < 0) throw ValidationError("n_A");
      cfg.site_a = static_cast<std::size_t>(n);
    } else if (key == "n_B") {
      const long n = parse_long(value, line);
      if (n < 0) throw ValidationError("n_B");
      cfg.site_b = static_cast<std::size_t>(n);
    } else if (key == "g") {
      cfg.g = parse_double(value, line);
    } else if (key == "h_A") {
      cfg.h_a = parse_double(value, line);
    } else if (key == "h_B") {
      cfg.h_b = parse_double(value, line);
    } else if (key == "beta") {
      cfg.beta = parse_double(value, line);
    } else if (key == "lambda_beta") {
      cfg.lambda_beta = parse_double(value, line);
    } else if (key == "h") {
      cfg.zeeman_h = parse_double(value, line);
    } else if (key == "phi0") {
      cfg.phi0 = parse_double(value, line);
    } else if (key == "dt") {
      cfg.dt = parse_double(value, line);
    } else if (key == "t0") {
      cfg.t0_opt = parse_double(value, line);
    } else if (key == "t1") {
      cfg.t1_opt = parse_double(value, line);
    } else if (key == "t2") {
      cfg.t2_opt = parse_double(value, line);
    } else if (key == "t1_window") {
      cfg.t1_window = parse_double(value, line);
    } else if (key == "t1_step") {
      cfg.t1_step = parse_double(value, line);
    } else if (key == "t3_window") {
      cfg.t3_window = parse_double(value, line);
    } else if (key == "t3_step") {
      cfg.t3_step = parse_double(value, line);
    } else if (key == "n_theta") {
      const long n = parse_long(value, line);
      if (n < 0) throw ValidationError("n_theta");
      cfg.n_theta = static_cast<std::size_t>(n);
    } else if (key == "n_phi") {
      const long n = parse_long(value, line);
      if (n < 0) throw ValidationError("n_phi");
      cfg.n_phi = static_cast<std::size_t>(n);
    } else if (key == "qubit_A_theta") {
      cfg.qubit_a_theta = parse_double(value, line);
    } else if (key == "qubit_A_phi") {
      cfg.qubit_a_phi = parse_double(value, line);
    } else if (key == "qubit_B_theta") {
      cfg.qubit_b_theta = parse_double(value, line);
    } else if (key == "qubit_B_phi") {
      cfg.qubit_b_phi = parse_double(value, line);
    } else if (key == "s_list") {
      cfg.s_list.clear();
      for (const auto& part : split_list(value))
        cfg.s_list.push_back(static_cast<int>(parse_long(part, line)));
    } else if (key == "profile_offsets") {
      cfg.profile_offsets.clear();
      for (const auto& part : split_list(value))
        cfg.profile_offsets.push_back(parse_double(part, line));
    } else {
      throw ParseError("line " + std::to_string(line) + ": unknown key '" +
                       key + "'");
    }
  }

  if (seen.count("h") && seen.count("lambda_beta"))
    throw ValidationError("h");  // ambiguous: give either h or lambda_beta

  cfg.validate();
  return cfg;
}

ProtocolConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

void emit(std::ostream& out, const std::string& key, double v) {
  out << key << " = " << csv::format_double(v) << "\n";
}

void emit(std::ostream& out, const std::string& key, long v) {
  out << key << " = " << v << "\n";
}

}  // namespace

std::string serialize_config(const ProtocolConfig& cfg) {
  std::ostringstream out;
  emit(out, "two_s", static_cast<long>(cfg.two_s));
  emit(out, "N", static_cast<long>(cfg.n_sites));
  emit(out, "n_A", static_cast<long>(cfg.site_a));
  emit(out, "n_B", static_cast<long>(cfg.site_b));
  emit(out, "g", cfg.g);
  emit(out, "h_A", cfg.h_a);
  emit(out, "h_B", cfg.h_b);
  emit(out, "beta", cfg.beta);
  // The Zeeman field is always written resolved; lambda is derivable.
  emit(out, "h", cfg.soliton().h);
  emit(out, "phi0", cfg.phi0);
  emit(out, "dt", cfg.dt);
  emit(out, "t0", cfg.t0());
  if (cfg.t1_opt) emit(out, "t1", *cfg.t1_opt);
  if (cfg.t2_opt) emit(out, "t2", *cfg.t2_opt);
  emit(out, "t1_window", cfg.t1_window);
  emit(out, "t1_step", cfg.t1_step);
  emit(out, "t3_window", cfg.t3_window);
  emit(out, "t3_step", cfg.t3_step);
  emit(out, "n_theta", static_cast<long>(cfg.n_theta));
  emit(out, "n_phi", static_cast<long>(cfg.n_phi));
  emit(out, "qubit_A_theta", cfg.qubit_a_theta);
  emit(out, "qubit_A_phi", cfg.qubit_a_phi);
  emit(out, "qubit_B_theta", cfg.qubit_b_theta);
  emit(out, "qubit_B_phi", cfg.qubit_b_phi);

  out << "s_list = ";
  for (std::size_t i = 0; i < cfg.s_list.size(); ++i)
    out << (i ? "," : "") << cfg.s_list[i];
  out << "\n";
  if (!cfg.profile_offsets.empty()) {
    out << "profile_offsets = ";
    for (std::size_t i = 0; i < cfg.profile_offsets.size(); ++i)
      out << (i ? "," : "") << csv::format_double(cfg.profile_offsets[i]);
    out << "\n";
  }
  return out.str();
}

std::string manifest_text(const ProtocolConfig& cfg, const ManifestInfo& info) {
  std::ostringstream out;
  out << "# qsolchain run manifest; usable directly as --config\n";
  out << "# version: " << kVersion << "\n";
  out << "# command: " << info.command << "\n";
  out << "# kernel: " << info.kernel << "\n";
  out << "# threads: " << info.threads << "\n";
  const auto sol = cfg.soliton();
  out << "# derived: lambda = " << csv::format_double(sol.lambda)
      << ", v = " << csv::format_double(sol.v)
      << ", tau = " << csv::format_double(sol.tau)
      << ", epsilon = " << csv::format_double(sol.epsilon)
      << ", timescale_ratio = " << csv::format_double(cfg.timescale_ratio())
      << "\n";
  if (!sol.continuum_ok)
    out << "# warning: soliton narrower than 3 sites; continuum profile is "
           "approximate\n";
  if (cfg.timescale_ratio() >= 0.1)
    out << "# warning: frozen-chain time-scale ratio >= 0.1\n";
  for (const auto& [key, v] : info.derived)
    out << "# " << key << " = " << csv::format_double(v) << "\n";
  for (const auto& [key, v] : info.timings_seconds)
    out << "# timing " << key << "_seconds = " << csv::format_double(v) << "\n";

  ProtocolConfig resolved = cfg;
  for (const auto& [key, v] : info.resolved) {
    if (key == "t0") resolved.t0_opt = v;
    if (key == "t1") resolved.t1_opt = v;
    if (key == "t2") resolved.t2_opt = v;
  }
  out << serialize_config(resolved);
  return out.str();
}

}  // namespace qsol::cli
