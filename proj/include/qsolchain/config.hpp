#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qsolchain/protocol.hpp"

namespace qsol::cli {

// Flat `key = value` format, `#` starts a comment, unknown keys rejected,
// missing keys take the documented defaults.  Throws ParseError (with line
// number) or ValidationError (naming the key).
protocol::ProtocolConfig parse_config_text(const std::string& text);
protocol::ProtocolConfig parse_config(const std::string& path);

// The resolved configuration as config-file text, one key per line, floats
// at full precision.  Feeding it back through parse_config reproduces the
// run bit for bit.
std::string serialize_config(const protocol::ProtocolConfig& cfg);

// Run metadata written alongside every output set.  The manifest file is
// itself a valid --config file: resolved times are plain keys, everything
// non-reproducible (timings, tool version) lives in comments.
struct ManifestInfo {
  std::string command;
  std::string kernel;
  unsigned threads = 1;
  std::vector<std::pair<std::string, double>> resolved;  // t0/t1/t2 etc.
  std::vector<std::pair<std::string, double>> derived;
  std::vector<std::pair<std::string, double>> timings_seconds;
};

std::string manifest_text(const protocol::ProtocolConfig& cfg,
                          const ManifestInfo& info);

}  // namespace qsol::cli
