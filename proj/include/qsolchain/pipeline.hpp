#pragma once

#include <string>

#include "qsolchain/config.hpp"

// Run orchestration behind the CLI subcommands.  Every command writes its
// CSV outputs plus a manifest.cfg into the output directory; outputs are
// deterministic for a fixed config and independent of the worker count.

namespace qsol::cli {

struct RunOptions {
  std::string out_dir;
  unsigned threads = 0;  // 0 = auto
  bool force = false;    // allow writing into a non-empty directory
};

void run_soliton(const protocol::ProtocolConfig& cfg, const RunOptions& opts);
void run_stage1(const protocol::ProtocolConfig& cfg, const RunOptions& opts);
void run_stage2(const protocol::ProtocolConfig& cfg, const RunOptions& opts);
void run_concurrence(const protocol::ProtocolConfig& cfg,
                     const RunOptions& opts);
void run_pipeline(const protocol::ProtocolConfig& cfg, const RunOptions& opts);

// Fast oracle checks over all modules; prints one line per check and
// returns 0 when everything passes, 3 otherwise.
int run_selftest();

}  // namespace qsol::cli
