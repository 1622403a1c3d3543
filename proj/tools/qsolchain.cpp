#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qsolchain/config.hpp"
#include "qsolchain/errors.hpp"
#include "qsolchain/kernels.hpp"
#include "qsolchain/pipeline.hpp"
#include "qsolchain/version.hpp"

// Exit codes: 0 success, 1 usage/config error, 2 runtime/numerical error,
// 3 selftest failure.

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "Run configuration file (key = value lines)");
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
  cmd->add_option("--threads", args.threads,
                  "Worker threads (0 = all hardware threads)");
  cmd->add_flag("--force", args.force,
                "Write into a non-empty output directory");
}

qsol::protocol::ProtocolConfig load_config(const CommonArgs& args) {
  auto cfg = args.config_path.empty()
                 ? qsol::protocol::ProtocolConfig{}
                 : qsol::cli::parse_config(args.config_path);
  cfg.validate();
  return cfg;
}

unsigned resolve_thread_arg(const CommonArgs& args) {
  if (args.threads != 0) return args.threads;
  if (const char* env = std::getenv("QSOLCHAIN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soliton-mediated qubit entanglement on a large-S spin chain"};
  app.set_version_flag("--version", std::string(qsol::kVersion));
  app.require_subcommand(1);

  CommonArgs soliton_args, stage1_args, stage2_args, conc_args, pipe_args;
  auto* soliton = app.add_subcommand(
      "soliton", "Classical soliton run: profile and conservation CSVs");
  add_common(soliton, soliton_args);
  auto* stage1 = app.add_subcommand(
      "stage1", "Qubit-spin entanglement entropy vs time");
  add_common(stage1, stage1_args);
  auto* stage2 = app.add_subcommand(
      "stage2", "Site entropy profiles for the configured spin list");
  add_common(stage2, stage2_args);
  auto* conc = app.add_subcommand(
      "concurrence", "Concurrence and mu spectrum vs t - t2");
  add_common(conc, conc_args);
  auto* pipe = app.add_subcommand("pipeline", "All stages, all outputs");
  add_common(pipe, pipe_args);
  auto* selftest =
      app.add_subcommand("selftest", "Run built-in oracle checks");
  bool list_kernels = false;
  selftest->add_flag("--kernels", list_kernels,
                     "Also list available kernel variants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto dispatch = [](CLI::App* cmd, const CommonArgs& args,
                             auto runner) {
      qsol::cli::RunOptions opts;
      opts.out_dir = args.out_dir;
      opts.threads = resolve_thread_arg(args);
      opts.force = args.force;
      runner(load_config(args), opts);
      (void)cmd;
    };

    if (soliton->parsed()) dispatch(soliton, soliton_args, qsol::cli::run_soliton);
    if (stage1->parsed()) dispatch(stage1, stage1_args, qsol::cli::run_stage1);
    if (stage2->parsed()) dispatch(stage2, stage2_args, qsol::cli::run_stage2);
    if (conc->parsed()) dispatch(conc, conc_args, qsol::cli::run_concurrence);
    if (pipe->parsed()) dispatch(pipe, pipe_args, qsol::cli::run_pipeline);
    if (selftest->parsed()) {
      if (list_kernels) {
        std::cout << "kernel variants:";
        for (const auto* k : qsol::kernels::available())
          std::cout << ' ' << k->name;
        std::cout << " (active: " << qsol::kernels::active().name << ")\n";
      }
      return qsol::cli::run_selftest();
    }
  } catch (const qsol::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const qsol::ValidationError& e) {
    std::cerr << "config error: invalid value for key '" << e.what() << "'\n";
    return 1;
  } catch (const qsol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
