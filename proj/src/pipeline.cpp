#include "qsolchain/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "qsolchain/csv.hpp"
#include "qsolchain/kernels.hpp"
#include "qsolchain/parallel.hpp"

namespace qsol::cli {

namespace fs = std::filesystem;
using protocol::ProtocolConfig;

namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

fs::path prepare_out_dir(const RunOptions& opts) {
  if (opts.out_dir.empty()) throw ValidationError("out");
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  if (!opts.force && !fs::is_empty(dir))
    throw Error("output directory '" + opts.out_dir +
                "' is not empty (use --force to overwrite)");
  return dir;
}

void warn_config(const ProtocolConfig& cfg) {
  if (!cfg.soliton().continuum_ok)
    std::cerr << "warning: soliton narrower than 3 sites; continuum profile "
                 "is approximate\n";
  if (cfg.timescale_ratio() >= 0.1)
    std::cerr << "warning: frozen-chain time-scale ratio (J/g) h sin(2 beta) "
              << csv::format_double(cfg.timescale_ratio()) << " >= 0.1\n";
}

void write_manifest(const fs::path& dir, const ProtocolConfig& cfg,
                    const ManifestInfo& info) {
  std::ofstream out(dir / "manifest.cfg", std::ios::binary);
  if (!out) throw Error("cannot write manifest");
  out << manifest_text(cfg, info);
}

std::vector<double> default_profile_offsets(const ProtocolConfig& cfg) {
  if (!cfg.profile_offsets.empty()) return cfg.profile_offsets;
  return {cfg.nominal_transfer_offset()};
}

void emit_soliton_files(const fs::path& dir, const ProtocolConfig& cfg,
                        const protocol::ReferenceRun& ref) {
  {
    csv::Writer w((dir / "soliton_profile.csv").string(),
                  {"n", "theta", "phi", "one_minus_cos_theta"});
    const auto frozen = cfg.frozen_chain();
    for (std::size_t n = 0; n < frozen.size(); ++n) {
      const auto& d = frozen.directions[n];
      w.row({static_cast<double>(n), d.theta, d.phi,
             1.0 - std::cos(d.theta)});
    }
    w.close();
  }
  {
    csv::Writer w((dir / "soliton_snapshots.csv").string(),
                  {"t", "n", "theta", "phi", "one_minus_cos_theta"});
    for (const auto& [t, config] : ref.snapshots)
      for (std::size_t n = 0; n < config.size(); ++n) {
        const auto& d = config.directions[n];
        w.row({t, static_cast<double>(n), d.theta, d.phi,
               1.0 - std::cos(d.theta)});
      }
    w.close();
  }
  {
    csv::Writer w((dir / "soliton_conservation.csv").string(),
                  {"t", "energy", "total_sz", "center"});
    for (std::size_t i = 0; i < ref.diag_offsets.size(); ++i)
      w.row({ref.diag_offsets[i], ref.energy[i], ref.total_sz[i],
             ref.center[i]});
    w.close();
  }
}

void emit_stage1_csv(const fs::path& dir, const protocol::Stage1Scan& scan) {
  csv::Writer w((dir / "stage1_entropy.csv").string(), {"t", "entropy"});
  for (std::size_t i = 0; i < scan.times.size(); ++i)
    w.row({scan.times[i], scan.entropy[i]});
  w.close();
}

// Stage-1 scan and f table for one spin value; t1 is the configured value
// when given, otherwise the scan argmax.
struct Stage1Data {
  protocol::Stage1Scan scan;
  double t1 = 0.0;
  protocol::FTable ftable;
};

Stage1Data stage1_for_spin(const ProtocolConfig& base, int two_s) {
  ProtocolConfig cfg = base;
  cfg.two_s = two_s;
  Stage1Data data;
  data.scan = protocol::scan_stage1(cfg, cfg.t1_window, cfg.t1_step);
  data.t1 = cfg.t1_opt ? *cfg.t1_opt : data.scan.t1;
  auto grid = std::make_shared<const scs::QuadratureGrid>(
      scs::build_quadrature(cfg.n_theta, cfg.n_phi, cfg.spin()));
  data.ftable =
      protocol::build_f_table(protocol::stage1_evolve(cfg, data.t1), grid);
  return data;
}

std::string spin_label(int two_s) {
  return "E_S" + csv::format_double(0.5 * two_s);
}

void emit_profile_csv(const fs::path& dir, const ProtocolConfig& cfg,
                      const std::vector<double>& offsets,
                      const std::vector<std::vector<std::vector<double>>>&
                          per_offset_per_spin) {
  std::vector<std::string> header{"t_minus_t1", "n"};
  for (const int two_s : cfg.s_list) header.push_back(spin_label(two_s));
  csv::Writer w((dir / "stage2_entropy.csv").string(), header);
  for (std::size_t oi = 0; oi < offsets.size(); ++oi)
    for (std::size_t n = 0; n < cfg.n_sites; ++n) {
      std::vector<double> row{offsets[oi], static_cast<double>(n)};
      for (std::size_t si = 0; si < cfg.s_list.size(); ++si)
        row.push_back(per_offset_per_spin[oi][si][n]);
      w.row(row);
    }
  w.close();
}

struct ConcurrenceScan {
  std::vector<double> offsets;
  std::vector<ent::ConcurrenceResult> results;
  double peak = 0.0;
  double peak_offset = 0.0;
};

ConcurrenceScan scan_concurrence(const ProtocolConfig& cfg,
                                 const num::DensityMatrix& rho0, double t2) {
  const protocol::Stage3Engine engine(cfg, rho0, t2);
  ConcurrenceScan scan;
  const long n = std::lround(cfg.t3_window / cfg.t3_step);
  scan.offsets.reserve(n + 1);
  scan.results.reserve(n + 1);
  const scs::SpinMagnitude spin = cfg.spin();
  for (long i = 0; i <= n; ++i) {
    const double off = static_cast<double>(i) * cfg.t3_step;
    const auto rho = engine.at(t2 + off);
    const auto c =
        ent::wootters_concurrence(protocol::two_qubit_state(rho, spin));
    if (c.concurrence > scan.peak) {
      scan.peak = c.concurrence;
      scan.peak_offset = off;
    }
    scan.offsets.push_back(off);
    scan.results.push_back(c);
  }
  return scan;
}

void emit_concurrence_csv(const fs::path& dir, const ConcurrenceScan& scan) {
  csv::Writer w((dir / "concurrence.csv").string(),
                {"t_minus_t2", "concurrence", "mu1", "mu2", "mu3", "mu4"});
  for (std::size_t i = 0; i < scan.offsets.size(); ++i) {
    const auto& r = scan.results[i];
    w.row({scan.offsets[i], r.concurrence, r.mu[0], r.mu[1], r.mu[2],
           r.mu[3]});
  }
  w.close();
}

}  // namespace

void run_soliton(const ProtocolConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  warn_config(cfg);
  const fs::path dir = prepare_out_dir(opts);
  Timer timer;

  std::vector<double> offsets = default_profile_offsets(cfg);
  offsets.insert(offsets.begin(), 0.0);
  const auto ref = protocol::run_reference(cfg, 1.0, offsets,
                                           /*search_arrival=*/false);
  emit_soliton_files(dir, cfg, ref);

  ManifestInfo info;
  info.command = "soliton";
  info.kernel = kernels::active().name;
  info.threads = par::resolve_threads(opts.threads);
  info.resolved = {{"t0", cfg.t0()}};
  info.timings_seconds = {{"soliton", timer.seconds()}};
  write_manifest(dir, cfg, info);
}

void run_stage1(const ProtocolConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  warn_config(cfg);
  const fs::path dir = prepare_out_dir(opts);
  Timer timer;

  const auto data = stage1_for_spin(cfg, cfg.two_s);
  emit_stage1_csv(dir, data.scan);

  ManifestInfo info;
  info.command = "stage1";
  info.kernel = kernels::active().name;
  info.threads = par::resolve_threads(opts.threads);
  info.resolved = {{"t0", cfg.t0()}, {"t1", data.t1}};
  info.derived = {{"stage1_max_entropy", data.scan.max_entropy},
                  {"f_table_grid_norm", data.ftable.grid_norm}};
  info.timings_seconds = {{"stage1", timer.seconds()}};
  write_manifest(dir, cfg, info);
}

void run_stage2(const ProtocolConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  warn_config(cfg);
  const fs::path dir = prepare_out_dir(opts);
  const unsigned threads = par::resolve_threads(opts.threads);

  Timer stage1_timer;
  std::vector<Stage1Data> per_spin;
  for (const int two_s : cfg.s_list)
    per_spin.push_back(stage1_for_spin(cfg, two_s));
  const double stage1_s = stage1_timer.seconds();

  Timer bundle_timer;
  const std::vector<double> offsets = default_profile_offsets(cfg);
  auto grid = std::make_shared<const scs::QuadratureGrid>(
      scs::build_quadrature(cfg.n_theta, cfg.n_phi, cfg.spin()));
  // Trajectories are S-independent; index snapshots by elapsed offset.
  const auto bundle =
      protocol::BundleTrajectories::integrate(cfg, grid, 0.0, offsets, threads);
  const double bundle_s = bundle_timer.seconds();

  Timer profile_timer;
  std::vector<std::vector<std::vector<double>>> profiles;  // [offset][spin][n]
  for (const double off : offsets) {
    std::vector<std::vector<double>> row;
    for (std::size_t si = 0; si < cfg.s_list.size(); ++si) {
      ProtocolConfig cfg_s = cfg;
      cfg_s.two_s = cfg.s_list[si];
      const auto profile = protocol::site_entropy_profile(
          cfg_s, per_spin[si].ftable, bundle, off, threads);
      std::vector<double> values(profile.size());
      for (const auto& [n, e] : profile) values[n] = e;
      row.push_back(std::move(values));
    }
    profiles.push_back(std::move(row));
  }
  const double profile_s = profile_timer.seconds();

  emit_profile_csv(dir, cfg, offsets, profiles);

  ManifestInfo info;
  info.command = "stage2";
  info.kernel = kernels::active().name;
  info.threads = threads;
  info.resolved = {{"t0", cfg.t0()}};
  for (std::size_t si = 0; si < cfg.s_list.size(); ++si)
    info.derived.emplace_back("t1_two_s_" + std::to_string(cfg.s_list[si]),
                              per_spin[si].t1);
  info.timings_seconds = {{"stage1", stage1_s},
                          {"bundle", bundle_s},
                          {"profiles", profile_s}};
  write_manifest(dir, cfg, info);
}

namespace {

// Shared by `concurrence` and `pipeline`: stages 1-3 at the primary spin.
struct FullRun {
  Stage1Data stage1;
  protocol::ReferenceRun ref;
  double t2 = 0.0;
  protocol::BundleTrajectories bundle;
  ConcurrenceScan scan;
  double stage1_seconds = 0.0;
  double reference_seconds = 0.0;
  double bundle_seconds = 0.0;
  double stage3_seconds = 0.0;
};

FullRun execute_protocol(const ProtocolConfig& cfg, unsigned threads,
                         const std::vector<double>& extra_offsets,
                         const std::vector<double>& ref_snapshot_offsets) {
  FullRun run;

  Timer t1_timer;
  run.stage1 = stage1_for_spin(cfg, cfg.two_s);
  run.stage1_seconds = t1_timer.seconds();
  const double t1 = run.stage1.t1;

  Timer ref_timer;
  run.ref = protocol::run_reference(cfg, 1.0, ref_snapshot_offsets,
                                    /*search_arrival=*/!cfg.t2_opt);
  run.t2 = cfg.t2_opt ? *cfg.t2_opt : t1 + run.ref.arrival_offset;
  run.reference_seconds = ref_timer.seconds();

  Timer bundle_timer;
  std::vector<double> offsets = extra_offsets;
  offsets.push_back(run.t2 - t1);
  auto grid = std::make_shared<const scs::QuadratureGrid>(
      scs::build_quadrature(cfg.n_theta, cfg.n_phi, cfg.spin()));
  run.bundle =
      protocol::BundleTrajectories::integrate(cfg, grid, t1, offsets, threads);
  run.bundle_seconds = bundle_timer.seconds();

  Timer stage3_timer;
  const auto rho0 = protocol::stage3_initial_state(cfg, run.stage1.ftable,
                                                   run.bundle, run.t2, threads);
  run.scan = scan_concurrence(cfg, rho0, run.t2);
  run.stage3_seconds = stage3_timer.seconds();
  return run;
}

}  // namespace

void run_concurrence(const ProtocolConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  warn_config(cfg);
  const fs::path dir = prepare_out_dir(opts);
  const unsigned threads = par::resolve_threads(opts.threads);

  const FullRun run = execute_protocol(cfg, threads, {}, {});
  emit_concurrence_csv(dir, run.scan);

  ManifestInfo info;
  info.command = "concurrence";
  info.kernel = kernels::active().name;
  info.threads = threads;
  info.resolved = {{"t0", cfg.t0()}, {"t1", run.stage1.t1}, {"t2", run.t2}};
  info.derived = {{"stage1_max_entropy", run.stage1.scan.max_entropy},
                  {"f_table_grid_norm", run.stage1.ftable.grid_norm},
                  {"soliton_center_at_t2", run.ref.center_at_arrival},
                  {"peak_concurrence", run.scan.peak},
                  {"t3_peak", run.t2 + run.scan.peak_offset}};
  info.timings_seconds = {{"stage1", run.stage1_seconds},
                          {"reference", run.reference_seconds},
                          {"bundle", run.bundle_seconds},
                          {"stage3", run.stage3_seconds}};
  write_manifest(dir, cfg, info);
}

void run_pipeline(const ProtocolConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  warn_config(cfg);
  const fs::path dir = prepare_out_dir(opts);
  const unsigned threads = par::resolve_threads(opts.threads);

  const std::vector<double> profile_offsets = default_profile_offsets(cfg);
  std::vector<double> ref_snapshots = profile_offsets;
  ref_snapshots.insert(ref_snapshots.begin(), 0.0);

  const FullRun run =
      execute_protocol(cfg, threads, profile_offsets, ref_snapshots);
  const double t1 = run.stage1.t1;

  emit_soliton_files(dir, cfg, run.ref);
  emit_stage1_csv(dir, run.stage1.scan);
  emit_concurrence_csv(dir, run.scan);

  // Per-spin entropy profiles on the shared bundle.
  Timer profile_timer;
  std::vector<Stage1Data> per_spin;
  for (const int two_s : cfg.s_list) {
    if (two_s == cfg.two_s)
      per_spin.push_back(run.stage1);
    else
      per_spin.push_back(stage1_for_spin(cfg, two_s));
  }
  std::vector<std::vector<std::vector<double>>> profiles;
  for (const double off : profile_offsets) {
    std::vector<std::vector<double>> row;
    for (std::size_t si = 0; si < cfg.s_list.size(); ++si) {
      ProtocolConfig cfg_s = cfg;
      cfg_s.two_s = cfg.s_list[si];
      const auto profile = protocol::site_entropy_profile(
          cfg_s, per_spin[si].ftable, run.bundle, t1 + off, threads);
      std::vector<double> values(profile.size());
      for (const auto& [n, e] : profile) values[n] = e;
      row.push_back(std::move(values));
    }
    profiles.push_back(std::move(row));
  }
  emit_profile_csv(dir, cfg, profile_offsets, profiles);
  const double profile_s = profile_timer.seconds();

  ManifestInfo info;
  info.command = "pipeline";
  info.kernel = kernels::active().name;
  info.threads = threads;
  info.resolved = {{"t0", cfg.t0()}, {"t1", t1}, {"t2", run.t2}};
  info.derived = {{"stage1_max_entropy", run.stage1.scan.max_entropy},
                  {"f_table_grid_norm", run.stage1.ftable.grid_norm},
                  {"soliton_center_at_t2", run.ref.center_at_arrival},
                  {"peak_concurrence", run.scan.peak},
                  {"t3_peak", run.t2 + run.scan.peak_offset}};
  info.timings_seconds = {{"stage1", run.stage1_seconds},
                          {"reference", run.reference_seconds},
                          {"bundle", run.bundle_seconds},
                          {"stage3", run.stage3_seconds},
                          {"profiles", profile_s}};
  write_manifest(dir, cfg, info);
}

}  // namespace qsol::cli
