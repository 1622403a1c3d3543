#include "qsolchain/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

#include "qsolchain/kernels.hpp"
#include "qsolchain/parallel.hpp"

namespace qsol::protocol {

using num::ComplexMatrix;
using num::DensityMatrix;

namespace {

constexpr double kPi = 3.14159265358979323846;
// Pair contributions below this magnitude cannot move any entry above
// roundoff; skipping them is value-based and scheduling-independent.
constexpr double kCoefCutoffSq = 1e-40;

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

double entropy_2x2_base2(double r00, double r11, const cplx& r01) {
  const double tr = r00 + r11;
  if (!(tr > 0.0)) return 0.0;
  const double gap =
      std::sqrt((r00 - r11) * (r00 - r11) + 4.0 * std::norm(r01));
  double e = 0.0;
  for (const double lam : {0.5 * (tr + gap) / tr, 0.5 * (tr - gap) / tr}) {
    const double l = std::clamp(lam, 0.0, 1.0);
    if (l > 0.0) e -= l * std::log2(l);
  }
  return e;
}

}  // namespace

chain::SolitonParams ProtocolConfig::soliton() const {
  const double h = zeeman_h ? *zeeman_h
                            : chain::SolitonParams::h_for_lambda(lambda_beta, beta);
  return chain::soliton_derived_params(beta, h, phi0);
}

double ProtocolConfig::t0() const {
  if (t0_opt) return *t0_opt;
  return static_cast<double>(site_a) / soliton().v;
}

std::array<cplx, 2> ProtocolConfig::qubit_a_init() const {
  return {cplx(std::cos(0.5 * qubit_a_theta), 0.0),
          std::polar(std::sin(0.5 * qubit_a_theta), qubit_a_phi)};
}

std::array<cplx, 2> ProtocolConfig::qubit_b_init() const {
  return {cplx(std::cos(0.5 * qubit_b_theta), 0.0),
          std::polar(std::sin(0.5 * qubit_b_theta), qubit_b_phi)};
}

double ProtocolConfig::nominal_transfer_offset() const {
  return static_cast<double>(site_b - site_a) / soliton().v;
}

double ProtocolConfig::timescale_ratio() const {
  return soliton().h * std::sin(2.0 * beta) / (g * spin().s());
}

chain::ChainConfig ProtocolConfig::frozen_chain() const {
  return chain::tw_soliton_config(soliton(), 0.0, n_sites,
                                  static_cast<double>(site_a));
}

void ProtocolConfig::validate() const {
  if (two_s < 1) throw ValidationError("two_s");
  if (!(g > 0.0)) throw ValidationError("g");
  if (!(beta > 0.0) || !(beta < 0.5 * kPi)) throw ValidationError("beta");
  if (zeeman_h && !(*zeeman_h > 0.0)) throw ValidationError("h");
  if (!zeeman_h && !(lambda_beta > 0.0)) throw ValidationError("lambda_beta");
  if (!(dt > 0.0) || dt > 0.05) throw ValidationError("dt");
  if (site_a >= n_sites) throw ValidationError("n_A");
  if (site_b >= n_sites || site_b <= site_a) throw ValidationError("n_B");
  if (n_theta < 2) throw ValidationError("n_theta");
  if (n_phi < 2) throw ValidationError("n_phi");
  if (!(t1_window > 0.0)) throw ValidationError("t1_window");
  if (!(t1_step > 0.0)) throw ValidationError("t1_step");
  if (!(t3_window > 0.0)) throw ValidationError("t3_window");
  if (!(t3_step > 0.0)) throw ValidationError("t3_step");
  if (s_list.empty()) throw ValidationError("s_list");
  for (const int v : s_list)
    if (v < 1) throw ValidationError("s_list");
  for (const double off : profile_offsets)
    if (!(off >= 0.0)) throw ValidationError("profile_offsets");

  const auto sol = soliton();  // throws DomainError on bad beta/h
  if (static_cast<double>(n_sites) < 8.0 * sol.lambda)
    throw ValidationError("N");

  const double start = t0();
  if (!std::isfinite(start)) throw ValidationError("t0");
  if (t1_opt && !(*t1_opt >= start)) throw ValidationError("t1");
  if (t2_opt && t1_opt && !(*t2_opt >= *t1_opt)) throw ValidationError("t2");
}

ComplexMatrix qubit_spin_hamiltonian(double g, double hq,
                                     const scs::SpinMagnitude& s) {
  const ComplexMatrix sz = scs::spin_z(s);
  const ComplexMatrix sp = scs::spin_plus(s);
  const ComplexMatrix sm = scs::spin_minus(s);
  const ComplexMatrix id_s = ComplexMatrix::identity(s.dim());

  ComplexMatrix sig_p(2, 2), sig_m(2, 2);  // sx +- i sy
  sig_p(0, 1) = 2.0;
  sig_m(1, 0) = 2.0;

  ComplexMatrix h = num::tensor_product(pauli_z(), sz);
  h += 0.5 * num::tensor_product(sig_m, sp);
  h += 0.5 * num::tensor_product(sig_p, sm);
  h *= g;
  h += hq * num::tensor_product(pauli_z(), id_s);
  return h;
}

double StageOneResult::norm_squared() const {
  double n = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) n += std::norm(c(i, j));
  return n;
}

DensityMatrix StageOneResult::qubit_density() const {
  ComplexMatrix rho(2, 2);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      cplx s = 0.0;
      for (std::size_t m = 0; m < c.cols(); ++m) s += c(a, m) * std::conj(c(b, m));
      rho(a, b) = s;
    }
  return DensityMatrix::from_matrix(rho);
}

DensityMatrix StageOneResult::spin_density() const {
  const std::size_t dim = c.cols();
  ComplexMatrix rho(dim, dim);
  for (std::size_t m = 0; m < dim; ++m)
    for (std::size_t n = 0; n < dim; ++n) {
      cplx s = 0.0;
      for (std::size_t a = 0; a < 2; ++a) s += c(a, m) * std::conj(c(a, n));
      rho(m, n) = s;
    }
  return DensityMatrix::from_matrix(rho);
}

double StageOneResult::qubit_entropy() const {
  double r00 = 0.0, r11 = 0.0;
  cplx r01 = 0.0;
  for (std::size_t m = 0; m < c.cols(); ++m) {
    r00 += std::norm(c(0, m));
    r11 += std::norm(c(1, m));
    r01 += c(0, m) * std::conj(c(1, m));
  }
  return entropy_2x2_base2(r00, r11, r01);
}

Stage1Engine::Stage1Engine(const ProtocolConfig& cfg) {
  cfg.validate();
  t0_ = cfg.t0();
  const auto frozen = cfg.frozen_chain();
  omega0_ = frozen.directions[cfg.site_a];
  const scs::SpinMagnitude spin = cfg.spin();
  spin_dim_ = spin.dim();

  const auto amps = scs::scs_amplitudes(omega0_, spin);
  const auto a = cfg.qubit_a_init();
  psi0_.assign(2 * spin_dim_, cplx{});
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t m = 0; m < spin_dim_; ++m)
      psi0_[q * spin_dim_ + m] = a[q] * amps[m];

  const ComplexMatrix h = qubit_spin_hamiltonian(cfg.g, cfg.h_a, spin);
  num::EigenSystem es = num::hermitian_eigensystem(h);
  eigvals_ = std::move(es.values);
  vectors_ = std::move(es.vectors);
  vdag_psi0_ = vectors_.adjoint() * psi0_;
}

std::vector<cplx> Stage1Engine::state_at(double t) const {
  if (t < t0_) throw DomainError("stage-1 evolution requested before t0");
  if (t == t0_) return psi0_;
  const double tau = t - t0_;
  const std::size_t dim = psi0_.size();
  std::vector<cplx> phased(dim);
  for (std::size_t k = 0; k < dim; ++k)
    phased[k] = std::polar(1.0, -eigvals_[k] * tau) * vdag_psi0_[k];
  return vectors_ * phased;
}

StageOneResult Stage1Engine::at(double t) const {
  const auto psi = state_at(t);
  StageOneResult res;
  res.t1 = t;
  res.c = ComplexMatrix(2, spin_dim_);
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t m = 0; m < spin_dim_; ++m)
      res.c(q, m) = psi[q * spin_dim_ + m];
  return res;
}

double Stage1Engine::qubit_entropy(double t) const {
  const auto psi = state_at(t);
  double r00 = 0.0, r11 = 0.0;
  cplx r01 = 0.0;
  for (std::size_t m = 0; m < spin_dim_; ++m) {
    r00 += std::norm(psi[m]);
    r11 += std::norm(psi[spin_dim_ + m]);
    r01 += psi[m] * std::conj(psi[spin_dim_ + m]);
  }
  return entropy_2x2_base2(r00, r11, r01);
}

StageOneResult stage1_evolve(const ProtocolConfig& cfg, double t) {
  return Stage1Engine(cfg).at(t);
}

Stage1Scan scan_stage1(const ProtocolConfig& cfg, double window, double step) {
  if (!(window > 0.0) || !(step > 0.0))
    throw DomainError("stage-1 scan needs positive window and step");
  const Stage1Engine engine(cfg);
  const long n = std::lround(window / step);
  Stage1Scan scan;
  scan.times.reserve(n + 1);
  scan.entropy.reserve(n + 1);
  std::size_t best = 0;
  for (long i = 0; i <= n; ++i) {
    const double t = engine.t0() + static_cast<double>(i) * step;
    const double e = engine.qubit_entropy(t);
    scan.times.push_back(t);
    scan.entropy.push_back(e);
    if (e > scan.entropy[best]) best = scan.entropy.size() - 1;
  }
  scan.t1 = scan.times[best];
  scan.max_entropy = scan.entropy[best];
  return scan;
}

double select_t1(const ProtocolConfig& cfg, double window, double step) {
  return scan_stage1(cfg, window, step).t1;
}

FTable build_f_table(const StageOneResult& res,
                     std::shared_ptr<const scs::QuadratureGrid> grid) {
  if (!grid) throw DimensionMismatch("f table needs a quadrature grid");
  if (grid->spin.dim() != res.c.cols())
    throw DimensionMismatch("f table grid spin does not match stage-1 result");
  FTable table;
  table.grid = std::move(grid);
  const std::size_t n_nodes = table.grid->size();
  table.values[0].resize(n_nodes);
  table.values[1].resize(n_nodes);
  double norm = 0.0;
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const auto amp = scs::scs_amplitudes(table.grid->nodes[k].dir,
                                         table.grid->spin);
    for (std::size_t q = 0; q < 2; ++q) {
      cplx f = 0.0;
      for (std::size_t m = 0; m < amp.size(); ++m)
        f += res.c(q, m) * std::conj(amp[m]);
      table.values[q][k] = f;
      norm += table.grid->nodes[k].weight * std::norm(f);
    }
  }
  table.grid_norm = norm;
  return table;
}

ComplexMatrix f_table_reconstruction(const FTable& ftable) {
  const std::size_t dim = ftable.grid->spin.dim();
  ComplexMatrix c(2, dim);
  for (std::size_t k = 0; k < ftable.grid->size(); ++k) {
    const auto amp = scs::scs_amplitudes(ftable.grid->nodes[k].dir,
                                         ftable.grid->spin);
    const double w = ftable.grid->nodes[k].weight;
    for (std::size_t q = 0; q < 2; ++q)
      for (std::size_t m = 0; m < dim; ++m)
        c(q, m) += w * ftable.values[q][k] * amp[m];
  }
  return c;
}

BundleTrajectories BundleTrajectories::integrate(
    const ProtocolConfig& cfg, std::shared_ptr<const scs::QuadratureGrid> grid,
    double t1, const std::vector<double>& sample_offsets, unsigned threads) {
  cfg.validate();
  if (!grid) throw DimensionMismatch("bundle needs a quadrature grid");

  BundleTrajectories bundle;
  bundle.grid_ = std::move(grid);
  bundle.n_nodes_ = bundle.grid_->size();
  bundle.n_sites_ = cfg.n_sites;
  bundle.t1_ = t1;
  bundle.dt_ = cfg.dt;

  // Snap offsets to the step grid and deduplicate.
  std::set<long> steps;
  for (const double off : sample_offsets) {
    if (!(off >= 0.0))
      throw DomainError("bundle sample times must not precede t1");
    steps.insert(std::lround(off / cfg.dt));
  }
  for (const long s : steps) {
    Snapshot snap;
    snap.step = s;
    snap.offset = static_cast<double>(s) * cfg.dt;
    const std::size_t len = bundle.n_nodes_ * bundle.n_sites_;
    snap.ch.resize(len);
    snap.sh.resize(len);
    snap.cp.resize(len);
    snap.sp.resize(len);
    snap.action.resize(bundle.n_nodes_);
    bundle.snapshots_.push_back(std::move(snap));
  }

  const chain::ChainConfig frozen = cfg.frozen_chain();
  const chain::SolitonParams sol = cfg.soliton();
  const std::size_t n_sites = cfg.n_sites;
  auto& snapshots = bundle.snapshots_;

  par::for_blocks(bundle.n_nodes_, threads, [&](std::size_t node) {
    chain::ChainConfig init = frozen;
    init.directions[cfg.site_a] = bundle.grid_->nodes[node].dir;
    chain::EomIntegrator integ(init, sol.h, cfg.dt);
    for (auto& snap : snapshots) {
      integ.advance_steps(snap.step - integ.step_index());
      const std::size_t base = node * n_sites;
      for (std::size_t i = 0; i < n_sites; ++i) {
        const double z = std::clamp(integ.sz(i), -1.0, 1.0);
        snap.ch[base + i] = std::sqrt(0.5 * (1.0 + z));
        snap.sh[base + i] = std::sqrt(0.5 * (1.0 - z));
        const double rho = std::hypot(integ.sx(i), integ.sy(i));
        snap.cp[base + i] = rho > 0.0 ? integ.sx(i) / rho : 1.0;
        snap.sp[base + i] = rho > 0.0 ? integ.sy(i) / rho : 0.0;
      }
      snap.action[node] =
          integ.geometric_action() + integ.initial_energy() * snap.offset;
    }
  });
  return bundle;
}

const BundleTrajectories::Snapshot& BundleTrajectories::at_offset(
    double offset) const {
  const long step = std::lround(offset / dt_);
  for (const auto& snap : snapshots_)
    if (snap.step == step) return snap;
  throw DomainError("requested time is not among the bundle sample times");
}

scs::SphereDirection BundleTrajectories::direction(const Snapshot& snap,
                                                   std::size_t node,
                                                   std::size_t site) const {
  const std::size_t i = node * n_sites_ + site;
  const double theta = 2.0 * std::atan2(snap.sh[i], snap.ch[i]);
  const double phi = std::atan2(snap.sp[i], snap.cp[i]);
  return scs::SphereDirection(theta, phi);
}

cplx BundleTrajectories::branch_phase(const Snapshot& snap, std::size_t node,
                                      const scs::SpinMagnitude& s) const {
  return std::polar(1.0, -s.s() * snap.action[node]);
}

BundleTrajectories stage2_bundle(const ProtocolConfig& cfg,
                                 std::shared_ptr<const scs::QuadratureGrid> grid,
                                 double t1,
                                 const std::vector<double>& sample_times,
                                 unsigned threads) {
  std::vector<double> offsets;
  offsets.reserve(sample_times.size());
  for (const double t : sample_times) offsets.push_back(t - t1);
  return BundleTrajectories::integrate(cfg, std::move(grid), t1, offsets,
                                       threads);
}

cplx pair_overlap_product(const BundleTrajectories& bundle, double t,
                          std::size_t j, std::size_t k,
                          std::optional<std::size_t> exclude) {
  const auto& snap = bundle.at_time(t);
  const std::size_t n = bundle.n_sites();
  const int two_s = bundle.grid().spin.two_s();
  const std::size_t jo = j * n;
  const std::size_t ko = k * n;
  double log_mag = 0.0;
  double arg = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (exclude && *exclude == l) continue;
    // z for <Omega_l(j)|Omega_l(k)>: bra j, ket k.
    const double dcos = snap.cp[ko + l] * snap.cp[jo + l] +
                        snap.sp[ko + l] * snap.sp[jo + l];
    const double dsin = snap.sp[ko + l] * snap.cp[jo + l] -
                        snap.cp[ko + l] * snap.sp[jo + l];
    const double ss = snap.sh[ko + l] * snap.sh[jo + l];
    const double zre = snap.ch[ko + l] * snap.ch[jo + l] + ss * dcos;
    const double zim = ss * dsin;
    const double m2 = zre * zre + zim * zim;
    if (m2 == 0.0) return cplx{};
    log_mag += 0.5 * two_s * std::log(m2);
    arg += two_s * std::atan2(zim, zre);
  }
  return std::polar(std::exp(log_mag), arg);
}

namespace {

// Bundles must share node geometry with the f table's grid (spin may
// differ: trajectories are S-independent).
void check_grid_compat(const FTable& ftable, const BundleTrajectories& bundle) {
  const auto& fg = *ftable.grid;
  const auto& bg = bundle.grid();
  if (fg.size() != bg.size())
    throw DimensionMismatch("f table and bundle use different grids");
  const auto close = [](const scs::SphereDirection& a,
                        const scs::SphereDirection& b) {
    return std::abs(a.theta - b.theta) <= 1e-12 &&
           std::abs(a.phi - b.phi) <= 1e-12;
  };
  if (!fg.nodes.empty() &&
      (!close(fg.nodes.front().dir, bg.nodes.front().dir) ||
       !close(fg.nodes.back().dir, bg.nodes.back().dir)))
    throw DimensionMismatch("f table and bundle node geometries differ");
}

// SCS amplitude vectors for the listed sites of every node trajectory,
// computed from the snapshot trig tables;
// layout [(node * sites.size() + site_index) * dim + m_index].
std::vector<cplx> build_amp_table(const BundleTrajectories::Snapshot& snap,
                                  std::size_t n_nodes, std::size_t n_sites,
                                  const std::vector<std::size_t>& sites,
                                  const scs::SpinMagnitude& spin) {
  const std::size_t dim = spin.dim();
  const int two_s = spin.two_s();
  const std::vector<double> sb = scs::sqrt_binomials(spin);
  std::vector<cplx> amp(n_nodes * sites.size() * dim);
  std::vector<double> chp(dim), shp(dim);
  std::vector<cplx> php(dim);
  for (std::size_t node = 0; node < n_nodes; ++node) {
    const std::size_t base = node * n_sites;
    for (std::size_t si = 0; si < sites.size(); ++si) {
      const std::size_t i = base + sites[si];
      chp[0] = 1.0;
      shp[0] = 1.0;
      php[0] = 1.0;
      const cplx phase(snap.cp[i], snap.sp[i]);
      for (int p = 1; p <= two_s; ++p) {
        chp[p] = chp[p - 1] * snap.ch[i];
        shp[p] = shp[p - 1] * snap.sh[i];
        php[p] = php[p - 1] * phase;
      }
      cplx* out = &amp[(node * sites.size() + si) * dim];
      for (int m = 0; m <= two_s; ++m)
        out[m] = sb[m] * chp[m] * shp[two_s - m] * php[two_s - m];
    }
  }
  return amp;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> upper_pairs(
    std::size_t n_nodes) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(n_nodes * (n_nodes + 1) / 2);
  for (std::uint32_t j = 0; j < n_nodes; ++j)
    for (std::uint32_t k = j; k < n_nodes; ++k) pairs.emplace_back(j, k);
  return pairs;
}

// sum over pairs j<=k (diagonal halved) of G_jk R_jk,n outer(a_jn, a_kn*)
// for the requested sites; the full matrix is T + T^dagger.  `wf` holds the
// weighted f values per channel; channel c couples wf_left[c] on j with
// conj(wf_right[c]) on k and accumulates into output slot out_slot[c].
struct AssemblyChannels {
  std::vector<const std::vector<cplx>*> left, right;
  std::vector<std::size_t> out_slot;
};

// For every accumulated site n, the overlap product runs over l != n; the
// site of the outer product and the excluded site always coincide (both for
// rho_{S_n} and for the stage-3 rho_{A,S_B} at n_B).
std::vector<std::vector<cplx>> accumulate_pairs(
    const BundleTrajectories& bundle, const BundleTrajectories::Snapshot& snap,
    const scs::SpinMagnitude& spin, const std::vector<std::size_t>& sites,
    std::size_t n_out_slots, const AssemblyChannels& channels,
    unsigned threads, std::size_t n_blocks) {
  const std::size_t n_nodes = bundle.n_nodes();
  const std::size_t n_sites = bundle.n_sites();
  const std::size_t dim = spin.dim();
  const int two_s = spin.two_s();
  const auto& kern = kernels::active();

  const std::vector<cplx> amp =
      build_amp_table(snap, n_nodes, n_sites, sites, spin);
  const auto pairs = upper_pairs(n_nodes);
  const std::size_t per_slot = sites.size() * dim * dim;

  std::vector<std::vector<cplx>> acc(n_blocks);
  par::for_blocks(n_blocks, threads, [&](std::size_t b) {
    auto& local = acc[b];
    local.assign(n_out_slots * per_slot, cplx{});
    std::vector<double> ore(n_sites), oim(n_sites);
    std::vector<cplx> pre(n_sites + 1), suf(n_sites + 1);

    const std::size_t p0 = b * pairs.size() / n_blocks;
    const std::size_t p1 = (b + 1) * pairs.size() / n_blocks;
    for (std::size_t p = p0; p < p1; ++p) {
      const std::size_t j = pairs[p].first;
      const std::size_t k = pairs[p].second;
      const std::size_t jo = j * n_sites;
      const std::size_t ko = k * n_sites;
      // Row of <Omega_l(k)|Omega_l(j)>: bra k, ket j, matching the j-ket /
      // k-bra placement of the outer products below.
      kern.overlap_row(&snap.ch[ko], &snap.sh[ko], &snap.cp[ko], &snap.sp[ko],
                       &snap.ch[jo], &snap.sh[jo], &snap.cp[jo], &snap.sp[jo],
                       n_sites, two_s, ore.data(), oim.data());
      pre[0] = 1.0;
      for (std::size_t l = 0; l < n_sites; ++l)
        pre[l + 1] = pre[l] * cplx(ore[l], oim[l]);
      suf[n_sites] = 1.0;
      for (std::size_t l = n_sites; l-- > 0;)
        suf[l] = cplx(ore[l], oim[l]) * suf[l + 1];

      const double half = (j == k) ? 0.5 : 1.0;
      for (std::size_t c = 0; c < channels.left.size(); ++c) {
        const cplx g = half * (*channels.left[c])[j] *
                       std::conj((*channels.right[c])[k]);
        if (std::norm(g) == 0.0) continue;
        cplx* slot = &local[channels.out_slot[c] * per_slot];
        for (std::size_t si = 0; si < sites.size(); ++si) {
          const std::size_t n = sites[si];
          const cplx coef = g * (pre[n] * suf[n + 1]);
          if (std::norm(coef) < kCoefCutoffSq) continue;
          const cplx* aj = &amp[(j * sites.size() + si) * dim];
          const cplx* ak = &amp[(k * sites.size() + si) * dim];
          cplx* out = slot + si * dim * dim;
          for (std::size_t al = 0; al < dim; ++al) {
            const cplx ca = coef * aj[al];
            cplx* row = out + al * dim;
            for (std::size_t be = 0; be < dim; ++be)
              row[be] += ca * std::conj(ak[be]);
          }
        }
      }
    }
  });

  // Ordered, thread-count-independent reduction.
  std::vector<std::vector<cplx>> total(
      n_out_slots, std::vector<cplx>(per_slot, cplx{}));
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::size_t s = 0; s < n_out_slots; ++s)
      for (std::size_t i = 0; i < per_slot; ++i)
        total[s][i] += acc[b][s * per_slot + i];
  return total;
}

DensityMatrix site_matrix_from_half(const std::vector<cplx>& half,
                                    std::size_t offset, std::size_t dim) {
  ComplexMatrix m(dim, dim);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b)
      m(a, b) = half[offset + a * dim + b] +
                std::conj(half[offset + b * dim + a]);
  return DensityMatrix::from_matrix(m, DensityMatrix::Clip::negatives);
}

std::vector<DensityMatrix> assemble_site_densities(
    const FTable& ftable, const BundleTrajectories& bundle,
    const BundleTrajectories::Snapshot& snap,
    const std::vector<std::size_t>& sites, unsigned threads) {
  check_grid_compat(ftable, bundle);
  const scs::SpinMagnitude spin = ftable.grid->spin;
  const std::size_t n_nodes = bundle.n_nodes();

  // Qubit traced out: one channel per sigma, both into the same slot.  The
  // semiclassical branch phase rides along with the f values.
  std::vector<cplx> wf0(n_nodes), wf1(n_nodes);
  for (std::size_t j = 0; j < n_nodes; ++j) {
    const cplx wp =
        ftable.grid->nodes[j].weight * bundle.branch_phase(snap, j, spin);
    wf0[j] = wp * ftable.values[0][j];
    wf1[j] = wp * ftable.values[1][j];
  }
  AssemblyChannels channels;
  channels.left = {&wf0, &wf1};
  channels.right = {&wf0, &wf1};
  channels.out_slot = {0, 0};

  const auto total =
      accumulate_pairs(bundle, snap, spin, sites, 1, channels, threads, 24);
  const std::size_t dim = spin.dim();
  std::vector<DensityMatrix> out;
  out.reserve(sites.size());
  for (std::size_t si = 0; si < sites.size(); ++si)
    out.push_back(site_matrix_from_half(total[0], si * dim * dim, dim));
  return out;
}

}  // namespace

DensityMatrix site_density_matrix(const ProtocolConfig& cfg,
                                  const FTable& ftable,
                                  const BundleTrajectories& bundle,
                                  std::size_t site, double t,
                                  unsigned threads) {
  if (site >= cfg.n_sites) throw DimensionMismatch("site index out of range");
  const auto& snap = bundle.at_time(t);
  return assemble_site_densities(ftable, bundle, snap, {site}, threads)
      .front();
}

std::vector<std::pair<std::size_t, double>> site_entropy_profile(
    const ProtocolConfig& cfg, const FTable& ftable,
    const BundleTrajectories& bundle, double t, unsigned threads) {
  const auto& snap = bundle.at_time(t);
  std::vector<std::size_t> sites(cfg.n_sites);
  for (std::size_t i = 0; i < sites.size(); ++i) sites[i] = i;
  const auto rhos = assemble_site_densities(ftable, bundle, snap, sites,
                                            threads);
  const std::size_t base = ftable.grid->spin.dim();
  std::vector<std::pair<std::size_t, double>> profile;
  profile.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i)
    profile.emplace_back(i, ent::von_neumann_entropy(rhos[i], base));
  return profile;
}

DensityMatrix stage3_initial_state(const ProtocolConfig& cfg,
                                   const FTable& ftable,
                                   const BundleTrajectories& bundle, double t2,
                                   unsigned threads) {
  check_grid_compat(ftable, bundle);
  const scs::SpinMagnitude spin = ftable.grid->spin;
  const std::size_t dim = spin.dim();
  const std::size_t n_nodes = bundle.n_nodes();
  const auto& snap = bundle.at_time(t2);

  std::vector<cplx> wf0(n_nodes), wf1(n_nodes);
  for (std::size_t j = 0; j < n_nodes; ++j) {
    const cplx wp =
        ftable.grid->nodes[j].weight * bundle.branch_phase(snap, j, spin);
    wf0[j] = wp * ftable.values[0][j];
    wf1[j] = wp * ftable.values[1][j];
  }
  // Four (sigma, sigma') channels, one output slot each.
  AssemblyChannels channels;
  channels.left = {&wf0, &wf0, &wf1, &wf1};
  channels.right = {&wf0, &wf1, &wf0, &wf1};
  channels.out_slot = {0, 1, 2, 3};

  const std::vector<std::size_t> sites{cfg.site_b};
  const auto blocks =
      accumulate_pairs(bundle, snap, spin, sites, 4, channels, threads, 96);

  // rho_{A,S_B}: half-sum blocks T^{ss'} -> T + T^dagger, then the stage-1
  // memory phase e^{-i h_A (t2 - t1)(sigma - sigma')}.
  const double dt21 = t2 - bundle.t1();
  ComplexMatrix rho_ab(2 * dim, 2 * dim);
  for (std::size_t s1 = 0; s1 < 2; ++s1)
    for (std::size_t s2 = 0; s2 < 2; ++s2) {
      const auto& t_fwd = blocks[s1 * 2 + s2];
      const auto& t_rev = blocks[s2 * 2 + s1];
      const cplx phase =
          std::polar(1.0, -cfg.h_a * dt21 * (kSigmaValues[s1] - kSigmaValues[s2]));
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b)
          rho_ab(s1 * dim + a, s2 * dim + b) =
              phase * (t_fwd[a * dim + b] + std::conj(t_rev[b * dim + a]));
    }
  const DensityMatrix rho_as =
      DensityMatrix::from_matrix(rho_ab, DensityMatrix::Clip::negatives);

  // |B(t2)> = exp(-i h_B sz (t2 - t0)) |B>.
  const double tb = t2 - cfg.t0();
  const auto b0 = cfg.qubit_b_init();
  const std::vector<cplx> b_t2{std::polar(1.0, -cfg.h_b * tb) * b0[0],
                               std::polar(1.0, +cfg.h_b * tb) * b0[1]};
  const DensityMatrix rho_b = DensityMatrix::pure(b_t2);

  return DensityMatrix::unchecked(
      num::tensor_product(rho_as.matrix(), rho_b.matrix()));
}

ComplexMatrix stage3_hamiltonian(const ProtocolConfig& cfg) {
  const scs::SpinMagnitude spin = cfg.spin();
  const std::size_t dim = spin.dim();
  const ComplexMatrix id2 = ComplexMatrix::identity(2);
  const ComplexMatrix id_s = ComplexMatrix::identity(dim);

  ComplexMatrix sig_p(2, 2), sig_m(2, 2);
  sig_p(0, 1) = 2.0;
  sig_m(1, 0) = 2.0;

  // g S_B . sigma_B on S_B (x) B, ladder form as in the stage-1 Hamiltonian.
  ComplexMatrix coupling = num::tensor_product(scs::spin_z(spin), pauli_z());
  coupling += 0.5 * num::tensor_product(scs::spin_plus(spin), sig_m);
  coupling += 0.5 * num::tensor_product(scs::spin_minus(spin), sig_p);

  ComplexMatrix h = cfg.g * num::tensor_product(id2, coupling);
  h += cfg.h_a * num::tensor_product(pauli_z(),
                                     num::tensor_product(id_s, id2));
  h += cfg.h_b * num::tensor_product(id2, num::tensor_product(id_s, pauli_z()));
  return h;
}

DensityMatrix stage3_evolve(const DensityMatrix& rho0,
                            const ProtocolConfig& cfg, double t2, double t) {
  if (t < t2) throw DomainError("stage-3 evolution requested before t2");
  const ComplexMatrix u = num::evolve_unitary(stage3_hamiltonian(cfg), t - t2);
  return DensityMatrix::unchecked(u * rho0.matrix() * u.adjoint());
}

Stage3Engine::Stage3Engine(const ProtocolConfig& cfg,
                           const DensityMatrix& rho0, double t2)
    : t2_(t2) {
  const ComplexMatrix h = stage3_hamiltonian(cfg);
  if (h.rows() != rho0.dim())
    throw DimensionMismatch("stage-3 state dimension does not match 4(2S+1)");
  num::EigenSystem es = num::hermitian_eigensystem(h);
  eigvals_ = std::move(es.values);
  vectors_ = std::move(es.vectors);
  rho0_eig_ = vectors_.adjoint() * rho0.matrix() * vectors_;
}

DensityMatrix Stage3Engine::at(double t) const {
  if (t < t2_) throw DomainError("stage-3 evolution requested before t2");
  const double tau = t - t2_;
  const std::size_t n = rho0_eig_.rows();
  ComplexMatrix phased(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      phased(i, j) =
          rho0_eig_(i, j) * std::polar(1.0, -(eigvals_[i] - eigvals_[j]) * tau);
  return DensityMatrix::unchecked(vectors_ * phased * vectors_.adjoint());
}

DensityMatrix two_qubit_state(const DensityMatrix& rho,
                              const scs::SpinMagnitude& s) {
  return num::partial_trace(rho, {2, s.dim(), 2}, {0, 2});
}

ReferenceRun run_reference(const ProtocolConfig& cfg, double diag_stride,
                           const std::vector<double>& snapshot_offsets,
                           bool search_arrival) {
  cfg.validate();
  const chain::SolitonParams sol = cfg.soliton();
  chain::EomIntegrator integ(cfg.frozen_chain(), sol.h, cfg.dt);

  ReferenceRun run;
  const long diag_step = std::max<long>(1, std::lround(diag_stride / cfg.dt));

  std::set<long> snap_steps;
  long max_step = 0;
  for (const double off : snapshot_offsets) {
    if (!(off >= 0.0)) throw DomainError("snapshot offsets must be >= 0");
    const long s = std::lround(off / cfg.dt);
    snap_steps.insert(s);
    max_step = std::max(max_step, s);
  }

  std::set<long> candidate_steps;
  if (search_arrival) {
    const double nominal = cfg.nominal_transfer_offset();
    const long stride = 10;
    const long lo = std::max<long>(0, std::lround((nominal - 10.0) / cfg.dt));
    const long hi = std::lround((nominal + 10.0) / cfg.dt);
    for (long s = lo; s <= hi; s += stride) candidate_steps.insert(s);
    max_step = std::max(max_step, hi);
  }

  const auto center_now = [&]() {
    return chain::soliton_center(integ.config());
  };

  double best_dist = std::numeric_limits<double>::infinity();
  for (long s = 0; s <= max_step; ++s) {
    if (s % diag_step == 0 || s == max_step) {
      run.diag_offsets.push_back(static_cast<double>(s) * cfg.dt);
      run.energy.push_back(integ.energy(sol.h));
      run.total_sz.push_back(integ.total_sz());
      run.center.push_back(center_now());
    }
    if (snap_steps.count(s))
      run.snapshots.emplace_back(static_cast<double>(s) * cfg.dt,
                                 integ.config());
    if (candidate_steps.count(s)) {
      const double c = center_now();
      const double dist = std::abs(c - static_cast<double>(cfg.site_b));
      if (dist < best_dist) {
        best_dist = dist;
        run.arrival_offset = static_cast<double>(s) * cfg.dt;
        run.center_at_arrival = c;
      }
    }
    if (s < max_step) integ.advance_steps(1);
  }
  if (!search_arrival) run.arrival_offset = cfg.nominal_transfer_offset();
  return run;
}

}  // namespace qsol::protocol
