#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "qsolchain/chain.hpp"
#include "qsolchain/complex_matrix.hpp"
#include "qsolchain/entanglement.hpp"
#include "qsolchain/scs.hpp"

// The three-stage entanglement-generation protocol:
//   stage 1 [t0, t1]: exact (qubit A, spin S_A) evolution, rest of the chain
//                     frozen; t1 picked to maximize the A entanglement;
//   stage 2 [t1, t2]: semiclassical chain evolution as a bundle of classical
//                     trajectories, one per quadrature node;
//   stage 3 [t2, t3]: exact (A, S_B, B) evolution of the reduced state,
//                     concurrence of the (A, B) pair scanned over t - t2.
//
// Qubit basis convention: index 0 <-> sigma = +1 (the |1> state), index 1
// <-> sigma = -1.  Composite spaces order factors qubit (x) spin, and
// A (x) S_B (x) B in stage 3, leftmost slowest.

namespace qsol::protocol {

using num::cplx;

inline constexpr std::array<double, 2> kSigmaValues{+1.0, -1.0};

// All physical and numerical parameters of a run.  Times are in (JS)^-1,
// couplings and fields in units of JS, lengths in lattice spacings.
struct ProtocolConfig {
  int two_s = 10;                 // 2S
  std::size_t n_sites = 256;      // N
  std::size_t site_a = 40;        // n_A
  std::size_t site_b = 200;       // n_B
  double g = 1.0;
  double h_a = 0.25;
  double h_b = 0.25;

  double beta = 0.78539816339744831;  // pi/4
  double lambda_beta = 10.0;          // soliton width; sets h unless zeeman_h
  std::optional<double> zeeman_h;     // explicit chain field override
  double phi0 = 0.0;

  double dt = 0.01;
  std::optional<double> t0_opt;  // default: site_a / v (soliton at n_A at t0)
  std::optional<double> t1_opt;  // default: stage-1 entropy scan argmax
  std::optional<double> t2_opt;  // default: measured soliton arrival at n_B
  double t1_window = 50.0;
  double t1_step = 0.01;
  double t3_window = 20.0;
  double t3_step = 0.01;

  std::size_t n_theta = 24;
  std::size_t n_phi = 24;

  // Qubit initial states as Bloch angles; (0, 0) is |1>.
  double qubit_a_theta = 0.0;
  double qubit_a_phi = 0.0;
  double qubit_b_theta = 0.0;
  double qubit_b_phi = 0.0;

  std::vector<int> s_list{4, 10, 20};    // two_s values for stage-2 profiles
  std::vector<double> profile_offsets;   // t - t1 snapshots; empty -> arrival

  scs::SpinMagnitude spin() const { return scs::SpinMagnitude(two_s); }
  chain::SolitonParams soliton() const;
  double t0() const;
  std::array<cplx, 2> qubit_a_init() const;
  std::array<cplx, 2> qubit_b_init() const;

  // (site_b - site_a) / v: nominal stage-2 duration.
  double nominal_transfer_offset() const;

  // (1/(gS)) h sin(2 beta); the frozen-chain approximation needs this << 1.
  double timescale_ratio() const;

  // The chain state all stages start from: a soliton centered at site_a.
  chain::ChainConfig frozen_chain() const;

  // Throws ValidationError naming the offending key.
  void validate() const;
};

// H = g (Sz sz + (Sp sm + Sm sp)/2) + hq sz (x) 1 on qubit (x) spin,
// with Pauli-normalized ladder operators (s_pm = sx +- i sy).
num::ComplexMatrix qubit_spin_hamiltonian(double g, double hq,
                                          const scs::SpinMagnitude& s);

// Coefficients c_{sigma m}(t) of the entangled (A, S_A) state.
struct StageOneResult {
  num::ComplexMatrix c;  // 2 x (2S+1)
  double t1 = 0.0;

  double norm_squared() const;
  num::DensityMatrix qubit_density() const;
  num::DensityMatrix spin_density() const;
  double qubit_entropy() const;  // von Neumann, log base 2
};

// Exact stage-1 evolution of |A> (x) |Omega0_{n_A}> under the switched-on
// qubit-spin Hamiltonian; the Hamiltonian is diagonalized once.
class Stage1Engine {
 public:
  explicit Stage1Engine(const ProtocolConfig& cfg);

  double t0() const { return t0_; }
  const scs::SphereDirection& omega0() const { return omega0_; }
  StageOneResult at(double t) const;  // t >= t0
  double qubit_entropy(double t) const;

 private:
  std::vector<cplx> state_at(double t) const;

  double t0_;
  scs::SphereDirection omega0_;
  std::size_t spin_dim_;
  std::vector<cplx> psi0_;
  std::vector<double> eigvals_;
  num::ComplexMatrix vectors_;
  std::vector<cplx> vdag_psi0_;
};

StageOneResult stage1_evolve(const ProtocolConfig& cfg, double t);

struct Stage1Scan {
  std::vector<double> times;
  std::vector<double> entropy;
  double t1 = 0.0;           // first maximizer
  double max_entropy = 0.0;
};

Stage1Scan scan_stage1(const ProtocolConfig& cfg, double window, double step);
double select_t1(const ProtocolConfig& cfg, double window, double step);

// f_sigma^{Omega_k} = sum_m c_{sigma m} <Omega_k|m> on the quadrature grid.
struct FTable {
  std::shared_ptr<const scs::QuadratureGrid> grid;
  std::array<std::vector<cplx>, 2> values;  // [sigma][node]
  double grid_norm = 0.0;  // sum_k w_k sum_sigma |f|^2; ~1 on a good grid
};

FTable build_f_table(const StageOneResult& res,
                     std::shared_ptr<const scs::QuadratureGrid> grid);

// Grid reconstruction of the stage-1 coefficients from the f table,
// c_{sigma m} ~= sum_k w_k f_sigma^k <m|Omega_k>; the completeness oracle.
num::ComplexMatrix f_table_reconstruction(const FTable& ftable);

// Classical trajectories, one per quadrature node: the frozen-chain state
// with site n_A replaced by the node direction, integrated from t1.
// Snapshots store half-angle trig tables (node-major), enough to evaluate
// any SCS quantity without an angle round-trip.  Trajectories do not depend
// on S, so one bundle serves every spin value on the same node geometry.
//
// Each node also accumulates its semiclassical action
//   action_k = integral of sum_n (1 - cos theta_n) dphi_n  +  E_cl(k) (t-t1);
// the branch |Omega(t, Omega_k)> carries the phase exp(-i S action_k), the
// time-dependent variational phase of a coherent state riding its classical
// trajectory.  Without it, interference between branches dephases and the
// protocol loses the transported entanglement.
class BundleTrajectories {
 public:
  struct Snapshot {
    double offset = 0.0;  // t - t1, snapped to the step grid
    long step = 0;
    std::vector<double> ch, sh, cp, sp;  // [node * n_sites + site]
    std::vector<double> action;          // [node]; multiply by -S for phase
  };

  static BundleTrajectories integrate(const ProtocolConfig& cfg,
                                      std::shared_ptr<const scs::QuadratureGrid> grid,
                                      double t1,
                                      const std::vector<double>& sample_offsets,
                                      unsigned threads);

  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t n_sites() const { return n_sites_; }
  double t1() const { return t1_; }
  double dt() const { return dt_; }
  const scs::QuadratureGrid& grid() const { return *grid_; }
  std::shared_ptr<const scs::QuadratureGrid> grid_ptr() const { return grid_; }

  const Snapshot& at_offset(double offset) const;  // throws DomainError
  const Snapshot& at_time(double t) const { return at_offset(t - t1_); }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }

  scs::SphereDirection direction(const Snapshot& snap, std::size_t node,
                                 std::size_t site) const;

  // exp(-i S action) of one branch, for the given spin magnitude.
  cplx branch_phase(const Snapshot& snap, std::size_t node,
                    const scs::SpinMagnitude& s) const;

 private:
  std::shared_ptr<const scs::QuadratureGrid> grid_;
  std::size_t n_nodes_ = 0;
  std::size_t n_sites_ = 0;
  double t1_ = 0.0;
  double dt_ = 0.0;
  std::vector<Snapshot> snapshots_;
};

BundleTrajectories stage2_bundle(const ProtocolConfig& cfg,
                                 std::shared_ptr<const scs::QuadratureGrid> grid,
                                 double t1,
                                 const std::vector<double>& sample_times,
                                 unsigned threads = 1);

// prod_{l != exclude} <Omega_l(t, Omega_j) | Omega_l(t, Omega_k)>, summed in
// log space.
cplx pair_overlap_product(const BundleTrajectories& bundle, double t,
                          std::size_t j, std::size_t k,
                          std::optional<std::size_t> exclude = std::nullopt);

// rho_{S_n}(t): the reduced state of chain spin n, assembled from the f
// table and the bundle (qubit already traced out).  Hermitized, normalized
// to unit trace, negative quadrature tails clipped.
num::DensityMatrix site_density_matrix(const ProtocolConfig& cfg,
                                       const FTable& ftable,
                                       const BundleTrajectories& bundle,
                                       std::size_t site, double t,
                                       unsigned threads = 1);

// E_{S_n} = -Tr rho_{S_n} log_{2S+1} rho_{S_n} for every site.
std::vector<std::pair<std::size_t, double>> site_entropy_profile(
    const ProtocolConfig& cfg, const FTable& ftable,
    const BundleTrajectories& bundle, double t, unsigned threads = 1);

// rho_{A,S_B,B}(t2) = rho_{A,S_B}(t2) (x) |B(t2)><B(t2)|, dim 4(2S+1).
num::DensityMatrix stage3_initial_state(const ProtocolConfig& cfg,
                                        const FTable& ftable,
                                        const BundleTrajectories& bundle,
                                        double t2, unsigned threads = 1);

// H = h_A sz_A + g S_B . sigma_B + h_B sz_B on A (x) S_B (x) B.
num::ComplexMatrix stage3_hamiltonian(const ProtocolConfig& cfg);

// rho(t) = U rho0 U^dagger with U = exp(-i H (t - t2)).
num::DensityMatrix stage3_evolve(const num::DensityMatrix& rho0,
                                 const ProtocolConfig& cfg, double t2,
                                 double t);

// Cached-eigendecomposition version of stage3_evolve for time scans.
class Stage3Engine {
 public:
  Stage3Engine(const ProtocolConfig& cfg, const num::DensityMatrix& rho0,
               double t2);

  double t2() const { return t2_; }
  num::DensityMatrix at(double t) const;

 private:
  double t2_;
  std::vector<double> eigvals_;
  num::ComplexMatrix vectors_;
  num::ComplexMatrix rho0_eig_;  // V^dagger rho0 V
};

// Trace over S_B; ordering (A, B).
num::DensityMatrix two_qubit_state(const num::DensityMatrix& rho,
                                   const scs::SpinMagnitude& s);

// Reference (undeformed) trajectory: conservation diagnostics, profile
// snapshots, and the measured soliton arrival at site_b used to pick t2.
struct ReferenceRun {
  std::vector<double> diag_offsets;   // elapsed time since the frozen config
  std::vector<double> energy;
  std::vector<double> total_sz;
  std::vector<double> center;
  std::vector<std::pair<double, chain::ChainConfig>> snapshots;
  double arrival_offset = 0.0;        // offset minimizing |center - site_b|
  double center_at_arrival = 0.0;
};

ReferenceRun run_reference(const ProtocolConfig& cfg, double diag_stride,
                           const std::vector<double>& snapshot_offsets,
                           bool search_arrival = true);

}  // namespace qsol::protocol
