#pragma once

#include <cstddef>
#include <vector>

#include "qsolchain/errors.hpp"
#include "qsolchain/kernels.hpp"
#include "qsolchain/scs.hpp"

// Classical Heisenberg chain in reduced units: times in (JS)^-1, lengths in
// lattice spacings (JS = 1, d = 1).  Periodic boundary conditions.

namespace qsol::chain {

// Classical configuration {Omega_n}: one unit spin direction per site.
struct ChainConfig {
  std::vector<scs::SphereDirection> directions;

  std::size_t size() const { return directions.size(); }
};

// Tjon-Wright soliton parameters.  `beta` is the amplitude, `h` the
// dimensionless Zeeman field (gamma H / JS); the remaining fields derive
// from them:
//   lambda = 1 / (sqrt(h) sin beta)      width in sites
//   v      = 2 sqrt(h) cos beta          sites per (JS)^-1
//   tau    = 1 / (h sin 2beta)           soliton time scale
//   epsilon= 8 sqrt(h) sin beta          energy excess over the background
struct SolitonParams {
  double beta = 0.0;
  double h = 0.0;
  double phi0 = 0.0;
  double lambda = 0.0;
  double v = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  bool continuum_ok = true;  // false when lambda < 3 sites

  // Zeeman field that produces a soliton of the requested width.
  static double h_for_lambda(double lambda, double beta);
};

SolitonParams soliton_derived_params(double beta, double h, double phi0 = 0.0);

// Soliton profile at time t:
//   theta_n = 2 asin(sin(beta) sech xi),
//   phi_n   = phi0 + cot(beta) xi + atan(tan(beta) tanh xi),
// with xi = (n - center_offset - v t) / lambda.  Requires N >= 8 lambda.
ChainConfig tw_soliton_config(const SolitonParams& params, double t,
                              std::size_t n_sites, double center_offset);

// -sum_n [ s_n . s_{n+1} + h s_n^z ], periodic wrap.
double chain_energy(const ChainConfig& config, double h);

// sum_n cos(theta_n).
double total_sz(const ChainConfig& config);

// Fractional site index of the 1 - cos(theta) peak (parabolic interpolation
// around the maximal site).  Throws NoSoliton when max(1 - cos theta) <= 0.05.
double soliton_center(const ChainConfig& config);

// Fixed-step RK4 integration of
//   ds_n/dt = s_n x (s_{n+1} + s_{n-1} + h zhat)
// with per-step renormalization |s_n| = 1.  The object owns its state
// exclusively; distinct integrations are independent and may run on
// different threads.
class EomIntegrator {
 public:
  // Throws StepTooLarge for dt > 0.05.
  EomIntegrator(const ChainConfig& initial, double h, double dt,
                const kernels::Kernels& k = kernels::active());

  // Advances to start_time + round(t/dt)*dt steps; t must not go backwards.
  // Throws NonFinite if any spin component leaves [-1-1e-9, 1+1e-9] before
  // renormalization.
  void advance_to(double t);
  void advance_steps(long steps);

  double time() const;
  long step_index() const { return step_; }
  double dt() const { return dt_; }
  std::size_t n_sites() const { return n_; }

  ChainConfig config() const;

  // Raw Cartesian state of site i (no angle round-trip).
  double sx(std::size_t i) const { return x_[i + 1]; }
  double sy(std::size_t i) const { return y_[i + 1]; }
  double sz(std::size_t i) const { return z_[i + 1]; }

  double energy(double h) const;
  double total_sz() const;

  // Integral of sum_n (1 - cos theta_n) dphi_n along the trajectory so far;
  // times the spin length it is the bundle's Berry phase.
  double geometric_action() const { return geom_; }

  // Conserved chain energy of the initial configuration (with this run's h).
  double initial_energy() const { return e0_; }

 private:
  std::size_t n_;
  double h_;
  double dt_;
  double t_start_;
  long step_ = 0;
  double geom_ = 0.0;
  double e0_ = 0.0;
  const kernels::Kernels* kernels_;
  std::vector<double> x_, y_, z_;  // padded, live sites at [1..n]
  std::vector<double> scratch_;
};

// Convenience wrapper: integrate from `config` and return snapshots at the
// requested times (each snapped to the step grid).
std::vector<ChainConfig> integrate_eom(const ChainConfig& config, double h,
                                       double dt,
                                       const std::vector<double>& sample_times);

}  // namespace qsol::chain
