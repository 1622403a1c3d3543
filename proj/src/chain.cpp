#include "qsolchain/chain.hpp"

#include <algorithm>
#include <cmath>

namespace qsol::chain {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxDt = 0.05;
constexpr double kMinSolitonSignal = 0.05;
// Component bound (1 + 1e-9) on |s| before renormalization, as |s|^2.
constexpr double kMaxR2 = (1.0 + 1e-9) * (1.0 + 1e-9);

}  // namespace

double SolitonParams::h_for_lambda(double lambda, double beta) {
  if (!(lambda > 0.0)) throw DomainError("soliton width must be positive");
  const double sb = std::sin(beta);
  return 1.0 / (lambda * sb * lambda * sb);
}

SolitonParams soliton_derived_params(double beta, double h, double phi0) {
  if (!(beta > 0.0) || !(beta < 0.5 * kPi))
    throw DomainError("soliton amplitude beta must lie in (0, pi/2)");
  if (!(h > 0.0)) throw DomainError("Zeeman field h must be positive");
  SolitonParams p;
  p.beta = beta;
  p.h = h;
  p.phi0 = phi0;
  const double sqrth = std::sqrt(h);
  p.lambda = 1.0 / (sqrth * std::sin(beta));
  p.v = 2.0 * sqrth * std::cos(beta);
  p.tau = 1.0 / (h * std::sin(2.0 * beta));
  p.epsilon = 8.0 * sqrth * std::sin(beta);
  p.continuum_ok = p.lambda >= 3.0;
  return p;
}

ChainConfig tw_soliton_config(const SolitonParams& params, double t,
                              std::size_t n_sites, double center_offset) {
  if (static_cast<double>(n_sites) < 8.0 * params.lambda)
    throw ChainTooShort("chain shorter than 8 soliton widths");
  const double sb = std::sin(params.beta);
  const double cotb = std::cos(params.beta) / sb;
  const double tanb = std::tan(params.beta);
  ChainConfig cfg;
  cfg.directions.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    const double xi =
        (static_cast<double>(n) - center_offset - params.v * t) / params.lambda;
    const double sech = 1.0 / std::cosh(xi);
    const double theta = 2.0 * std::asin(std::clamp(sb * sech, 0.0, 1.0));
    const double phi =
        params.phi0 + cotb * xi + std::atan(tanb * std::tanh(xi));
    cfg.directions.emplace_back(theta, phi);
  }
  return cfg;
}

double chain_energy(const ChainConfig& config, double h) {
  const std::size_t n = config.size();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = config.directions[i].unit_vector();
    const auto b = config.directions[(i + 1) % n].unit_vector();
    e -= a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    e -= h * a[2];
  }
  return e;
}

double total_sz(const ChainConfig& config) {
  double s = 0.0;
  for (const auto& d : config.directions) s += std::cos(d.theta);
  return s;
}

double soliton_center(const ChainConfig& config) {
  const std::size_t n = config.size();
  if (n == 0) throw NoSoliton("empty configuration");
  std::size_t imax = 0;
  double ymax = -1.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 1.0 - std::cos(config.directions[i].theta);
    if (y[i] > ymax) {
      ymax = y[i];
      imax = i;
    }
  }
  if (ymax <= kMinSolitonSignal)
    throw NoSoliton("profile too flat to locate a soliton");
  const double ym = y[(imax + n - 1) % n];
  const double yp = y[(imax + 1) % n];
  const double denom = ym - 2.0 * ymax + yp;
  if (std::abs(denom) < 1e-300) return static_cast<double>(imax);
  return static_cast<double>(imax) + 0.5 * (ym - yp) / denom;
}

EomIntegrator::EomIntegrator(const ChainConfig& initial, double h, double dt,
                             const kernels::Kernels& k)
    : n_(initial.size()),
      h_(h),
      dt_(dt),
      t_start_(0.0),
      kernels_(&k),
      x_(n_ + 2),
      y_(n_ + 2),
      z_(n_ + 2),
      scratch_(kernels::ll_scratch_len(n_)) {
  if (!(dt > 0.0)) throw StepTooLarge("time step must be positive");
  if (dt > kMaxDt) throw StepTooLarge("time step exceeds 0.05 (JS)^-1");
  if (n_ < 3) throw ChainTooShort("integrator requires at least 3 sites");
  for (std::size_t i = 0; i < n_; ++i) {
    const auto u = initial.directions[i].unit_vector();
    x_[i + 1] = u[0];
    y_[i + 1] = u[1];
    z_[i + 1] = u[2];
  }
  e0_ = energy(h);
}

void EomIntegrator::advance_steps(long steps) {
  if (steps < 0) throw DomainError("integrator cannot step backwards");
  for (long s = 0; s < steps; ++s) {
    const double max_r2 = kernels_->ll_rk4_step(x_.data(), y_.data(), z_.data(),
                                                n_, h_, dt_, scratch_.data(),
                                                &geom_);
    if (!(max_r2 <= kMaxR2))
      throw NonFinite("spin norm left [1-eps, 1+1e-9] during integration");
  }
  step_ += steps;
}

void EomIntegrator::advance_to(double t) {
  const long target = std::lround((t - t_start_) / dt_);
  if (target < step_) throw DomainError("integrator cannot step backwards");
  advance_steps(target - step_);
}

double EomIntegrator::time() const {
  return t_start_ + static_cast<double>(step_) * dt_;
}

ChainConfig EomIntegrator::config() const {
  ChainConfig cfg;
  cfg.directions.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double z = std::clamp(z_[i + 1], -1.0, 1.0);
    const double theta = std::acos(z);
    const double rho = std::hypot(x_[i + 1], y_[i + 1]);
    const double phi = rho > 0.0 ? std::atan2(y_[i + 1], x_[i + 1]) : 0.0;
    cfg.directions.emplace_back(theta, phi);
  }
  return cfg;
}

double EomIntegrator::energy(double h) const {
  double e = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j = (i + 1) % n_;
    e -= x_[i + 1] * x_[j + 1] + y_[i + 1] * y_[j + 1] + z_[i + 1] * z_[j + 1];
    e -= h * z_[i + 1];
  }
  return e;
}

double EomIntegrator::total_sz() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += z_[i + 1];
  return s;
}

std::vector<ChainConfig> integrate_eom(const ChainConfig& config, double h,
                                       double dt,
                                       const std::vector<double>& sample_times) {
  EomIntegrator integrator(config, h, dt);
  std::vector<ChainConfig> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    integrator.advance_to(t);
    out.push_back(integrator.config());
  }
  return out;
}

}  // namespace qsol::chain
