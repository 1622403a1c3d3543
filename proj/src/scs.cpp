#include "qsolchain/scs.hpp"

#include <algorithm>
#include <cmath>

namespace qsol::scs {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_phi(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p = 0.0;  // fmod can land exactly on 2pi after the add
  return p;
}

// x^n for small non-negative integer n, by binary exponentiation.  Used for
// both real and complex bases so that every module computes powers the same
// way.
template <typename T>
T ipow(T base, int n) {
  T result(1.0);
  if (n <= 0) return result;
  while (true) {
    if (n & 1) result *= base;
    n >>= 1;
    if (!n) break;
    base *= base;
  }
  return result;
}

}  // namespace

SphereDirection::SphereDirection(double theta_in, double phi_in)
    : theta(std::clamp(theta_in, 0.0, 3.14159265358979323846)),
      phi(wrap_phi(phi_in)) {}

std::array<double, 3> SphereDirection::unit_vector() const {
  const double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

double angle_between(const SphereDirection& a, const SphereDirection& b) {
  const auto ua = a.unit_vector();
  const auto ub = b.unit_vector();
  const double dot =
      std::clamp(ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2], -1.0, 1.0);
  return std::acos(dot);
}

SpinMagnitude::SpinMagnitude(int two_s) : two_s_(two_s) {
  if (two_s < 1) throw DomainError("spin magnitude requires 2S >= 1");
}

double QuadratureGrid::weight_sum() const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.weight;
  return s;
}

std::vector<double> sqrt_binomials(const SpinMagnitude& s) {
  const int two_s = s.two_s();
  std::vector<double> out(s.dim());
  for (int i = 0; i <= two_s; ++i) {
    // sqrt(C(2S, 2S-i)) = sqrt(C(2S, i)); log space keeps 2S ~ 60 finite.
    const double lg = std::lgamma(two_s + 1.0) - std::lgamma(i + 1.0) -
                      std::lgamma(two_s - i + 1.0);
    out[static_cast<std::size_t>(i)] = std::exp(0.5 * lg);
  }
  return out;
}

std::vector<cplx> scs_amplitudes(const SphereDirection& omega,
                                 const SpinMagnitude& s) {
  const int two_s = s.two_s();
  const double ch = std::cos(0.5 * omega.theta);
  const double sh = std::sin(0.5 * omega.theta);
  const std::vector<double> sb = sqrt_binomials(s);
  std::vector<cplx> amp(s.dim());
  // index i <-> m = -S + i:  S+m = i,  S-m = 2S-i
  for (int i = 0; i <= two_s; ++i) {
    const int k = two_s - i;  // phase / sin exponent
    const double mag = sb[static_cast<std::size_t>(i)] * ipow(ch, i) * ipow(sh, k);
    amp[static_cast<std::size_t>(i)] = std::polar(mag, k * omega.phi);
  }
  return amp;
}

cplx scs_overlap(const SphereDirection& omega_a, const SphereDirection& omega_b,
                 const SpinMagnitude& s) {
  const double ca = std::cos(0.5 * omega_a.theta);
  const double sa = std::sin(0.5 * omega_a.theta);
  const double cb = std::cos(0.5 * omega_b.theta);
  const double sb = std::sin(0.5 * omega_b.theta);
  const double cpa = std::cos(omega_a.phi), spa = std::sin(omega_a.phi);
  const double cpb = std::cos(omega_b.phi), spb = std::sin(omega_b.phi);
  // e^{i(phi_b - phi_a)} expanded in products so that this routine and the
  // batched kernels evaluate identical expressions.
  const double dcos = cpb * cpa + spb * spa;
  const double dsin = spb * cpa - cpb * spa;
  const cplx z(cb * ca + sb * sa * dcos, sb * sa * dsin);
  return ipow(z, s.two_s());
}

std::array<double, 3> scs_expectation(const SphereDirection& omega,
                                      const SpinMagnitude& s) {
  auto u = omega.unit_vector();
  for (auto& c : u) c *= s.s();
  return u;
}

void gauss_legendre(std::size_t n, std::vector<double>& x,
                    std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    // Newton iteration on P_n, seeded with the Chebyshev-like estimate.
    double t = std::cos(pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    // Recompute derivative at the converged node for the weight.
    double p0 = 1.0, p1 = t;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    // Seeds descend in t; store ascending.
    x[n - 1 - i] = t;
    w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

QuadratureGrid build_quadrature(std::size_t n_theta, std::size_t n_phi,
                                const SpinMagnitude& s) {
  if (n_theta < 2 || n_phi < 2)
    throw InvalidGridSize("quadrature grid requires n_theta, n_phi >= 2");
  std::vector<double> x, wgl;
  gauss_legendre(n_theta, x, wgl);

  QuadratureGrid grid{{}, s};
  grid.nodes.reserve(n_theta * n_phi);
  const double phi_step = kTwoPi / static_cast<double>(n_phi);
  // w = (2S+1) * w_gl * (2pi/n_phi) / (4pi); uniform phi nodes are exact for
  // the periodic e^{ik phi} integrands as long as |k| < n_phi.
  const double scale = (s.two_s() + 1.0) / (2.0 * static_cast<double>(n_phi));
  for (std::size_t it = 0; it < n_theta; ++it) {
    const double theta = std::acos(std::clamp(x[it], -1.0, 1.0));
    const double w = wgl[it] * scale;
    for (std::size_t ip = 0; ip < n_phi; ++ip)
      grid.nodes.push_back(
          {SphereDirection(theta, phi_step * static_cast<double>(ip)), w});
  }
  return grid;
}

double identity_residual(const QuadratureGrid& grid) {
  const std::size_t dim = grid.spin.dim();
  num::ComplexMatrix acc(dim, dim);
  for (const auto& node : grid.nodes) {
    const auto amp = scs_amplitudes(node.dir, grid.spin);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        acc(i, j) += node.weight * amp[i] * std::conj(amp[j]);
  }
  for (std::size_t i = 0; i < dim; ++i) acc(i, i) -= 1.0;
  return acc.max_abs();
}

num::ComplexMatrix spin_z(const SpinMagnitude& s) {
  num::ComplexMatrix m(s.dim(), s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i) m(i, i) = s.m(i);
  return m;
}

num::ComplexMatrix spin_plus(const SpinMagnitude& s) {
  num::ComplexMatrix m(s.dim(), s.dim());
  const double S = s.s();
  for (std::size_t i = 0; i + 1 < s.dim(); ++i) {
    const double mv = s.m(i);
    m(i + 1, i) = std::sqrt(S * (S + 1.0) - mv * (mv + 1.0));
  }
  return m;
}

num::ComplexMatrix spin_minus(const SpinMagnitude& s) {
  return spin_plus(s).adjoint();
}

}  // namespace qsol::scs
