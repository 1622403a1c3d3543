#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qsolchain/complex_matrix.hpp"
#include "qsolchain/errors.hpp"

// Spin-coherent-state (SCS) algebra for arbitrary spin S.
//
// Basis and phase conventions, shared by every module:
//   * the spin-S Hilbert space is spanned by |m>, m = -S..S; vector index i
//     maps to m = -S + i (m = +S is the *last* component);
//   * the SCS |Omega> labelled by polar angles (theta, phi) has components
//       <m|Omega> = sqrt(C(2S, S-m)) cos^{S+m}(theta/2) sin^{S-m}(theta/2)
//                   e^{i (S-m) phi},
//     the tan-free form of the usual (cos(theta/2))^{2S} tan^{S-m}(theta/2)
//     expression, regular at theta = pi.

namespace qsol::scs {

using num::cplx;

// A point on the unit sphere; theta clamped to [0, pi], phi reduced mod 2pi.
struct SphereDirection {
  double theta = 0.0;
  double phi = 0.0;

  SphereDirection() = default;
  SphereDirection(double theta_in, double phi_in);

  std::array<double, 3> unit_vector() const;
};

// Angle between two directions' unit vectors.
double angle_between(const SphereDirection& a, const SphereDirection& b);

// Spin magnitude stored as 2S (any positive integer, so half-integer spins
// are representable exactly).
class SpinMagnitude {
 public:
  explicit SpinMagnitude(int two_s);

  int two_s() const { return two_s_; }
  std::size_t dim() const { return static_cast<std::size_t>(two_s_) + 1; }
  double s() const { return 0.5 * two_s_; }
  double m(std::size_t index) const { return -s() + static_cast<double>(index); }

  friend bool operator==(const SpinMagnitude& a, const SpinMagnitude& b) {
    return a.two_s_ == b.two_s_;
  }

 private:
  int two_s_;
};

// Weighted sphere nodes discretizing (2S+1) Int dOmega/4pi; weights sum
// to 2S+1 so that sum_k w_k |Omega_k><Omega_k| approximates the identity.
struct QuadratureGrid {
  struct Node {
    SphereDirection dir;
    double weight;
  };
  std::vector<Node> nodes;
  SpinMagnitude spin;

  std::size_t size() const { return nodes.size(); }
  double weight_sum() const;
};

// <m|Omega> for all m, ascending; unit norm.
std::vector<cplx> scs_amplitudes(const SphereDirection& omega,
                                 const SpinMagnitude& s);

// <Omega_a|Omega_b> = (cos(th_b/2)cos(th_a/2)
//                      + sin(th_b/2)sin(th_a/2) e^{i(phi_b-phi_a)})^{2S}.
cplx scs_overlap(const SphereDirection& omega_a, const SphereDirection& omega_b,
                 const SpinMagnitude& s);

// <Omega|S_vec|Omega> = S * unit_vector(Omega).
std::array<double, 3> scs_expectation(const SphereDirection& omega,
                                      const SpinMagnitude& s);

// Product grid: Gauss-Legendre in cos(theta) x uniform phi.
QuadratureGrid build_quadrature(std::size_t n_theta, std::size_t n_phi,
                                const SpinMagnitude& s);

// Max-entry norm of sum_k w_k |Omega_k><Omega_k| - 1 in the m basis.
double identity_residual(const QuadratureGrid& grid);

// sqrt(binomial(2S, S-m)) for index i = S+m = 0..2S, computed in log space.
std::vector<double> sqrt_binomials(const SpinMagnitude& s);

// Spin operator matrices in the |m> basis (index ascending in m):
// Sp |m> = sqrt(S(S+1) - m(m+1)) |m+1>, Sm = Sp^dagger, Sz = diag(m).
num::ComplexMatrix spin_z(const SpinMagnitude& s);
num::ComplexMatrix spin_plus(const SpinMagnitude& s);
num::ComplexMatrix spin_minus(const SpinMagnitude& s);

// Gauss-Legendre nodes/weights on [-1, 1] (ascending nodes).
void gauss_legendre(std::size_t n, std::vector<double>& x,
                    std::vector<double>& w);

}  // namespace qsol::scs
