#include "qsolchain/entanglement.hpp"

#include <algorithm>
#include <cmath>

namespace qsol::ent {

using num::ComplexMatrix;
using num::cplx;
using num::DensityMatrix;

double von_neumann_entropy(const DensityMatrix& rho, std::size_t base_dim) {
  if (base_dim < 2) throw DomainError("entropy base must be >= 2");
  const num::EigenSystem es = num::hermitian_eigensystem(rho.matrix());
  if (es.values.front() < DensityMatrix::kPsdTol)
    throw NotPsd("entropy input has eigenvalue below -1e-10");
  double e = 0.0;
  for (double lam : es.values) {
    const double l = std::clamp(lam, 0.0, 1.0);
    if (l > 0.0) e -= l * std::log(l);
  }
  return e / std::log(static_cast<double>(base_dim));
}

ConcurrenceResult wootters_concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4)
    throw DimensionMismatch("concurrence requires a two-qubit (4x4) state");

  // rho~ = (sy x sy) rho* (sy x sy); (sy x sy) is the anti-diagonal
  // {-1, 1, 1, -1} in the computational basis.
  ComplexMatrix flip(4, 4);
  flip(0, 3) = -1.0;
  flip(1, 2) = 1.0;
  flip(2, 1) = 1.0;
  flip(3, 0) = -1.0;
  const ComplexMatrix rho_tilde = flip * rho.matrix().conjugate() * flip;

  const ComplexMatrix root = num::psd_sqrt(rho);
  ComplexMatrix m = root * rho_tilde * root;
  // Hermitian up to rounding; symmetrize so the eigensolver accepts it.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i; j < 4; ++j) {
      const cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
      m(i, j) = avg;
      m(j, i) = std::conj(avg);
    }

  const num::EigenSystem es = num::hermitian_eigensystem(m);
  ConcurrenceResult out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lam = std::max(es.values[3 - i], 0.0);  // descending
    out.mu[i] = std::sqrt(lam);
  }
  out.concurrence =
      std::max(0.0, out.mu[0] - out.mu[1] - out.mu[2] - out.mu[3]);
  return out;
}

}  // namespace qsol::ent
