#pragma once

#include <array>
#include <cstddef>

#include "qsolchain/complex_matrix.hpp"

namespace qsol::ent {

// -sum_i lambda_i log_{base_dim} lambda_i with 0 log 0 = 0; eigenvalues are
// clipped to [0, 1].  With base_dim = rho.dim() the result lies in [0, 1].
double von_neumann_entropy(const num::DensityMatrix& rho, std::size_t base_dim);

struct ConcurrenceResult {
  double concurrence = 0.0;          // max(0, mu[0]-mu[1]-mu[2]-mu[3])
  std::array<double, 4> mu{};        // descending
};

// Wootters concurrence of a two-qubit state via the Hermitian route:
// mu_i^2 are the eigenvalues of sqrt(rho) rho~ sqrt(rho) with
// rho~ = (sy x sy) rho* (sy x sy).
ConcurrenceResult wootters_concurrence(const num::DensityMatrix& rho);

}  // namespace qsol::ent
