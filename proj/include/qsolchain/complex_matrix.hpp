#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qsolchain/errors.hpp"

// Dense complex linear algebra shared by all quantum-state computations.
//
// Conventions used throughout the library:
//   * matrices are row-major;
//   * composite (tensor-product) indices order subsystems with the *leftmost*
//     factor as the slowest index, i.e. kron(A, B) has index i_A * dim_B + i_B.

namespace qsol::num {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix zero(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  cplx* data() { return a_.data(); }
  const cplx* data() const { return a_.data(); }

  ComplexMatrix adjoint() const;
  ComplexMatrix conjugate() const;
  ComplexMatrix transpose() const;

  ComplexMatrix& operator+=(const ComplexMatrix& rhs);
  ComplexMatrix& operator-=(const ComplexMatrix& rhs);
  ComplexMatrix& operator*=(cplx s);

  cplx trace() const;
  double max_abs() const;        // max-entry norm
  double frobenius_norm() const;
  bool all_finite() const;
  bool is_hermitian(double tol) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> a_;
};

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(cplx s, ComplexMatrix m);

std::vector<cplx> operator*(const ComplexMatrix& m, const std::vector<cplx>& v);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigenSystem {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // unitary; column j belongs to values[j]
};

// Cyclic Jacobi diagonalization of a Hermitian matrix.  The input must be
// Hermitian within 1e-10 (relative to max(1, max_abs)); convergence is
// declared when the off-diagonal Frobenius norm drops below 1e-13 times the
// norm of the input, with a hard cap of 100 sweeps.
EigenSystem hermitian_eigensystem(const ComplexMatrix& m);

// U = exp(-i H t) for Hermitian H, via eigendecomposition.
ComplexMatrix evolve_unitary(const ComplexMatrix& h, double t);

// Hermitian, positive semidefinite, unit-trace matrix.  Eigenvalues may dip
// to -1e-10 from quadrature discretization; anything lower is rejected.
class DensityMatrix {
 public:
  enum class Clip {
    none,       // validate eigenvalues >= -1e-10, keep matrix as given
    negatives,  // clip eigenvalues in [-1e-10, 0) to 0 and rebuild
  };

  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kPsdTol = -1e-10;
  static constexpr double kTraceTol = 1e-12;

  // Symmetrizes exactly, normalizes the trace to 1 and enforces positivity
  // according to `clip`.  Throws NotHermitian / NonNormalizable / NotPsd.
  static DensityMatrix from_matrix(const ComplexMatrix& m,
                                   Clip clip = Clip::none);

  // Projector onto a normalized state vector.
  static DensityMatrix pure(const std::vector<cplx>& psi);

  // No validation: for results that hold the invariants by construction
  // (e.g. unitary conjugation of an already valid state).
  static DensityMatrix unchecked(ComplexMatrix m);

  std::size_t dim() const { return m_.rows(); }
  const ComplexMatrix& matrix() const { return m_; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

// Hermitian PSD square root; eigenvalues in [-1e-10, 0) are clipped to 0.
ComplexMatrix psd_sqrt(const DensityMatrix& rho);

// Traces out every subsystem not listed in `keep`.  `dims` are the subsystem
// dimensions, slowest (leftmost) first; their product must equal rho.dim().
// The kept subsystems retain their relative order.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& keep);

// kron(a, b) with the index convention stated at the top of this header.
ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace qsol::num
