#include "qsolchain/complex_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace qsol::num {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::zero(std::size_t rows, std::size_t cols) {
  return ComplexMatrix(rows, cols);
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = std::conj(a_[i]);
  return out;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw DimensionMismatch("matrix addition with mismatched shapes");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += rhs.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw DimensionMismatch("matrix subtraction with mismatched shapes");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= rhs.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& v : a_) v *= s;
  return *this;
}

cplx ComplexMatrix::trace() const {
  cplx t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : a_) m = std::max(m, std::abs(v));
  return m;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

bool ComplexMatrix::all_finite() const {
  for (const auto& v : a_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

bool ComplexMatrix::is_hermitian(double tol) const {
  if (!square()) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i; j < cols_; ++j)
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
  return true;
}

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) {
  lhs += rhs;
  return lhs;
}

ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) {
  lhs -= rhs;
  return lhs;
}

ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs) {
  if (lhs.cols() != rhs.rows())
    throw DimensionMismatch("matrix product with mismatched shapes");
  ComplexMatrix out(lhs.rows(), rhs.cols());
  for (std::size_t i = 0; i < lhs.rows(); ++i) {
    for (std::size_t k = 0; k < lhs.cols(); ++k) {
      const cplx lik = lhs(i, k);
      if (lik == cplx{}) continue;
      for (std::size_t j = 0; j < rhs.cols(); ++j) out(i, j) += lik * rhs(k, j);
    }
  }
  return out;
}

ComplexMatrix operator*(cplx s, ComplexMatrix m) {
  m *= s;
  return m;
}

std::vector<cplx> operator*(const ComplexMatrix& m, const std::vector<cplx>& v) {
  if (m.cols() != v.size())
    throw DimensionMismatch("matrix-vector product with mismatched shapes");
  std::vector<cplx> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("max_abs_diff with mismatched shapes");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagTol = 1e-13;

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

EigenSystem hermitian_eigensystem(const ComplexMatrix& m) {
  if (!m.square()) throw DimensionMismatch("eigensystem of a non-square matrix");
  if (!m.all_finite()) throw NonFinite("eigensystem input has NaN/Inf entries");
  const double scale = std::max(1.0, m.max_abs());
  if (!m.is_hermitian(1e-10 * scale))
    throw NotHermitian("eigensystem input is not Hermitian");

  const std::size_t n = m.rows();
  ComplexMatrix a = m;
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double norm0 = a.frobenius_norm();
  const double target = kOffDiagTol * std::max(norm0, 1e-300);

  bool converged = norm0 == 0.0 || off_diagonal_norm(a) <= target;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        // Phase that makes the (p,q) entry real, then a real Jacobi rotation.
        const cplx phase = apq / mag;  // e^{i arg(apq)}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on columns (p, q).
        const cplx jqp = -s * std::conj(phase);
        const cplx jqq = c * std::conj(phase);
        // Rows p, q of A <- J^dagger A.
        for (std::size_t j = 0; j < n; ++j) {
          const cplx apj = a(p, j);
          const cplx aqj = a(q, j);
          a(p, j) = c * apj + std::conj(jqp) * aqj;
          a(q, j) = s * apj + std::conj(jqq) * aqj;
        }
        // Columns p, q of A <- A J, and accumulate V <- V J.
        for (std::size_t i = 0; i < n; ++i) {
          const cplx aip = a(i, p);
          const cplx aiq = a(i, q);
          a(i, p) = c * aip + jqp * aiq;
          a(i, q) = s * aip + jqq * aiq;
          const cplx vip = v(i, p);
          const cplx viq = v(i, q);
          v(i, p) = c * vip + jqp * viq;
          v(i, q) = s * vip + jqq * viq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = cplx(a(p, p).real(), 0.0);
        a(q, q) = cplx(a(q, q).real(), 0.0);
      }
    }
    converged = off_diagonal_norm(a) <= target;
  }
  if (!converged)
    throw NoConvergence("Jacobi eigensolver did not converge in 100 sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() < a(j, j).real();
  });

  EigenSystem out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

ComplexMatrix evolve_unitary(const ComplexMatrix& h, double t) {
  const EigenSystem es = hermitian_eigensystem(h);
  const std::size_t n = h.rows();
  // V diag(e^{-i lambda t}) V^dagger
  ComplexMatrix u(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const cplx ph = std::polar(1.0, -es.values[k] * t);
        s += es.vectors(i, k) * ph * std::conj(es.vectors(j, k));
      }
      u(i, j) = s;
    }
  }
  return u;
}

DensityMatrix DensityMatrix::from_matrix(const ComplexMatrix& m, Clip clip) {
  if (!m.square()) throw DimensionMismatch("density matrix must be square");
  if (!m.all_finite()) throw NonFinite("density matrix has NaN/Inf entries");
  if (!m.is_hermitian(kHermitianTol * std::max(1.0, m.max_abs())))
    throw NotHermitian("density matrix is not Hermitian");

  const std::size_t n = m.rows();
  ComplexMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      h(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));

  const double tr = h.trace().real();
  if (!(tr > kTraceTol)) throw NonNormalizable("density matrix trace too small");
  h *= cplx(1.0 / tr, 0.0);

  const EigenSystem es = hermitian_eigensystem(h);
  if (es.values.front() < kPsdTol)
    throw NotPsd("density matrix has eigenvalue below -1e-10");

  if (clip == Clip::negatives && es.values.front() < 0.0) {
    ComplexMatrix rebuilt(n, n);
    double sum = 0.0;
    std::vector<double> lam(es.values);
    for (auto& l : lam) {
      l = std::max(l, 0.0);
      sum += l;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          s += es.vectors(i, k) * (lam[k] / sum) * std::conj(es.vectors(j, k));
        rebuilt(i, j) = s;
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const cplx avg = 0.5 * (rebuilt(i, j) + std::conj(rebuilt(j, i)));
        rebuilt(i, j) = avg;
        rebuilt(j, i) = std::conj(avg);
      }
    return DensityMatrix(std::move(rebuilt));
  }
  return DensityMatrix(std::move(h));
}

DensityMatrix DensityMatrix::pure(const std::vector<cplx>& psi) {
  const std::size_t n = psi.size();
  double norm2 = 0.0;
  for (const auto& c : psi) norm2 += std::norm(c);
  if (!(norm2 > kTraceTol)) throw NonNormalizable("state vector has zero norm");
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = psi[i] * std::conj(psi[j]) / norm2;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::unchecked(ComplexMatrix m) {
  return DensityMatrix(std::move(m));
}

ComplexMatrix psd_sqrt(const DensityMatrix& rho) {
  const EigenSystem es = hermitian_eigensystem(rho.matrix());
  if (es.values.front() < DensityMatrix::kPsdTol)
    throw NotPsd("psd_sqrt input has eigenvalue below -1e-10");
  const std::size_t n = rho.dim();
  std::vector<double> root(n);
  for (std::size_t k = 0; k < n; ++k)
    root[k] = std::sqrt(std::max(es.values[k], 0.0));
  ComplexMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += es.vectors(i, k) * root[k] * std::conj(es.vectors(j, k));
      r(i, j) = s;
      r(j, i) = std::conj(s);
    }
  for (std::size_t i = 0; i < n; ++i) r(i, i) = cplx(r(i, i).real(), 0.0);
  return r;
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& keep) {
  std::size_t prod = 1;
  for (std::size_t d : dims) prod *= d;
  if (prod != rho.dim())
    throw DimensionMismatch("partial_trace: dims do not factor rho");
  if (keep.empty()) throw DimensionMismatch("partial_trace: empty keep set");
  std::vector<bool> kept(dims.size(), false);
  for (std::size_t s : keep) {
    if (s >= dims.size())
      throw DimensionMismatch("partial_trace: keep index out of range");
    kept[s] = true;
  }

  // Strides in the full index, slowest (leftmost) factor first.
  std::vector<std::size_t> stride(dims.size(), 1);
  for (std::size_t s = dims.size(); s-- > 1;)
    stride[s - 1] = stride[s] * dims[s];

  std::vector<std::size_t> keep_subs, trace_subs;
  for (std::size_t s = 0; s < dims.size(); ++s)
    (kept[s] ? keep_subs : trace_subs).push_back(s);

  std::size_t kept_dim = 1, traced_dim = 1;
  for (std::size_t s : keep_subs) kept_dim *= dims[s];
  for (std::size_t s : trace_subs) traced_dim *= dims[s];

  // full-space offset of a flattened multi-index over `subs`
  auto offset = [&](const std::vector<std::size_t>& subs, std::size_t flat) {
    std::size_t off = 0;
    for (std::size_t s = subs.size(); s-- > 0;) {
      const std::size_t d = dims[subs[s]];
      off += (flat % d) * stride[subs[s]];
      flat /= d;
    }
    return off;
  };

  std::vector<std::size_t> keep_off(kept_dim), trace_off(traced_dim);
  for (std::size_t i = 0; i < kept_dim; ++i) keep_off[i] = offset(keep_subs, i);
  for (std::size_t i = 0; i < traced_dim; ++i)
    trace_off[i] = offset(trace_subs, i);

  ComplexMatrix out(kept_dim, kept_dim);
  for (std::size_t i = 0; i < kept_dim; ++i)
    for (std::size_t j = 0; j < kept_dim; ++j) {
      cplx s = 0.0;
      for (std::size_t t = 0; t < traced_dim; ++t)
        s += rho(keep_off[i] + trace_off[t], keep_off[j] + trace_off[t]);
      out(i, j) = s;
    }
  return DensityMatrix::unchecked(std::move(out));
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

}  // namespace qsol::num
