#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Data-parallel inner loops of the simulation, in scalar reference form and
// SIMD variants selected at runtime.  Every variant implements the same
// contract; the scalar kernels are the semantic reference the SIMD ones are
// equivalence-tested against.

namespace qsol::kernels {

// One RK4 step of the Landau-Lifshitz equation
//   ds_n/dt = s_n x (s_{n+1} + s_{n-1} + h zhat)        (JS = 1, d = 1)
// on a periodic chain, followed by per-site renormalization to |s| = 1.
//
// Component arrays are padded: length n+2 with live sites at [1..n]; the
// kernel maintains the ghost slots [0] and [n+1] itself.  `scratch` must
// hold ll_scratch_len(n) doubles.  Returns the maximum |s|^2 over all sites
// just before renormalization; callers must treat anything not <= their
// bound as failure (NaN compares false).
//
// Alongside the spin update, the step integrates the geometric 1-form
//   sum_n (1 - cos theta_n) dphi_n = sum_n (x_n dy_n - y_n dx_n)/(1 + z_n)
// with the same RK4 stages and adds the increment to *geom_acc; per unit
// spin length it is the Berry-phase rate of the coherent-state bundle.
using LLStepFn = double (*)(double* sx, double* sy, double* sz, std::size_t n,
                            double h, double dt, double* scratch,
                            double* geom_acc);

// Per-site SCS overlaps <a_l|b_l> = z_l^{2S} between two half-angle trig
// tables,
//   z_l = ch_b ch_a + sh_b sh_a e^{i(phi_b - phi_a)},
// where ch = cos(theta/2), sh = sin(theta/2), cp = cos(phi), sp = sin(phi).
// Table `a` is the bra, table `b` the ket.
using OverlapRowFn = void (*)(const double* ch_a, const double* sh_a,
                              const double* cp_a, const double* sp_a,
                              const double* ch_b, const double* sh_b,
                              const double* cp_b, const double* sp_b,
                              std::size_t n, int two_s, double* out_re,
                              double* out_im);

struct Kernels {
  const char* name;
  LLStepFn ll_rk4_step;
  OverlapRowFn overlap_row;
};

std::size_t ll_scratch_len(std::size_t n);

// Best variant for this CPU; the QSOLCHAIN_KERNEL environment variable
// (scalar | simd | avx2) overrides the automatic choice.
const Kernels& active();

const Kernels& scalar();

// All variants usable on this machine (scalar first).
std::vector<const Kernels*> available();

}  // namespace qsol::kernels
