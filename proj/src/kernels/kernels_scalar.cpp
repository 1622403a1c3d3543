#include <cmath>
#include <cstddef>

#include "qsolchain/kernels.hpp"

namespace qsol::kernels::scalar_impl {

namespace {

inline void set_ghosts(double* a, std::size_t n) {
  a[0] = a[n];
  a[n + 1] = a[1];
}

// k = s x (s_left + s_right + h zhat), live sites at base[1..n].
// Returns sum_n (x k_y - y k_x)/(1 + z), the geometric rate at this stage.
inline double ll_rhs(const double* x, const double* y, const double* z,
                     std::size_t n, double h, double* kx, double* ky,
                     double* kz) {
  double geom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double bx = x[i] + x[i + 2];
    const double by = y[i] + y[i + 2];
    const double bz = z[i] + z[i + 2] + h;
    const double sx = x[i + 1], sy = y[i + 1], sz = z[i + 1];
    kx[i] = sy * bz - sz * by;
    ky[i] = sz * bx - sx * bz;
    kz[i] = sx * by - sy * bx;
    geom += (sx * ky[i] - sy * kx[i]) / (1.0 + sz);
  }
  return geom;
}

double ll_rk4_step(double* sx, double* sy, double* sz, std::size_t n, double h,
                   double dt, double* scratch, double* geom_acc) {
  double* k1x = scratch;
  double* k1y = k1x + n;
  double* k1z = k1y + n;
  double* k2x = k1z + n;
  double* k2y = k2x + n;
  double* k2z = k2y + n;
  double* k3x = k2z + n;
  double* k3y = k3x + n;
  double* k3z = k3y + n;
  double* k4x = k3z + n;
  double* k4y = k4x + n;
  double* k4z = k4y + n;
  double* tx = k4z + n;
  double* ty = tx + (n + 2);
  double* tz = ty + (n + 2);

  set_ghosts(sx, n);
  set_ghosts(sy, n);
  set_ghosts(sz, n);
  const double g1 = ll_rhs(sx, sy, sz, n, h, k1x, k1y, k1z);

  const double half = 0.5 * dt;
  for (std::size_t i = 0; i < n; ++i) {
    tx[i + 1] = sx[i + 1] + half * k1x[i];
    ty[i + 1] = sy[i + 1] + half * k1y[i];
    tz[i + 1] = sz[i + 1] + half * k1z[i];
  }
  set_ghosts(tx, n);
  set_ghosts(ty, n);
  set_ghosts(tz, n);
  const double g2 = ll_rhs(tx, ty, tz, n, h, k2x, k2y, k2z);

  for (std::size_t i = 0; i < n; ++i) {
    tx[i + 1] = sx[i + 1] + half * k2x[i];
    ty[i + 1] = sy[i + 1] + half * k2y[i];
    tz[i + 1] = sz[i + 1] + half * k2z[i];
  }
  set_ghosts(tx, n);
  set_ghosts(ty, n);
  set_ghosts(tz, n);
  const double g3 = ll_rhs(tx, ty, tz, n, h, k3x, k3y, k3z);

  for (std::size_t i = 0; i < n; ++i) {
    tx[i + 1] = sx[i + 1] + dt * k3x[i];
    ty[i + 1] = sy[i + 1] + dt * k3y[i];
    tz[i + 1] = sz[i + 1] + dt * k3z[i];
  }
  set_ghosts(tx, n);
  set_ghosts(ty, n);
  set_ghosts(tz, n);
  const double g4 = ll_rhs(tx, ty, tz, n, h, k4x, k4y, k4z);

  const double w = dt / 6.0;
  *geom_acc += w * (g1 + 2.0 * (g2 + g3) + g4);
  double max_r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sx[i + 1] + w * (k1x[i] + 2.0 * (k2x[i] + k3x[i]) + k4x[i]);
    const double y = sy[i + 1] + w * (k1y[i] + 2.0 * (k2y[i] + k3y[i]) + k4y[i]);
    const double z = sz[i + 1] + w * (k1z[i] + 2.0 * (k2z[i] + k3z[i]) + k4z[i]);
    const double r2 = x * x + y * y + z * z;
    if (r2 > max_r2 || r2 != r2) max_r2 = r2;  // NaN wins and then sticks
    const double inv = 1.0 / std::sqrt(r2);
    sx[i + 1] = x * inv;
    sy[i + 1] = y * inv;
    sz[i + 1] = z * inv;
  }
  return max_r2;
}

void overlap_row(const double* ch_a, const double* sh_a, const double* cp_a,
                 const double* sp_a, const double* ch_b, const double* sh_b,
                 const double* cp_b, const double* sp_b, std::size_t n,
                 int two_s, double* out_re, double* out_im) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dcos = cp_b[i] * cp_a[i] + sp_b[i] * sp_a[i];
    const double dsin = sp_b[i] * cp_a[i] - cp_b[i] * sp_a[i];
    const double ss = sh_b[i] * sh_a[i];
    double br = ch_b[i] * ch_a[i] + ss * dcos;
    double bi = ss * dsin;
    double rr = 1.0, ri = 0.0;
    int e = two_s;
    while (true) {
      if (e & 1) {
        const double t = rr * br - ri * bi;
        ri = rr * bi + ri * br;
        rr = t;
      }
      e >>= 1;
      if (!e) break;
      const double t = br * br - bi * bi;
      bi = 2.0 * br * bi;
      br = t;
    }
    out_re[i] = rr;
    out_im[i] = ri;
  }
}

}  // namespace

extern const Kernels table;
const Kernels table{"scalar", &ll_rk4_step, &overlap_row};

}  // namespace qsol::kernels::scalar_impl
