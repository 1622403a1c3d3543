#include <cmath>
#include <complex>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "qsolchain/chain.hpp"
#include "qsolchain/entanglement.hpp"
#include "qsolchain/pipeline.hpp"
#include "qsolchain/protocol.hpp"

// Oracle checks runnable from the CLI without a test framework: each check
// recomputes its expected value from an independent route (hand
// diagonalization, direct index sums, analytic formulas) and compares.

namespace qsol::cli {

namespace {

using num::ComplexMatrix;
using num::cplx;
using num::DensityMatrix;

constexpr double kPi = 3.14159265358979323846;

struct Reporter {
  int failures = 0;

  void check(const std::string& name, const std::function<bool()>& fn) {
    bool ok = false;
    std::string detail;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (ok) {
      std::cout << "[ok]   " << name << "\n";
    } else {
      ++failures;
      std::cout << "[FAIL] " << name;
      if (!detail.empty()) std::cout << "  (" << detail << ")";
      std::cout << "\n";
    }
  }
};

ComplexMatrix random_hermitian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = u(rng);
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx v(u(rng), u(rng));
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  }
  return m;
}

scs::SphereDirection random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return scs::SphereDirection(std::acos(2.0 * u(rng) - 1.0),
                              2.0 * kPi * u(rng));
}

protocol::ProtocolConfig tiny_config() {
  protocol::ProtocolConfig cfg;
  cfg.two_s = 4;
  cfg.n_sites = 32;
  cfg.site_a = 8;
  cfg.site_b = 20;
  cfg.lambda_beta = 2.5;
  cfg.n_theta = 8;
  cfg.n_phi = 8;
  cfg.t1_window = 5.0;
  cfg.t1_step = 0.05;
  cfg.t3_window = 2.0;
  cfg.t3_step = 0.05;
  return cfg;
}

}  // namespace

int run_selftest() {
  Reporter r;

  r.check("eigensystem: identity 4x4", [] {
    const auto es = num::hermitian_eigensystem(ComplexMatrix::identity(4));
    for (double v : es.values)
      if (std::abs(v - 1.0) > 1e-12) return false;
    return true;
  });

  r.check("eigensystem: diag(3,-1) sorted ascending", [] {
    ComplexMatrix m(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = -1.0;
    const auto es = num::hermitian_eigensystem(m);
    return std::abs(es.values[0] + 1.0) < 1e-12 &&
           std::abs(es.values[1] - 3.0) < 1e-12;
  });

  r.check("eigensystem: sigma_x hand oracle", [] {
    ComplexMatrix m(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    const auto es = num::hermitian_eigensystem(m);
    return std::abs(es.values[0] + 1.0) < 1e-12 &&
           std::abs(es.values[1] - 1.0) < 1e-12;
  });

  r.check("eigensystem: 12x12 reconstruction", [] {
    const auto m = random_hermitian(12, 11);
    const auto es = num::hermitian_eigensystem(m);
    ComplexMatrix rec(12, 12);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < 12; ++k)
          s += es.vectors(i, k) * es.values[k] * std::conj(es.vectors(j, k));
        rec(i, j) = s;
      }
    return num::max_abs_diff(rec, m) <= 1e-9 * m.max_abs();
  });

  r.check("evolve_unitary: H=0 and diagonal cases", [] {
    const auto u0 = num::evolve_unitary(ComplexMatrix::zero(3, 3), 2.5);
    if (num::max_abs_diff(u0, ComplexMatrix::identity(3)) > 1e-12) return false;
    ComplexMatrix h(2, 2);
    h(0, 0) = 1.0;
    h(1, 1) = -1.0;
    const auto u = num::evolve_unitary(h, kPi);
    ComplexMatrix minus_i = ComplexMatrix::identity(2);
    minus_i *= cplx(-1.0, 0.0);
    return num::max_abs_diff(u, minus_i) < 1e-10;
  });

  r.check("evolve_unitary: group property", [] {
    const auto h = random_hermitian(6, 21);
    const auto u1 = num::evolve_unitary(h, 0.31);
    const auto u2 = num::evolve_unitary(h, 0.57);
    const auto u12 = num::evolve_unitary(h, 0.88);
    return num::max_abs_diff(u1 * u2, u12) < 1e-9;
  });

  r.check("psd_sqrt: diagonal and projector", [] {
    ComplexMatrix d(2, 2);
    d(0, 0) = 0.64;
    d(1, 1) = 0.36;
    const auto root = num::psd_sqrt(DensityMatrix::from_matrix(d));
    if (std::abs(root(0, 0).real() - 0.8) > 1e-12 ||
        std::abs(root(1, 1).real() - 0.6) > 1e-12)
      return false;
    const auto proj = DensityMatrix::pure({cplx(0.6, 0.0), cplx(0.0, 0.8)});
    const auto r2 = num::psd_sqrt(proj);
    return num::max_abs_diff(r2 * r2, proj.matrix()) < 1e-9 &&
           num::max_abs_diff(r2, proj.matrix()) < 1e-7;
  });

  r.check("partial_trace: Bell state and factorized input", [] {
    const double s = std::sqrt(0.5);
    const auto bell = DensityMatrix::pure({s, 0.0, 0.0, s});
    const auto red = num::partial_trace(bell, {2, 2}, {0});
    if (std::abs(red(0, 0).real() - 0.5) > 1e-12 ||
        std::abs(red(1, 1).real() - 0.5) > 1e-12 ||
        std::abs(red(0, 1)) > 1e-12)
      return false;
    ComplexMatrix a(2, 2), b(2, 2);
    a(0, 0) = 0.7;
    a(1, 1) = 0.3;
    a(0, 1) = a(1, 0) = 0.1;
    b(0, 0) = 0.2;
    b(1, 1) = 0.8;
    const auto prod =
        DensityMatrix::from_matrix(num::tensor_product(a, b));
    const auto back = num::partial_trace(prod, {2, 2}, {0});
    return num::max_abs_diff(back.matrix(), a) < 1e-12;
  });

  r.check("tensor_product: index enumeration oracle", [] {
    ComplexMatrix d1(2, 2), d2(2, 2);
    d1(0, 0) = 1.0;
    d1(1, 1) = 2.0;
    d2(0, 0) = 3.0;
    d2(1, 1) = 4.0;
    const auto t = num::tensor_product(d1, d2);
    return std::abs(t(0, 0).real() - 3.0) < 1e-15 &&
           std::abs(t(1, 1).real() - 4.0) < 1e-15 &&
           std::abs(t(2, 2).real() - 6.0) < 1e-15 &&
           std::abs(t(3, 3).real() - 8.0) < 1e-15;
  });

  r.check("scs_amplitudes: poles and S=1/2 closed form", [] {
    const scs::SpinMagnitude s5(10);
    const auto north = scs::scs_amplitudes({0.0, 0.3}, s5);
    if (std::abs(north.back() - cplx(1.0, 0.0)) > 1e-14) return false;
    for (std::size_t i = 0; i + 1 < north.size(); ++i)
      if (std::abs(north[i]) > 1e-14) return false;
    const scs::SpinMagnitude half(1);
    const scs::SphereDirection w(1.1, 2.2);
    const auto amp = scs::scs_amplitudes(w, half);
    const cplx lo = std::polar(std::sin(0.55), 2.2);
    return std::abs(amp[0] - lo) < 1e-14 &&
           std::abs(amp[1] - cplx(std::cos(0.55), 0.0)) < 1e-14;
  });

  r.check("scs_overlap: unit self-overlap, antipodal zero, B2 sum", [] {
    std::mt19937_64 rng(7);
    const scs::SpinMagnitude s5(10);
    const auto a = random_direction(rng);
    const auto b = random_direction(rng);
    if (std::abs(scs::scs_overlap(a, a, s5) - cplx(1.0, 0.0)) > 1e-12)
      return false;
    const scs::SphereDirection anti(kPi - a.theta, a.phi + kPi);
    if (std::abs(scs::scs_overlap(a, anti, s5)) > 1e-12) return false;
    const auto va = scs::scs_amplitudes(a, s5);
    const auto vb = scs::scs_amplitudes(b, s5);
    cplx dot = 0.0;
    for (std::size_t m = 0; m < va.size(); ++m)
      dot += std::conj(va[m]) * vb[m];
    return std::abs(dot - scs::scs_overlap(a, b, s5)) < 1e-12;
  });

  r.check("scs_expectation: poles and S=1 matrix oracle", [] {
    const scs::SpinMagnitude s5(10);
    const auto north = scs::scs_expectation({0.0, 0.0}, s5);
    if (std::abs(north[2] - 5.0) > 1e-14) return false;
    const auto equator = scs::scs_expectation({0.5 * kPi, 0.0}, s5);
    if (std::abs(equator[0] - 5.0) > 1e-12) return false;
    const scs::SpinMagnitude s1(2);
    std::mt19937_64 rng(13);
    const auto w = random_direction(rng);
    const auto amp = scs::scs_amplitudes(w, s1);
    const auto sz = scs::spin_z(s1);
    const auto sp = scs::spin_plus(s1);
    const auto sx = 0.5 * (sp + sp.adjoint());
    const auto sy = cplx(0.0, -0.5) * (sp - sp.adjoint());
    const auto expect = [&](const ComplexMatrix& op) {
      cplx e = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          e += std::conj(amp[i]) * op(i, j) * amp[j];
      return e.real();
    };
    const auto v = scs::scs_expectation(w, s1);
    return std::abs(expect(sx) - v[0]) < 1e-12 &&
           std::abs(expect(sy) - v[1]) < 1e-12 &&
           std::abs(expect(sz) - v[2]) < 1e-12;
  });

  r.check("quadrature: weight sum and identity residual", [] {
    const scs::SpinMagnitude s5(10);
    const auto grid = scs::build_quadrature(24, 24, s5);
    if (std::abs(grid.weight_sum() - 11.0) > 1e-12) return false;
    if (scs::identity_residual(grid) > 1e-8) return false;
    const auto coarse = scs::build_quadrature(2, 2, s5);
    return scs::identity_residual(coarse) > 0.1;
  });

  r.check("soliton parameters: lambda=10, beta=pi/4", [] {
    const double h = chain::SolitonParams::h_for_lambda(10.0, 0.25 * kPi);
    if (std::abs(h - 0.02) > 1e-15) return false;
    const auto p = chain::soliton_derived_params(0.25 * kPi, h);
    return std::abs(p.v - 0.2) < 1e-14 && std::abs(p.tau - 50.0) < 1e-10 &&
           std::abs(p.epsilon - 0.8) < 1e-14 &&
           std::abs(p.lambda - 10.0) < 1e-12;
  });

  r.check("soliton profile: peak 2 beta, background up", [] {
    const auto p = chain::soliton_derived_params(0.25 * kPi, 0.02);
    const auto cfg = chain::tw_soliton_config(p, 0.0, 256, 128.0);
    if (std::abs(cfg.directions[128].theta - 0.5 * kPi) > 1e-12) return false;
    return cfg.directions[0].theta < 1e-4 &&
           cfg.directions[255].theta < 1e-4;
  });

  r.check("soliton profile: tan(beta)=2 peak height 1.6", [] {
    const double beta = std::atan(2.0);
    const auto p = chain::soliton_derived_params(beta, 0.01);
    const auto cfg =
        chain::tw_soliton_config(p, 0.0, 512, 256.0);
    double peak = 0.0;
    for (const auto& d : cfg.directions)
      peak = std::max(peak, 1.0 - std::cos(d.theta));
    return std::abs(peak - 1.6) < 1e-9;
  });

  r.check("chain energy: aligned ground state and soliton excess", [] {
    const auto p = chain::soliton_derived_params(0.25 * kPi, 0.02);
    chain::ChainConfig up;
    up.directions.assign(256, scs::SphereDirection(0.0, 0.0));
    if (std::abs(chain::chain_energy(up, 0.02) + 261.12) > 1e-9) return false;
    const auto sol = chain::tw_soliton_config(p, 0.0, 256, 128.0);
    const double excess =
        chain::chain_energy(sol, 0.02) - chain::chain_energy(up, 0.02);
    return std::abs(excess - 0.8) < 0.03 * 0.8;
  });

  r.check("total_sz: aligned chain", [] {
    chain::ChainConfig up;
    up.directions.assign(256, scs::SphereDirection(0.0, 0.0));
    return std::abs(chain::total_sz(up) - 256.0) < 1e-12;
  });

  r.check("soliton_center: construction, translation, flat error", [] {
    const auto p = chain::soliton_derived_params(0.25 * kPi, 0.02);
    const auto a = chain::tw_soliton_config(p, 0.0, 256, 40.0);
    if (std::abs(chain::soliton_center(a) - 40.0) > 0.1) return false;
    const auto b = chain::tw_soliton_config(p, 0.0, 256, 57.0);
    if (std::abs(chain::soliton_center(b) - 57.0) > 0.1) return false;
    chain::ChainConfig flat;
    flat.directions.assign(64, scs::SphereDirection(0.0, 0.0));
    try {
      chain::soliton_center(flat);
      return false;
    } catch (const NoSoliton&) {
      return true;
    }
  });

  r.check("EoM: aligned fixed point and tilted-spin energy conservation", [] {
    chain::ChainConfig up;
    up.directions.assign(16, scs::SphereDirection(0.0, 0.0));
    chain::EomIntegrator still(up, 0.0, 0.01);
    still.advance_to(10.0);
    for (std::size_t i = 0; i < 16; ++i)
      if (std::abs(still.sz(i) - 1.0) > 1e-12) return false;

    chain::ChainConfig tilted = up;
    tilted.directions[7] = scs::SphereDirection(0.7, 0.3);
    chain::EomIntegrator integ(tilted, 0.0, 0.005);
    const double e0 = integ.energy(0.0);
    integ.advance_to(100.0);
    return std::abs(integ.energy(0.0) - e0) < 1e-8;
  });

  r.check("entropy: pure, maximally mixed, biased qubit", [] {
    const auto pure = DensityMatrix::pure({1.0, 0.0});
    if (std::abs(ent::von_neumann_entropy(pure, 2)) > 1e-12) return false;
    ComplexMatrix mixed(2, 2);
    mixed(0, 0) = mixed(1, 1) = 0.5;
    if (std::abs(ent::von_neumann_entropy(DensityMatrix::from_matrix(mixed),
                                          2) - 1.0) > 1e-12)
      return false;
    ComplexMatrix biased(2, 2);
    biased(0, 0) = 0.75;
    biased(1, 1) = 0.25;
    return std::abs(ent::von_neumann_entropy(DensityMatrix::from_matrix(biased),
                                             2) - 0.81127812445913283) < 1e-12;
  });

  r.check("concurrence: Bell, product, Werner p=1/2", [] {
    const double s = std::sqrt(0.5);
    const auto bell = DensityMatrix::pure({s, 0.0, 0.0, s});
    if (std::abs(ent::wootters_concurrence(bell).concurrence - 1.0) > 1e-10)
      return false;
    const auto prod = DensityMatrix::pure({1.0, 0.0, 0.0, 0.0});
    if (ent::wootters_concurrence(prod).concurrence > 1e-10) return false;
    ComplexMatrix w(4, 4);
    for (std::size_t i = 0; i < 4; ++i) w(i, i) = 0.125;
    w(0, 0) += 0.25;
    w(3, 3) += 0.25;
    w(0, 3) += 0.25;
    w(3, 0) += 0.25;
    const auto werner = DensityMatrix::from_matrix(w);
    return std::abs(ent::wootters_concurrence(werner).concurrence - 0.25) <
           1e-8;
  });

  r.check("qubit-spin Hamiltonian: S=1/2 spectrum and symmetries", [] {
    const scs::SpinMagnitude half(1);
    const auto h = protocol::qubit_spin_hamiltonian(1.0, 0.0, half);
    const auto es = num::hermitian_eigensystem(h);
    if (std::abs(es.values[0] + 1.5) > 1e-12) return false;
    for (int i = 1; i < 4; ++i)
      if (std::abs(es.values[i] - 0.5) > 1e-12) return false;

    const scs::SpinMagnitude s2(4);
    const auto h0 = protocol::qubit_spin_hamiltonian(0.0, 0.7, s2);
    const auto es0 = num::hermitian_eigensystem(h0);
    for (std::size_t i = 0; i < 5; ++i)
      if (std::abs(es0.values[i] + 0.7) > 1e-12) return false;

    // commutes with total z-component
    const auto hz = protocol::qubit_spin_hamiltonian(1.3, 0.25, s2);
    ComplexMatrix sz2(2, 2);
    sz2(0, 0) = 0.5;
    sz2(1, 1) = -0.5;
    const auto tot =
        num::tensor_product(sz2, ComplexMatrix::identity(5)) +
        num::tensor_product(ComplexMatrix::identity(2), scs::spin_z(s2));
    return num::max_abs_diff(hz * tot, tot * hz) < 1e-12;
  });

  r.check("stage 1: t0 state is the factorized input with zero entropy", [] {
    auto cfg = tiny_config();
    const protocol::Stage1Engine engine(cfg);
    const auto res = engine.at(engine.t0());
    if (std::abs(res.norm_squared() - 1.0) > 1e-12) return false;
    return res.qubit_entropy() < 1e-12;
  });

  r.check("stage 1: north-pole eigenstate stays unentangled", [] {
    auto cfg = tiny_config();
    const auto h = protocol::qubit_spin_hamiltonian(cfg.g, cfg.h_a, cfg.spin());
    const auto north = scs::scs_amplitudes({0.0, 0.0}, cfg.spin());
    std::vector<cplx> psi(2 * north.size());
    for (std::size_t m = 0; m < north.size(); ++m) psi[m] = north[m];
    const auto u = num::evolve_unitary(h, 3.7);
    const auto evolved = u * psi;
    double entangled = 0.0;
    for (std::size_t m = 0; m < north.size(); ++m)
      entangled += std::norm(evolved[north.size() + m]);
    return entangled < 1e-20;
  });

  r.check("f table: completeness reconstruction of the stage-1 state", [] {
    protocol::ProtocolConfig cfg;  // default S=5 run
    cfg.t1_window = 5.0;
    const protocol::Stage1Engine engine(cfg);
    const auto res = engine.at(engine.t0() + 3.0);
    auto grid = std::make_shared<const scs::QuadratureGrid>(
        scs::build_quadrature(cfg.n_theta, cfg.n_phi, cfg.spin()));
    const auto table = protocol::build_f_table(res, grid);
    if (std::abs(table.grid_norm - 1.0) > 1e-6) return false;
    const auto rec = protocol::f_table_reconstruction(table);
    return num::max_abs_diff(rec, res.c) < 1e-6;
  });

  r.check("bundle: overlap products are unit for j=k and conjugate-symmetric",
          [] {
            auto cfg = tiny_config();
            auto grid = std::make_shared<const scs::QuadratureGrid>(
                scs::build_quadrature(4, 4, cfg.spin()));
            const auto bundle = protocol::BundleTrajectories::integrate(
                cfg, grid, 0.0, {2.0}, 1);
            const auto d = protocol::pair_overlap_product(bundle, 2.0, 3, 3);
            if (std::abs(d - cplx(1.0, 0.0)) > 1e-12) return false;
            const auto ab = protocol::pair_overlap_product(bundle, 2.0, 1, 9);
            const auto ba = protocol::pair_overlap_product(bundle, 2.0, 9, 1);
            return std::abs(ab - std::conj(ba)) < 1e-12;
          });

  r.check("stage 3: initial state has an unentangled B qubit", [] {
    auto cfg = tiny_config();
    const auto data_t1 = protocol::select_t1(cfg, cfg.t1_window, cfg.t1_step);
    auto grid = std::make_shared<const scs::QuadratureGrid>(
        scs::build_quadrature(cfg.n_theta, cfg.n_phi, cfg.spin()));
    const auto res = protocol::stage1_evolve(cfg, data_t1);
    const auto table = protocol::build_f_table(res, grid);
    const double t2 = data_t1 + cfg.nominal_transfer_offset();
    const auto bundle = protocol::BundleTrajectories::integrate(
        cfg, grid, data_t1, {t2 - data_t1}, 1);
    const auto rho0 =
        protocol::stage3_initial_state(cfg, table, bundle, t2, 1);
    const auto pair = protocol::two_qubit_state(rho0, cfg.spin());
    if (ent::wootters_concurrence(pair).concurrence > 1e-10) return false;
    const auto later = protocol::stage3_evolve(rho0, cfg, t2, t2);
    return num::max_abs_diff(later.matrix(), rho0.matrix()) < 1e-12;
  });

  std::cout << (r.failures == 0 ? "selftest: all checks passed\n"
                                : "selftest: FAILURES present\n");
  return r.failures == 0 ? 0 : 3;
}

}  // namespace qsol::cli
