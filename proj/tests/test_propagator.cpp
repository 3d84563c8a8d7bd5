#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "semiclass/propagator.hpp"

using namespace semiclass;
using namespace testutil;

namespace {

// free Schrodinger evolution of a boosted Gaussian, hbar = m = 1
WaveFunction free_gaussian_exact(const SimulationGrid& g, double s, double k0, double t) {
    WaveFunction psi;
    psi.grid = g;
    psi.samples.resize(g.size());
    const complexd denom(s * s, t);
    const complexd spread = std::sqrt(complexd(1.0, t / (s * s)));
    for (int j = 0; j < g.size(); ++j) {
        const double x = g.x_grid[j];
        const double u = x - k0 * t;
        psi.samples[j] = std::exp(-u * u / (2.0 * denom)) / spread *
                         std::polar(1.0, k0 * x - 0.5 * k0 * k0 * t);
    }
    psi.normalize();
    return psi;
}

}  // namespace

TEST_CASE("prepare_band_packet: carrier, band purity, centering") {
    const SimulationGrid g = small_grid(64, 16);
    const BandStructure bs = compute_band_structure(cosine_potential(0.15), g, 16, 4, 0.02);
    const WaveFunction psi = prepare_band_packet(bs, 1, 0.1, 0.05);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));

    const FiberedState f = bloch_transform(psi);
    CHECK(project_band(f, bs, 1).population() > 1.0 - 1e-10);

    // quasimomentum concentrated at k_center
    const complexd mean_char = quasimomentum_expectation(
        psi, [&](double k) { return std::polar(1.0, 2.0 * M_PI * k / g.lattice.gamma_star); });
    CHECK(std::arg(mean_char) ==
          doctest::Approx(2.0 * M_PI * 0.1 / g.lattice.gamma_star).epsilon(1e-3));

    // macroscopic position starts within a packet width of the origin
    const double eps = 0.1;
    CHECK(std::abs(position_expectation(psi, eps)) < eps * 20.0);

    // near-free crystal: packet rides the plane-wave carrier e^{i k_center x}
    const BandStructure tiny = compute_band_structure(cosine_potential(1e-6), g, 16, 1, 1e-8);
    const WaveFunction pw = prepare_band_packet(tiny, 1, 0.25, 0.03);
    const complexd carrier = quasimomentum_expectation(
        pw, [&](double k) { return std::polar(1.0, 2.0 * M_PI * k / g.lattice.gamma_star); });
    CHECK(std::arg(carrier) == doctest::Approx(2.0 * M_PI * 0.25).epsilon(1e-3));

    // Gaussian tail reaching the BZ edge is rejected
    CHECK_THROWS_AS(prepare_band_packet(bs, 1, 0.45, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(prepare_band_packet(bs, 1, 0.0, 0.2), std::invalid_argument);
}

TEST_CASE("propagate matches the analytic free Gaussian") {
    const SimulationGrid g = small_grid(64, 16);
    const double s = 5.0, k0 = 0.25, t = 2.0;
    const WaveFunction psi0 = free_gaussian_exact(g, s, k0, 0.0);

    PropagatorConfig cfg;
    cfg.epsilon = 1.0;
    cfg.t_macro = t;
    const EvolvedState ev = propagate(psi0, {}, {}, cfg);
    const WaveFunction exact = free_gaussian_exact(g, s, k0, t);
    CHECK(state_max_diff(ev.psi, exact) < 1e-8);
    CHECK(ev.norm_drift < 1e-12);
}

TEST_CASE("propagate: W = 0 leaves band populations invariant") {
    const SimulationGrid g = small_grid(64, 16);
    const BandStructure bs = compute_band_structure(cosine_potential(0.15), g, 16, 4, 0.02);
    const WaveFunction psi0 = prepare_band_packet(bs, 1, 0.1, 0.05);
    const double pop0 = project_band(bloch_transform(psi0), bs, 1).population();

    PropagatorConfig cfg;
    cfg.epsilon = 0.5;
    cfg.t_macro = 0.5;
    const EvolvedState ev = propagate(psi0, cosine_potential(0.15), {}, cfg);
    const double pop1 = project_band(bloch_transform(ev.psi), bs, 1).population();
    CHECK(std::abs(pop1 - pop0) < 1e-8);
}

TEST_CASE("propagate: unitarity over ten thousand steps") {
    const SimulationGrid g = small_grid(16, 16);
    const WaveFunction psi0 = gaussian_state(g, 0.0, 4.0, 0.2);
    PropagatorConfig cfg;
    cfg.epsilon = 1.0;
    cfg.t_macro = 10.0;
    cfg.dt = 1e-3;
    const EvolvedState ev =
        propagate(psi0, cosine_potential(0.15), gaussian_potential(), cfg);
    CHECK(ev.steps == 10000);
    CHECK(ev.norm_drift < 1e-11);
    CHECK(ev.energy_drift_rel < 1e-6);
}

TEST_CASE("propagate: time reversal returns the initial state") {
    const SimulationGrid g = small_grid(64, 16);
    const BandStructure bs = compute_band_structure(cosine_potential(0.15), g, 16, 4, 0.02);
    const WaveFunction psi0 = prepare_band_packet(bs, 1, 0.1, 0.05);
    PropagatorConfig cfg;
    cfg.epsilon = 0.2;
    cfg.t_macro = 0.3;
    const EvolvedState fwd =
        propagate(psi0, cosine_potential(0.15), gaussian_potential(), cfg);
    const EvolvedState back =
        propagate_backward(fwd.psi, cosine_potential(0.15), gaussian_potential(), cfg);
    CHECK(state_l2_diff(back.psi, psi0) < 1e-8);
}

TEST_CASE("propagate: Strang refinement is second order") {
    const SimulationGrid g = small_grid(32, 16);
    const WaveFunction psi0 = gaussian_state(g, 0.0, 6.0, 0.2);
    const PeriodicPotential V = cosine_potential(0.15);
    const ExternalPotential W = gaussian_potential();

    auto run = [&](double dt) {
        PropagatorConfig cfg;
        cfg.epsilon = 1.0;
        cfg.t_macro = 1.0;
        cfg.dt = dt;
        return propagate(psi0, V, W, cfg).psi;
    };
    const double dt0 = stability_dt(g, V, W, 0.1);
    const WaveFunction a = run(dt0), b = run(dt0 / 2.0), c = run(dt0 / 4.0);
    const double factor = state_l2_diff(a, b) / state_l2_diff(b, c);
    CHECK(factor > 3.0);
    CHECK(factor < 5.0);
}

TEST_CASE("propagate guards: stability ceiling and boundary contamination") {
    const SimulationGrid g = small_grid(16, 16);
    PropagatorConfig cfg;
    cfg.epsilon = 1.0;
    cfg.t_macro = 1.0;
    cfg.dt = 1.0;  // dt * E_max far beyond the phase ceiling
    const WaveFunction psi0 = gaussian_state(g, 0.0, 3.0, 0.0);
    CHECK_THROWS(propagate(psi0, {}, {}, cfg));

    // mass parked in the guard band trips the contamination check
    const WaveFunction edge = gaussian_state(g, 0.49 * g.box_length, 2.0, 0.0);
    PropagatorConfig cfg2;
    cfg2.epsilon = 1.0;
    cfg2.t_macro = 0.05;
    CHECK_THROWS(propagate(edge, {}, {}, cfg2));
}

TEST_CASE("position observables") {
    const SimulationGrid g = small_grid(64, 16);
    const double eps = 0.1;

    // parity: symmetric packet has vanishing expectation
    const WaveFunction sym = gaussian_state(g, 0.0, 4.0, 0.0);
    CHECK(std::abs(position_expectation(sym, eps)) < 1e-8);

    // translation shifts by eps * x0
    const double x0 = 16.0 * g.dx;
    const WaveFunction moved = gaussian_state(g, x0, 4.0, 0.0);
    CHECK(position_expectation(moved, eps) ==
          doctest::Approx(eps * x0).epsilon(1e-8));

    // norm identity for the multiplication operator
    const WaveFunction psi = gaussian_state(g, 3.0, 5.0, 0.2);
    const WaveFunction xpsi = position_apply(psi, eps, 0.1, 0.0);
    double x2 = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        x2 += g.x_grid[j] * g.x_grid[j] * std::norm(psi.samples[j]) * g.dx;
    }
    CHECK(xpsi.norm() == doctest::Approx(eps * std::sqrt(x2)).epsilon(1e-10));

    // linearity with a common unwrap center
    const WaveFunction u = gaussian_state(g, -2.0, 4.0, 0.1);
    const WaveFunction v = gaussian_state(g, 5.0, 3.0, -0.2);
    WaveFunction w;
    w.grid = g;
    w.samples = 0.7 * u.samples + complexd(0.0, 0.3) * v.samples;
    const WaveFunction lhs = position_apply(w, eps, 0.1, 0.0);
    const WaveFunction au = position_apply(u, eps, 0.1, 0.0);
    const WaveFunction av = position_apply(v, eps, 0.1, 0.0);
    Eigen::VectorXcd rhs = 0.7 * au.samples + complexd(0.0, 0.3) * av.samples;
    CHECK((lhs.samples - rhs).cwiseAbs().maxCoeff() < 1e-12);

    // delta-narrow packet: multiplication is approximately eps*x0
    const WaveFunction narrow = gaussian_state(g, 8.0, 0.5, 0.0);
    CHECK(position_expectation(narrow, eps) == doctest::Approx(eps * 8.0).epsilon(1e-6));
}

TEST_CASE("position observables reject contaminated boundaries") {
    const SimulationGrid g = small_grid(16, 16);
    const WaveFunction edge = gaussian_state(g, 0.49 * g.box_length, 2.0, 0.0);
    CHECK_THROWS(position_expectation(edge, 0.1));
}

TEST_CASE("free motion: macroscopic displacement equals v t") {
    const SimulationGrid g = small_grid(128, 16);
    const BandStructure tiny = compute_band_structure(cosine_potential(1e-6), g, 16, 1, 1e-8);
    const WaveFunction psi0 = prepare_band_packet(tiny, 1, 0.25, 0.03);
    PropagatorConfig cfg;
    cfg.epsilon = 0.05;
    cfg.t_macro = 1.0;
    const EvolvedState ev = propagate(psi0, cosine_potential(1e-6), {}, cfg);
    const double displacement =
        position_expectation(ev.psi, cfg.epsilon) - position_expectation(psi0, cfg.epsilon);
    CHECK(displacement == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("quasimomentum expectation and Fourier route agree") {
    const SimulationGrid g = small_grid(32, 16);

    // g identically one gives the squared norm
    const WaveFunction psi = random_state(g, 5);
    const complexd one = quasimomentum_expectation(psi, [](double) { return complexd(1.0); });
    CHECK(one.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(one.imag()) < 1e-12);

    // plane wave: g(k) = e^{iak} evaluates to e^{iak0}
    const double k0 = g.k_grid[20];
    WaveFunction pw;
    pw.grid = g;
    pw.samples.resize(g.size());
    for (int j = 0; j < g.size(); ++j) pw.samples[j] = std::polar(1.0, k0 * g.x_grid[j]);
    pw.normalize();
    const double a = g.lattice.a;
    const complexd val =
        quasimomentum_expectation(pw, [&](double k) { return std::polar(1.0, a * k); });
    CHECK(std::abs(val - std::polar(1.0, a * k0)) < 1e-10);

    // fiber-side and Fourier-multiplier routes coincide on random states
    auto gfun = [&](double k) {
        return complexd(std::cos(2.0 * M_PI * k / g.lattice.gamma_star) + 0.5,
                        0.3 * std::sin(2.0 * M_PI * k / g.lattice.gamma_star));
    };
    const WaveFunction gpsi = apply_momentum_function(psi, gfun);
    const complexd direct = (psi.samples.dot(gpsi.samples)) * g.dx;
    const complexd fibered = quasimomentum_expectation(psi, gfun);
    CHECK(std::abs(direct - fibered) < 1e-10);
}

TEST_CASE("energy expectation: free plane wave") {
    const SimulationGrid g = small_grid(32, 16);
    const double k0 = g.k_grid[24];
    WaveFunction pw;
    pw.grid = g;
    pw.samples.resize(g.size());
    for (int j = 0; j < g.size(); ++j) pw.samples[j] = std::polar(1.0, k0 * g.x_grid[j]);
    pw.normalize();
    CHECK(energy_expectation(pw, {}, {}, 1.0) ==
          doctest::Approx(0.5 * k0 * k0).epsilon(1e-12));
}
