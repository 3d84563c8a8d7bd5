#include "semiclass/propagator.hpp"

#include <cmath>
#include <numbers>

#include "semiclass/fft.hpp"

namespace semiclass {

namespace {
constexpr double kPi = std::numbers::pi;

double wrap_to_box(double x, double box) {
    // reduce to [-box/2, box/2)
    x = std::fmod(x + 0.5 * box, box);
    if (x < 0) x += box;
    return x - 0.5 * box;
}
}  // namespace

void PropagatorConfig::validate() const {
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw std::invalid_argument("PropagatorConfig: epsilon must be in (0, 1]");
    }
    if (t_macro < 0.0) throw std::invalid_argument("PropagatorConfig: t_macro must be >= 0");
    if (boundary_margin <= 0.0 || boundary_margin >= 0.5) {
        throw std::invalid_argument("PropagatorConfig: boundary_margin must be in (0, 0.5)");
    }
}

double stability_dt(const SimulationGrid& grid, const PeriodicPotential& V,
                    const ExternalPotential& W, double dt_factor) {
    const double e_max = 0.5 * (kPi / grid.dx) * (kPi / grid.dx) +
                         V.max_abs(grid.lattice) + W.max_abs();
    return dt_factor / e_max;
}

WaveFunction prepare_band_packet(const BandStructure& bs, int band, double k_center,
                                 double sigma_k) {
    bs.require_isolated(band, "prepare_band_packet");
    const auto& g = bs.grid;
    if (sigma_k <= 0.0) throw std::invalid_argument("prepare_band_packet: sigma_k <= 0");
    // Gaussian mass outside M* must stay below 1e-12: the amplitude-width
    // sigma_k packet has density std sigma_k/sqrt(2), and Q(8.4) < 1e-12.
    const double edge = std::min(k_center - g.lattice.bz_min(),
                                 g.lattice.bz_max() - k_center);
    if (edge < 8.4 * sigma_k / std::sqrt(2.0)) {
        throw std::invalid_argument(
            "prepare_band_packet: sigma_k too large, Gaussian mass escapes the BZ");
    }

    FiberedState f;
    f.grid = g;
    f.fibers.resize(g.n_cells, g.points_per_cell);
    const double ga = g.lattice.gamma_star;
    const double sa = std::sqrt(g.lattice.a);
    for (int q = 0; q < g.n_cells; ++q) {
        const double dkc = g.k_grid[q] - k_center;
        const double amp = std::exp(-dkc * dkc / (2.0 * sigma_k * sigma_k));
        const Eigen::VectorXcd c = bs.bloch_vector(q, band);
        for (int i = 0; i < g.points_per_cell; ++i) {
            complexd phi(0.0, 0.0);
            for (int r = 0; r < c.size(); ++r) {
                const int m = r - bs.cutoff;
                phi += c[r] * std::polar(1.0, m * ga * (i * g.dx));
            }
            f.fibers(q, i) = amp * phi / sa;
        }
    }
    WaveFunction psi = inverse_bloch_transform(f);
    psi.normalize();
    return psi;
}

double boundary_mass(const WaveFunction& psi, double margin) {
    const auto& g = psi.grid;
    const double lo = -0.5 * g.box_length + margin * g.box_length;
    const double hi = 0.5 * g.box_length - margin * g.box_length;
    double m = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        if (g.x_grid[j] < lo || g.x_grid[j] >= hi) m += std::norm(psi.samples[j]);
    }
    return m * g.dx;
}

double periodic_center(const WaveFunction& psi) {
    const auto& g = psi.grid;
    complexd z(0.0, 0.0);
    for (int j = 0; j < g.size(); ++j) {
        z += std::norm(psi.samples[j]) *
             std::polar(1.0, 2.0 * kPi * g.x_grid[j] / g.box_length);
    }
    return std::arg(z) * g.box_length / (2.0 * kPi);
}

EvolvedState propagate(const WaveFunction& psi0, const PeriodicPotential& V,
                       const ExternalPotential& W, const PropagatorConfig& cfg) {
    cfg.validate();
    const auto& g = psi0.grid;
    const int n = g.size();
    const double dt = cfg.dt > 0.0 ? cfg.dt : stability_dt(g, V, W, cfg.dt_factor);
    const double e_max = 0.5 * (kPi / g.dx) * (kPi / g.dx) + V.max_abs(g.lattice) + W.max_abs();
    if (dt * e_max >= 0.5 * kPi) {
        throw std::invalid_argument("propagate: dt violates the Strang phase ceiling");
    }
    const double t_micro = cfg.t_macro / cfg.epsilon;
    const long steps = t_micro > 0.0 ? static_cast<long>(std::ceil(t_micro / dt - 1e-12)) : 0;
    const double dt_eff = steps > 0 ? t_micro / steps : dt;

    // phase factors
    Eigen::VectorXcd half_pot(n), kin(n);
    for (int j = 0; j < n; ++j) {
        const double v = V.value(g.x_grid[j], g.lattice) + W.value(cfg.epsilon * g.x_grid[j]);
        half_pot[j] = std::polar(1.0, -0.5 * dt_eff * v);
    }
    Fft1d fft(n);
    for (int j = 0; j < n; ++j) {
        const double xi = 2.0 * kPi * fft.freq_index(j) / g.box_length;
        kin[j] = std::polar(1.0, -0.5 * dt_eff * xi * xi);
    }

    EvolvedState out;
    out.dt = dt_eff;
    out.steps = steps;
    out.psi = psi0;
    const double norm0 = psi0.norm();
    const double energy0 = energy_expectation(psi0, V, W, cfg.epsilon);
    out.diagnostics.push_back({0, norm0, energy0, boundary_mass(psi0, cfg.boundary_margin)});

    Eigen::VectorXcd boxphase(n);
    for (int j = 0; j < n; ++j) {
        boxphase[j] = std::polar(1.0, 2.0 * kPi * g.x_grid[j] / g.box_length);
    }
    auto com = [&](const Eigen::VectorXcd& v) {
        complexd z(0.0, 0.0);
        for (int j = 0; j < n; ++j) z += std::norm(v[j]) * boxphase[j];
        return std::arg(z) * g.box_length / (2.0 * kPi);
    };
    double center = com(psi0.samples);
    double unwrapped = center;

    Eigen::VectorXcd& s = out.psi.samples;
    for (long step = 0; step < steps; ++step) {
        s.array() *= half_pot.array();
        fft.load(s);
        fft.forward();
        for (int j = 0; j < n; ++j) fft.data()[j] *= kin[j];
        fft.backward();
        fft.store(s);
        s.array() *= half_pot.array();

        // winding-tracked center of mass
        const double c_new = com(s);
        double dc = wrap_to_box(c_new - center, g.box_length);
        unwrapped += dc;
        center = c_new;

        if ((cfg.record_every > 0 && (step + 1) % cfg.record_every == 0) ||
            step + 1 == steps) {
            const double bm = boundary_mass(out.psi, cfg.boundary_margin);
            out.diagnostics.push_back({step + 1, out.psi.norm(),
                                       energy_expectation(out.psi, V, W, cfg.epsilon), bm});
            if (!std::isfinite(out.diagnostics.back().norm)) {
                throw std::runtime_error("propagate: instability, NaN detected");
            }
            if (bm > cfg.boundary_mass_limit) {
                throw std::runtime_error(
                    "propagate: wrap contamination, boundary mass " + std::to_string(bm) +
                    " exceeds margin threshold; increase n_cells");
            }
        }
    }
    out.norm_drift = std::abs(out.psi.norm() - norm0);
    const double e1 = energy_expectation(out.psi, V, W, cfg.epsilon);
    out.energy_drift_rel = std::abs(e1 - energy0) / std::max(1e-12, std::abs(energy0));
    out.boundary_mass = boundary_mass(out.psi, cfg.boundary_margin);
    out.unwrapped_center = unwrapped;
    return out;
}

EvolvedState propagate_backward(const WaveFunction& psi, const PeriodicPotential& V,
                                const ExternalPotential& W, const PropagatorConfig& cfg) {
    WaveFunction conj_psi = psi;
    conj_psi.samples = conj_psi.samples.conjugate();
    EvolvedState out = propagate(conj_psi, V, W, cfg);
    out.psi.samples = out.psi.samples.conjugate();
    return out;
}

double position_expectation(const WaveFunction& psi, double epsilon, double margin,
                            std::optional<double> center) {
    const double bm = boundary_mass(psi, margin);
    if (bm > 1e-6) {
        throw std::runtime_error("position_expectation: boundary contamination");
    }
    const auto& g = psi.grid;
    const double c = center.value_or(periodic_center(psi));
    double s = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        const double x = c + wrap_to_box(g.x_grid[j] - c, g.box_length);
        s += x * std::norm(psi.samples[j]);
    }
    return epsilon * s * g.dx / (psi.norm() * psi.norm());
}

WaveFunction position_apply(const WaveFunction& psi, double epsilon, double margin,
                            std::optional<double> center) {
    const double bm = boundary_mass(psi, margin);
    if (bm > 1e-6) {
        throw std::runtime_error("position_apply: boundary contamination");
    }
    const auto& g = psi.grid;
    const double c = center.value_or(periodic_center(psi));
    WaveFunction out = psi;
    for (int j = 0; j < g.size(); ++j) {
        const double x = c + wrap_to_box(g.x_grid[j] - c, g.box_length);
        out.samples[j] *= epsilon * x;
    }
    return out;
}

complexd quasimomentum_expectation(const WaveFunction& psi,
                                   const std::function<complexd(double)>& g) {
    FiberedState f = bloch_transform(psi);
    complexd s(0.0, 0.0);
    for (int q = 0; q < f.grid.n_cells; ++q) {
        s += g(f.grid.k_grid[q]) * f.fiber_norm_sq(q);
    }
    return s / double(f.grid.n_cells);
}

WaveFunction apply_momentum_function(const WaveFunction& psi,
                                     const std::function<complexd(double)>& g) {
    const auto& grid = psi.grid;
    const int n = grid.size();
    Fft1d fft(n);
    fft.load(psi.samples);
    fft.forward();
    for (int j = 0; j < n; ++j) {
        const double xi = 2.0 * kPi * fft.freq_index(j) / grid.box_length;
        fft.data()[j] *= g(xi);
    }
    fft.backward();
    WaveFunction out = psi;
    fft.store(out.samples);
    return out;
}

double energy_expectation(const WaveFunction& psi, const PeriodicPotential& V,
                          const ExternalPotential& W, double epsilon) {
    const auto& g = psi.grid;
    const int n = g.size();
    Fft1d fft(n);
    fft.load(psi.samples);
    fft.forward();
    double kin = 0.0;
    for (int j = 0; j < n; ++j) {
        const double xi = 2.0 * kPi * fft.freq_index(j) / g.box_length;
        kin += 0.5 * xi * xi * std::norm(fft.data()[j]);
    }
    kin *= g.dx / n;  // Parseval for the unnormalized FFT
    double pot = 0.0;
    for (int j = 0; j < n; ++j) {
        pot += (V.value(g.x_grid[j], g.lattice) + W.value(epsilon * g.x_grid[j])) *
               std::norm(psi.samples[j]);
    }
    pot *= g.dx;
    const double nn = psi.norm();
    return (kin + pot) / (nn * nn);
}

}  // namespace semiclass
