#pragma once

#include <functional>
#include <optional>

#include "semiclass/bloch.hpp"
#include "semiclass/lattice.hpp"

namespace semiclass {

struct PropagatorConfig {
    double epsilon = 1.0;      // scale parameter in (0, 1]
    double dt = 0.0;           // micro time step; 0 selects dt = dt_factor / E_max
    double dt_factor = 0.1;
    double t_macro = 0.0;      // macroscopic duration; micro duration is t_macro/epsilon
    double boundary_margin = 0.1;       // outer fraction of the box kept empty
    double boundary_mass_limit = 1e-6;  // contamination threshold
    int record_every = 0;               // 0: record only endpoints

    void validate() const;
};

struct DiagnosticsRow {
    long step = 0;
    double norm = 0.0;
    double energy = 0.0;
    double boundary_mass = 0.0;
};

struct EvolvedState {
    WaveFunction psi;
    double norm_drift = 0.0;            // |norm(T) - norm(0)|
    double energy_drift_rel = 0.0;      // relative <H> drift
    double boundary_mass = 0.0;
    double unwrapped_center = 0.0;      // center of mass, winding-tracked
    long steps = 0;
    double dt = 0.0;
    std::vector<DiagnosticsRow> diagnostics;
};

/// Band-concentrated wave packet psi = U^{-1}[ f(k) phi_n(k, x) ] with f a
/// normalized Gaussian (amplitude width sigma_k) centered at k_center.
WaveFunction prepare_band_packet(const BandStructure& bs, int band, double k_center,
                                 double sigma_k);

/// Strang split-step spectral evolution of i dpsi/dt = (-laplace/2 + V + W(eps x)) psi
/// over ceil((t_macro/epsilon)/dt) steps.
EvolvedState propagate(const WaveFunction& psi, const PeriodicPotential& V,
                       const ExternalPotential& W, const PropagatorConfig& cfg);

/// U(-t) chi via conjugation: both potentials are real, so
/// U(-t) chi = conj(U(t) conj(chi)).
EvolvedState propagate_backward(const WaveFunction& psi, const PeriodicPotential& V,
                                const ExternalPotential& W, const PropagatorConfig& cfg);

double stability_dt(const SimulationGrid& grid, const PeriodicPotential& V,
                    const ExternalPotential& W, double dt_factor);

/// Mass in the outer `margin` fraction of the box.
double boundary_mass(const WaveFunction& psi, double margin);

/// Periodic center of mass from the first box harmonic, in [-L/2, L/2).
double periodic_center(const WaveFunction& psi);

/// eps * <x> with x unwrapped around `center` (defaults to the state's own
/// periodic center of mass).
double position_expectation(const WaveFunction& psi, double epsilon,
                            double margin = 0.1,
                            std::optional<double> center = std::nullopt);

/// Pointwise multiplication by eps * x, x unwrapped around `center`.
WaveFunction position_apply(const WaveFunction& psi, double epsilon,
                            double margin = 0.1,
                            std::optional<double> center = std::nullopt);

/// <psi, g(p) psi> for Gamma*-periodic g, evaluated fiber-side:
/// sum_k g(k) ||psi(k, .)||^2 dk with normalized dk.
complexd quasimomentum_expectation(const WaveFunction& psi,
                                   const std::function<complexd(double)>& g);

/// g(p) psi by Fourier multiplication (g must be Gamma*-periodic).
WaveFunction apply_momentum_function(const WaveFunction& psi,
                                     const std::function<complexd(double)>& g);

/// <H> = <p^2/2> + <V + W(eps x)>.
double energy_expectation(const WaveFunction& psi, const PeriodicPotential& V,
                          const ExternalPotential& W, double epsilon);

}  // namespace semiclass
