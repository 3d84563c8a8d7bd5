#pragma once

#include <memory>

#include "semiclass/bloch.hpp"
#include "semiclass/lattice.hpp"
#include "semiclass/spline.hpp"

namespace semiclass {

/// One classical trajectory of rdot = E'(k), kdot = -W'(r) from (r0, k0).
struct Trajectory {
    double k0 = 0.0;
    double t_final = 0.0;
    std::vector<double> t;  // sample times (start, steps, end)
    std::vector<double> r;  // unbounded
    std::vector<double> k;  // unwrapped; use reduce_k for the torus value
    double energy_drift = 0.0;  // max |h(r,k) - h(0,k0)| along the path

    double r_final() const { return r.back(); }
    double k_final() const { return k.back(); }
};

Trajectory integrate_flow(const PeriodicSpline& energy, const ExternalPotential& W,
                          double k0, double t_macro, double dt_c,
                          bool store_path = false, double r0 = 0.0);

/// Per-band flow sampled over the whole k-grid at a single macroscopic time.
struct FlowField {
    int band = 0;
    double t = 0.0;
    SimulationGrid grid;
    std::vector<double> r;          // r_n(t; k_q)
    std::vector<double> k;          // k_n(t; k_q), unwrapped
    double max_energy_drift = 0.0;

    double k_reduced(int q) const;  // principal branch in M*
};

FlowField build_flow_field(const BandStructure& bs, int band, const ExternalPotential& W,
                           double t_macro, double dt_c);

/// Periodic spline of E_n over the Brillouin torus.
std::unique_ptr<PeriodicSpline> band_energy_spline(const BandStructure& bs, int band);

/// Bloch vector of `band` at k-index q evaluated on the cell grid.
Eigen::VectorXcd bloch_cell_values(const BandStructure& bs, int q, int band);

/// (R(t) f)(k, x) = sum_n r_n(t; k) psi_n(k) phi_n(k, x) over the supplied bands.
FiberedState apply_R(const std::vector<FlowField>& flows, const FiberedState& f,
                     const BandStructure& bs);
/// Same with k_n(t; k) reduced to M*.
FiberedState apply_K(const std::vector<FlowField>& flows, const FiberedState& f,
                     const BandStructure& bs);

/// Weighted phase-space sample transported by the flow: weight
/// |psi_n(k_q)|^2 dk at (r_n(t;k_q), k_n(t;k_q)).
struct TransportedMeasure {
    struct Point {
        double r = 0.0;
        double k = 0.0;  // reduced to M*
        double weight = 0.0;
    };
    std::vector<Point> points;
    double total_mass() const;
};

TransportedMeasure build_transported_measure(const std::vector<FlowField>& flows,
                                             const std::vector<BlochCoefficients>& coeffs);

struct Histogram {
    std::vector<double> edges;   // size bins + 1
    std::vector<double> masses;  // size bins
    double mass() const;
};

struct Marginals {
    Histogram position;
    Histogram quasimomentum;
    bool range_extended = false;
};

Marginals transported_marginals(const TransportedMeasure& tm, int r_bins, double r_lo,
                                double r_hi, int k_bins, double k_lo, double k_hi);

}  // namespace semiclass
