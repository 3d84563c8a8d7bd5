#pragma once

#include "semiclass/bloch.hpp"
#include "semiclass/lattice.hpp"

namespace semiclass {

/// Band-subspace state: Bloch coefficients g(k) on the k-grid, periodic in k
/// (stored gauge).  Norm uses the normalized dk measure.
struct EffectiveState {
    int band = 0;
    Eigen::VectorXcd values;  // n_cells
    SimulationGrid grid;

    double norm() const { return std::sqrt(values.squaredNorm() / grid.n_cells); }

    static EffectiveState from_coefficients(const BlochCoefficients& c) {
        return {c.band, c.values, c.grid};
    }
};

/// Dense discretization of the band-diagonal external potential
/// (W g)(k) = (2 pi)^{-1/2} int What_eps(p) <phi_n(k), phi_n(k-p)> g(k-p) dp
/// with p on multiples of the k spacing and quasi-periodic continuation
/// across the BZ boundary.
struct EffectivePotentialOperator {
    int band = 0;
    double epsilon = 0.0;
    SimulationGrid grid;
    Eigen::MatrixXcd matrix;          // n_cells x n_cells, Hermitian
    Eigen::VectorXd eigenvalues;      // for the exact exponential step
    Eigen::MatrixXcd eigenvectors;

    void decompose();  // fills eigenvalues/eigenvectors from matrix
};

EffectivePotentialOperator build_effective_potential(const BandStructure& bs, int band,
                                                     const ExternalPotential& W,
                                                     double epsilon);

/// The semiclassical counterpart W(eps X) as a dense matrix, X the
/// band-diagonal position operator (spectrum theta/gamma_star - a m in the
/// stored gauge).  Equals the overlap matrix with all overlaps replaced by
/// the pure gauge phase.
Eigen::MatrixXcd build_sc_potential_matrix(const BandStructure& bs, int band,
                                           const ExternalPotential& W, double epsilon);

/// Operator-norm distance || W_full - W_sc || (both Hermitian).
double effective_operator_distance(const BandStructure& bs, int band,
                                   const ExternalPotential& W, double epsilon);

/// Strang split-step for H_sc = E_n(k) + W(eps X): multiply by the band
/// energy phase, switch to lattice Fourier modes, multiply by the external
/// potential phase, switch back.
EffectiveState propagate_effective_sc(const EffectiveState& g, const BandStructure& bs,
                                      const ExternalPotential& W, double epsilon,
                                      double t_macro, double dt);

/// Strang split-step for H = E_n(k) + W_full, the potential factor applied
/// exactly through the operator's eigendecomposition.
EffectiveState propagate_effective_full(const EffectiveState& g,
                                        const EffectivePotentialOperator& op,
                                        const BandStructure& bs, double t_macro, double dt);

/// Band-diagonal macroscopic position eps*X applied spectrally.
EffectiveState apply_effective_position(const EffectiveState& g, const BandStructure& bs,
                                        double epsilon);

/// Probe-based estimate of ||Q_n W^eps P_n|| over a finite band bank.
double offdiagonal_coupling_norm(const BandStructure& bs, int band,
                                 const ExternalPotential& W, double epsilon);

}  // namespace semiclass
