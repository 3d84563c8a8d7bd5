#pragma once

#include <Eigen/Dense>

#include "semiclass/lattice.hpp"

namespace semiclass {

/// Microscopic L^2 state sampled on x_grid; norm uses the dx measure.
struct WaveFunction {
    Eigen::VectorXcd samples;
    SimulationGrid grid;

    double norm() const;
    WaveFunction& normalize();
};

/// Bloch-Floquet image: fibers(q, i) = (U psi)(k_q, x_i) with x_i the
/// within-cell offsets.  The fibered norm uses the normalized dk measure
/// (total mass one on M*) and the dx measure on the cell.
struct FiberedState {
    Eigen::MatrixXcd fibers;  // n_cells x points_per_cell
    SimulationGrid grid;

    double norm() const;
    double fiber_norm_sq(int q) const;  // L^2(M)^2 of fiber q
};

FiberedState bloch_transform(const WaveFunction& psi);
WaveFunction inverse_bloch_transform(const FiberedState& f);

/// Spectrum of the fiber Hamiltonian H_per(k) = (D_x + k)^2/2 + V in the
/// plane-wave basis e^{i m gamma_star x}/sqrt(a), |m| <= cutoff.
/// Column n of `vectors` holds the coefficients of the n-th eigenfunction
/// (bands numbered from 1 externally).
struct FiberEigenSystem {
    double k = 0.0;
    int cutoff = 0;
    Eigen::VectorXd energies;   // ascending, full truncated spectrum
    Eigen::MatrixXcd vectors;   // dim x dim, orthonormal columns

    int dim() const { return 2 * cutoff + 1; }
    // plane-wave index m of row r: m = r - cutoff
    int row_to_m(int r) const { return r - cutoff; }
};

FiberEigenSystem solve_fiber(const PeriodicPotential& V, const Lattice& lat, double k,
                             int cutoff);

/// Band data on the k-grid: energies, gauge-fixed Bloch vectors, velocities,
/// gap margins and Zak phases for the first n_bands bands.  The full
/// truncated fiber spectrum is retained for projection diagnostics.
struct BandStructure {
    SimulationGrid grid;
    int cutoff = 0;
    int n_bands = 0;
    double gap_floor = 0.0;

    // per-k eigensystems: all energies, first n_bands vectors gauge-fixed
    std::vector<FiberEigenSystem> fibers;        // size n_cells
    Eigen::MatrixXd energies;                    // n_cells x n_bands
    Eigen::MatrixXd velocities;                  // n_cells x n_bands
    Eigen::MatrixXd gap_margins;                 // n_cells x n_bands
    std::vector<bool> isolated;                  // per band
    std::vector<double> zak_phase;               // per band, in (-pi, pi]
    bool gauge_fixed = false;

    int n_cells() const { return grid.n_cells; }
    double energy(int q, int band) const { return energies(q, band - 1); }
    // gauge-fixed Bloch vector of `band` at k-index q (plane-wave coefficients)
    Eigen::VectorXcd bloch_vector(int q, int band) const {
        return fibers[q].vectors.col(band - 1);
    }
    void require_isolated(int band, const char* where) const;
    // Wannier-center offset theta/gamma_star of an isolated band
    double wannier_offset(int band) const {
        return zak_phase[band - 1] / grid.lattice.gamma_star;
    }
    // coefficients of phi(k - gamma_star): plane-wave translation c_m -> c_{m-1}
    static Eigen::VectorXcd translate_down(const Eigen::VectorXcd& c);
    // coefficients of phi(k + gamma_star): c_m -> c_{m+1}
    static Eigen::VectorXcd translate_up(const Eigen::VectorXcd& c);
    // <phi_band(k_q), phi_band(k at grid index q - j, continued over the BZ
    // boundary with the quasi-periodic twist)>
    complexd continued_overlap(int q, int j_back, int band) const;
};

BandStructure compute_band_structure(const PeriodicPotential& V, const SimulationGrid& grid,
                                     int cutoff, int n_bands, double gap_floor);

/// Parallel-transport gauge with the residual Zak holonomy distributed over
/// the grid, leaving a family that is exactly periodic over the BZ torus.
void gauge_fix(BandStructure& bs);

std::vector<double> band_velocity(const BandStructure& bs, int band);

/// Bloch coefficients psi_n(k) = <phi_n(k), psi(k)> on the k-grid.
struct BlochCoefficients {
    int band = 0;
    Eigen::VectorXcd values;  // n_cells
    SimulationGrid grid;

    // population sum |psi_n(k)|^2 dk with normalized dk
    double population() const;
};

BlochCoefficients project_band(const FiberedState& f, const BandStructure& bs, int band);

/// Fiber data within one cell -> plane-wave coefficients f_m for
/// m in [-ppc/2, ppc/2), exact for grid-resolved trigonometric content.
Eigen::VectorXcd cell_to_planewaves(const Eigen::VectorXcd& cell_values,
                                    const SimulationGrid& grid);
Eigen::VectorXcd planewaves_to_cell(const Eigen::VectorXcd& coeffs,
                                    const SimulationGrid& grid);
// inner product <phi (plane-wave coeffs), fiber cell values> in L^2(M)
complexd fiber_inner(const Eigen::VectorXcd& coeffs, int cutoff,
                     const Eigen::VectorXcd& cell_values, const SimulationGrid& grid);

/// ||Q_n(k) grad_k P_n(k)|| via the spectral form of the resolvent formula,
/// sum_{m != n} |<phi_m, (D_x + k) phi_n>|^2 / (E_m - E_n)^2, square-rooted.
std::vector<double> grad_projection_norm(const BandStructure& bs, int band);

}  // namespace semiclass
