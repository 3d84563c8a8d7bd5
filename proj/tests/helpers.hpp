#pragma once

#include <random>

#include <Eigen/Dense>

#include "semiclass/bloch.hpp"
#include "semiclass/lattice.hpp"

namespace testutil {

using namespace semiclass;

inline SimulationGrid small_grid(int n_cells = 64, int points_per_cell = 16,
                                 double a = 2.0 * M_PI) {
    return build_grid(build_lattice(a), n_cells, points_per_cell);
}

inline PeriodicPotential cosine_potential(double v, int m = 1) {
    PeriodicPotential V;
    V.cosine_coefficients = {{m, v}};
    return V;
}

inline ExternalPotential gaussian_potential(double w0 = 0.1, double r0 = 0.4,
                                            double sigma = 0.5) {
    ExternalPotential W;
    W.terms = {{w0, r0, sigma}};
    return W;
}

inline WaveFunction random_state(const SimulationGrid& grid, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    WaveFunction psi;
    psi.grid = grid;
    psi.samples.resize(grid.size());
    for (int j = 0; j < grid.size(); ++j) psi.samples[j] = complexd(gauss(rng), gauss(rng));
    return psi.normalize();
}

inline WaveFunction gaussian_state(const SimulationGrid& grid, double x0, double s,
                                   double k0) {
    WaveFunction psi;
    psi.grid = grid;
    psi.samples.resize(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const double x = grid.x_grid[j];
        psi.samples[j] = std::exp(-(x - x0) * (x - x0) / (2.0 * s * s)) *
                         std::polar(1.0, k0 * x);
    }
    return psi.normalize();
}

// independent dense diagonalization of (D+k)^2/2 + V in the plane-wave basis
inline Eigen::VectorXd dense_fiber_energies(const PeriodicPotential& V, const Lattice& lat,
                                            double k, int cutoff) {
    const int dim = 2 * cutoff + 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const double g = (r - cutoff) * lat.gamma_star;
        H(r, r) = 0.5 * (k + g) * (k + g) + V.fourier(0);
        for (int rp = 0; rp < dim; ++rp) {
            if (rp != r) H(r, rp) = V.fourier(r - rp);
        }
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues();
}

inline double state_max_diff(const WaveFunction& u, const WaveFunction& v) {
    return (u.samples - v.samples).cwiseAbs().maxCoeff();
}

inline double state_l2_diff(const WaveFunction& u, const WaveFunction& v) {
    return std::sqrt((u.samples - v.samples).squaredNorm() * u.grid.dx);
}

}  // namespace testutil
