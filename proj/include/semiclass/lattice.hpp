#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace semiclass {

using complexd = std::complex<double>;

/// One-dimensional Bravais lattice with its reciprocal.
/// The Brillouin zone is M* = [-gamma_star/2, gamma_star/2).
struct Lattice {
    double a = 0.0;           // lattice constant
    double gamma_star = 0.0;  // 2*pi / a
    int dim = 1;

    double bz_min() const { return -0.5 * gamma_star; }
    double bz_max() const { return 0.5 * gamma_star; }
};

Lattice build_lattice(double a);

/// Commensurate real-space / k-space discretization. n_cells unit cells of
/// points_per_cell samples each; both powers of two so the discrete
/// Bloch transform is exactly unitary.
struct SimulationGrid {
    Lattice lattice;
    int n_cells = 0;
    int points_per_cell = 0;
    double dx = 0.0;
    double box_length = 0.0;
    std::vector<double> x_grid;  // n_cells * points_per_cell points in [-L/2, L/2)
    std::vector<double> k_grid;  // n_cells points in M*

    int size() const { return n_cells * points_per_cell; }
    double dk() const { return lattice.gamma_star / n_cells; }
    // cell origin of cell m, so x(m,i) = cell_origin(m) + i*dx
    double cell_origin(int m) const { return -0.5 * box_length + m * lattice.a; }

    bool same_as(const SimulationGrid& o) const {
        return n_cells == o.n_cells && points_per_cell == o.points_per_cell &&
               lattice.a == o.lattice.a;
    }
};

SimulationGrid build_grid(const Lattice& lattice, int n_cells, int points_per_cell);

/// Gamma-periodic potential given as a finite cosine series,
/// V(x) = sum_m 2 v_m cos(m gamma_star x).  Fourier data is exact:
/// Vhat(+-m gamma_star) = v_m.
struct PeriodicPotential {
    std::vector<std::pair<int, double>> cosine_coefficients;

    double value(double x, const Lattice& lat) const;
    // Fourier coefficient Vhat(m * gamma_star), m any integer.
    double fourier(int m) const;
    double max_abs(const Lattice& lat) const;
};

/// External potential: a sum of Gaussians, W(r) = sum_i w0 exp(-(r-r0)^2/(2 sigma^2)).
/// Lies in S(R); value, gradient and Fourier transform are closed-form.
struct GaussianTerm {
    double w0 = 0.0;
    double r0 = 0.0;
    double sigma = 1.0;
};

struct ExternalPotential {
    std::vector<GaussianTerm> terms;

    double value(double r) const;
    double grad(double r) const;
    // What(p) = (2 pi)^{-1/2} \int W(r) e^{-irp} dr  (complex for r0 != 0)
    complexd fourier(double p) const;
    double max_abs() const;
    double max_abs_grad() const;
    bool is_zero() const;
};

}  // namespace semiclass
