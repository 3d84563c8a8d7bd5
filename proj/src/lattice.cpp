#include "semiclass/lattice.hpp"

#include <cmath>

namespace semiclass {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

Lattice build_lattice(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("build_lattice: lattice constant must be positive");
    }
    Lattice lat;
    lat.a = a;
    lat.gamma_star = kTwoPi / a;
    return lat;
}

SimulationGrid build_grid(const Lattice& lattice, int n_cells, int points_per_cell) {
    if (!is_power_of_two(n_cells) || n_cells < 4) {
        throw std::invalid_argument("build_grid: n_cells must be a power of two >= 4");
    }
    if (!is_power_of_two(points_per_cell) || points_per_cell < 4) {
        throw std::invalid_argument("build_grid: points_per_cell must be a power of two >= 4");
    }
    SimulationGrid g;
    g.lattice = lattice;
    g.n_cells = n_cells;
    g.points_per_cell = points_per_cell;
    g.dx = lattice.a / points_per_cell;
    g.box_length = n_cells * lattice.a;

    const int n = n_cells * points_per_cell;
    g.x_grid.resize(n);
    for (int j = 0; j < n; ++j) {
        g.x_grid[j] = -0.5 * g.box_length + j * g.dx;
    }
    g.k_grid.resize(n_cells);
    const double dk = lattice.gamma_star / n_cells;
    for (int q = 0; q < n_cells; ++q) {
        g.k_grid[q] = -0.5 * lattice.gamma_star + q * dk;
    }
    return g;
}

double PeriodicPotential::value(double x, const Lattice& lat) const {
    double v = 0.0;
    for (const auto& [m, vm] : cosine_coefficients) {
        v += 2.0 * vm * std::cos(m * lat.gamma_star * x);
    }
    return v;
}

double PeriodicPotential::fourier(int m) const {
    if (m == 0) return 0.0;
    const int am = std::abs(m);
    double v = 0.0;
    for (const auto& [mm, vm] : cosine_coefficients) {
        if (std::abs(mm) == am) v += vm;
    }
    return v;
}

double PeriodicPotential::max_abs(const Lattice& lat) const {
    // crude but sufficient bound for step-size heuristics
    (void)lat;
    double s = 0.0;
    for (const auto& [m, vm] : cosine_coefficients) s += 2.0 * std::abs(vm);
    return s;
}

double ExternalPotential::value(double r) const {
    double w = 0.0;
    for (const auto& t : terms) {
        const double u = (r - t.r0) / t.sigma;
        w += t.w0 * std::exp(-0.5 * u * u);
    }
    return w;
}

double ExternalPotential::grad(double r) const {
    double w = 0.0;
    for (const auto& t : terms) {
        const double u = (r - t.r0) / t.sigma;
        w += -t.w0 * (r - t.r0) / (t.sigma * t.sigma) * std::exp(-0.5 * u * u);
    }
    return w;
}

complexd ExternalPotential::fourier(double p) const {
    complexd w(0.0, 0.0);
    for (const auto& t : terms) {
        w += t.w0 * t.sigma * std::exp(-0.5 * t.sigma * t.sigma * p * p) *
             std::exp(complexd(0.0, -t.r0 * p));
    }
    return w;
}

double ExternalPotential::max_abs() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.w0);
    return s;
}

double ExternalPotential::max_abs_grad() const {
    // |W'| of a single Gaussian peaks at one sigma from the center.
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.w0) / t.sigma * std::exp(-0.5);
    return s;
}

bool ExternalPotential::is_zero() const {
    for (const auto& t : terms) {
        if (t.w0 != 0.0) return false;
    }
    return true;
}

}  // namespace semiclass
