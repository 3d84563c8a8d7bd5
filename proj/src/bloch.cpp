#include "semiclass/bloch.hpp"

#include <cmath>
#include <numbers>

namespace semiclass {

namespace {
const complexd kI(0.0, 1.0);
}

double WaveFunction::norm() const {
    return std::sqrt(samples.squaredNorm() * grid.dx);
}

WaveFunction& WaveFunction::normalize() {
    const double n = norm();
    if (n > 0.0) samples /= n;
    return *this;
}

double FiberedState::norm() const {
    return std::sqrt(fibers.squaredNorm() * grid.dx / grid.n_cells);
}

double FiberedState::fiber_norm_sq(int q) const {
    return fibers.row(q).squaredNorm() * grid.dx;
}

// (U psi)(k_q, x_i) = sum_m exp(-i (x_i + gamma_m) k_q) psi(gamma_m + x_i)
FiberedState bloch_transform(const WaveFunction& psi) {
    const auto& g = psi.grid;
    const int nc = g.n_cells, ppc = g.points_per_cell;
    if (psi.samples.size() != g.size()) {
        throw std::invalid_argument("bloch_transform: state/grid size mismatch");
    }
    Eigen::MatrixXcd cellphase(nc, nc);  // (q, m) -> exp(-i gamma_m k_q)
    for (int q = 0; q < nc; ++q) {
        const double k = g.k_grid[q];
        for (int m = 0; m < nc; ++m) {
            cellphase(q, m) = std::polar(1.0, -g.cell_origin(m) * k);
        }
    }
    // psi reshaped so column m holds cell m
    Eigen::Map<const Eigen::MatrixXcd> cells(psi.samples.data(), ppc, nc);
    Eigen::MatrixXcd summed = cellphase * cells.transpose();  // (q, i)

    FiberedState f;
    f.grid = g;
    f.fibers.resize(nc, ppc);
    for (int q = 0; q < nc; ++q) {
        const double k = g.k_grid[q];
        for (int i = 0; i < ppc; ++i) {
            f.fibers(q, i) = summed(q, i) * std::polar(1.0, -(i * g.dx) * k);
        }
    }
    return f;
}

WaveFunction inverse_bloch_transform(const FiberedState& f) {
    const auto& g = f.grid;
    const int nc = g.n_cells, ppc = g.points_per_cell;
    if (f.fibers.rows() != nc || f.fibers.cols() != ppc) {
        throw std::invalid_argument("inverse_bloch_transform: fiber/grid size mismatch");
    }
    Eigen::MatrixXcd stripped(nc, ppc);
    for (int q = 0; q < nc; ++q) {
        const double k = g.k_grid[q];
        for (int i = 0; i < ppc; ++i) {
            stripped(q, i) = f.fibers(q, i) * std::polar(1.0, (i * g.dx) * k);
        }
    }
    Eigen::MatrixXcd cellphase(nc, nc);  // (m, q) -> exp(+i gamma_m k_q)
    for (int m = 0; m < nc; ++m) {
        for (int q = 0; q < nc; ++q) {
            cellphase(m, q) = std::polar(1.0, g.cell_origin(m) * g.k_grid[q]);
        }
    }
    Eigen::MatrixXcd cells = (cellphase * stripped) / double(nc);  // (m, i)

    WaveFunction psi;
    psi.grid = g;
    psi.samples.resize(g.size());
    for (int m = 0; m < nc; ++m) {
        for (int i = 0; i < ppc; ++i) {
            psi.samples[m * ppc + i] = cells(m, i);
        }
    }
    return psi;
}

FiberEigenSystem solve_fiber(const PeriodicPotential& V, const Lattice& lat, double k,
                             int cutoff) {
    if (cutoff < 8) throw std::invalid_argument("solve_fiber: cutoff must be >= 8");
    if (std::abs(k) > 0.5 * lat.gamma_star * (1.0 + 1e-9)) {
        throw std::invalid_argument("solve_fiber: k outside the Brillouin zone");
    }
    const int dim = 2 * cutoff + 1;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const double kg = k + (r - cutoff) * lat.gamma_star;
        h(r, r) = 0.5 * kg * kg;
        for (int c = 0; c < dim; ++c) {
            if (r != c) h(r, c) += V.fourier(r - c);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("solve_fiber: eigensolver failed");
    }
    FiberEigenSystem sys;
    sys.k = k;
    sys.cutoff = cutoff;
    sys.energies = es.eigenvalues();
    sys.vectors = es.eigenvectors();
    return sys;
}

void BandStructure::require_isolated(int band, const char* where) const {
    if (band < 1 || band > n_bands) {
        throw std::invalid_argument(std::string(where) + ": band index out of range");
    }
    if (!isolated[band - 1]) {
        // name the k with the smallest margin
        int qmin = 0;
        for (int q = 1; q < n_cells(); ++q) {
            if (gap_margins(q, band - 1) < gap_margins(qmin, band - 1)) qmin = q;
        }
        throw std::runtime_error(std::string(where) + ": band " + std::to_string(band) +
                                 " is not isolated (margin " +
                                 std::to_string(gap_margins(qmin, band - 1)) + " at k = " +
                                 std::to_string(grid.k_grid[qmin]) + ")");
    }
}

// phi(k + gamma_star, x) = e^{-i gamma_star x} phi(k, x): c_m -> c_{m+1}
Eigen::VectorXcd BandStructure::translate_up(const Eigen::VectorXcd& c) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
    out.head(c.size() - 1) = c.tail(c.size() - 1);
    return out;
}

// phi(k - gamma_star, x) = e^{+i gamma_star x} phi(k, x): c_m -> c_{m-1}
Eigen::VectorXcd BandStructure::translate_down(const Eigen::VectorXcd& c) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
    out.tail(c.size() - 1) = c.head(c.size() - 1);
    return out;
}

complexd BandStructure::continued_overlap(int q, int j_back, int band) const {
    const int nc = n_cells();
    int qq = q - j_back;
    int winding = 0;  // number of gamma_star the continued point lies below M*
    while (qq < 0) {
        qq += nc;
        ++winding;
    }
    while (qq >= nc) {
        qq -= nc;
        --winding;
    }
    Eigen::VectorXcd c = bloch_vector(qq, band);
    for (int w = 0; w < winding; ++w) c = translate_down(c);
    for (int w = 0; w > winding; --w) c = translate_up(c);
    return bloch_vector(q, band).dot(c);
}

void gauge_fix(BandStructure& bs) {
    const int nc = bs.n_cells();
    for (int b = 1; b <= bs.n_bands; ++b) {
        if (!bs.isolated[b - 1]) continue;
        // parallel transport: make each consecutive overlap real positive
        for (int q = 1; q < nc; ++q) {
            complexd o = bs.fibers[q - 1].vectors.col(b - 1).dot(bs.fibers[q].vectors.col(b - 1));
            const double mag = std::abs(o);
            if (mag < 1e-12) {
                throw std::runtime_error("gauge_fix: vanishing overlap at k = " +
                                         std::to_string(bs.grid.k_grid[q]));
            }
            bs.fibers[q].vectors.col(b - 1) *= std::conj(o) / mag;
        }
        // holonomy around the BZ torus; the wrap partner is phi(k_0 + gamma_star)
        Eigen::VectorXcd wrap = BandStructure::translate_up(bs.fibers[0].vectors.col(b - 1));
        complexd o = bs.fibers[nc - 1].vectors.col(b - 1).dot(wrap);
        const double theta = -std::arg(o);
        bs.zak_phase[b - 1] = theta;
        // distribute the holonomy so the stored family is exactly periodic
        for (int q = 0; q < nc; ++q) {
            bs.fibers[q].vectors.col(b - 1) *= std::polar(1.0, -theta * q / nc);
        }
    }
    bs.gauge_fixed = true;
}

std::vector<double> band_velocity(const BandStructure& bs, int band) {
    bs.require_isolated(band, "band_velocity");
    const int nc = bs.n_cells();
    std::vector<double> v(nc);
    for (int q = 0; q < nc; ++q) {
        const auto& sys = bs.fibers[q];
        double s = 0.0;
        for (int r = 0; r < sys.dim(); ++r) {
            const double kg = sys.k + sys.row_to_m(r) * bs.grid.lattice.gamma_star;
            s += kg * std::norm(sys.vectors(r, band - 1));
        }
        v[q] = s;
    }
    return v;
}

BandStructure compute_band_structure(const PeriodicPotential& V, const SimulationGrid& grid,
                                     int cutoff, int n_bands, double gap_floor) {
    const int dim = 2 * cutoff + 1;
    if (2 * n_bands >= dim) {
        throw std::invalid_argument(
            "compute_band_structure: cutoff too small for requested band count");
    }
    BandStructure bs;
    bs.grid = grid;
    bs.cutoff = cutoff;
    bs.n_bands = n_bands;
    bs.gap_floor = gap_floor;
    bs.fibers.resize(grid.n_cells);
    bs.energies.resize(grid.n_cells, n_bands);
    bs.velocities.resize(grid.n_cells, n_bands);
    bs.gap_margins.resize(grid.n_cells, n_bands);
    bs.isolated.assign(n_bands, false);
    bs.zak_phase.assign(n_bands, 0.0);

    for (int q = 0; q < grid.n_cells; ++q) {
        bs.fibers[q] = solve_fiber(V, grid.lattice, grid.k_grid[q], cutoff);
        for (int b = 0; b < n_bands; ++b) {
            bs.energies(q, b) = bs.fibers[q].energies[b];
            double margin = std::numeric_limits<double>::infinity();
            for (int m = 0; m < dim; ++m) {
                if (m == b) continue;
                margin = std::min(margin, std::abs(bs.fibers[q].energies[m] -
                                                   bs.fibers[q].energies[b]));
            }
            bs.gap_margins(q, b) = margin;
        }
    }
    for (int b = 0; b < n_bands; ++b) {
        bs.isolated[b] = bs.gap_margins.col(b).minCoeff() > gap_floor;
    }
    gauge_fix(bs);
    for (int b = 1; b <= n_bands; ++b) {
        if (bs.isolated[b - 1]) {
            auto v = band_velocity(bs, b);
            for (int q = 0; q < grid.n_cells; ++q) bs.velocities(q, b - 1) = v[q];
        } else {
            bs.velocities.col(b - 1).setZero();
        }
    }
    return bs;
}

Eigen::VectorXcd cell_to_planewaves(const Eigen::VectorXcd& cell_values,
                                    const SimulationGrid& grid) {
    const int ppc = grid.points_per_cell;
    if (cell_values.size() != ppc) {
        throw std::invalid_argument("cell_to_planewaves: wrong cell size");
    }
    const double scale = std::sqrt(grid.lattice.a) / ppc;
    Eigen::VectorXcd out(ppc);  // index m + ppc/2, m in [-ppc/2, ppc/2)
    for (int m = -ppc / 2; m < ppc / 2; ++m) {
        complexd s(0.0, 0.0);
        for (int i = 0; i < ppc; ++i) {
            s += cell_values[i] *
                 std::polar(1.0, -2.0 * std::numbers::pi * m * i / ppc);
        }
        out[m + ppc / 2] = s * scale;
    }
    return out;
}

Eigen::VectorXcd planewaves_to_cell(const Eigen::VectorXcd& coeffs,
                                    const SimulationGrid& grid) {
    const int ppc = grid.points_per_cell;
    const double scale = 1.0 / std::sqrt(grid.lattice.a);
    Eigen::VectorXcd out(ppc);
    for (int i = 0; i < ppc; ++i) {
        complexd s(0.0, 0.0);
        for (int m = -ppc / 2; m < ppc / 2; ++m) {
            s += coeffs[m + ppc / 2] *
                 std::polar(1.0, 2.0 * std::numbers::pi * m * i / ppc);
        }
        out[i] = s * scale;
    }
    return out;
}

complexd fiber_inner(const Eigen::VectorXcd& coeffs, int cutoff,
                     const Eigen::VectorXcd& cell_values, const SimulationGrid& grid) {
    const Eigen::VectorXcd f = cell_to_planewaves(cell_values, grid);
    const int ppc = grid.points_per_cell;
    complexd s(0.0, 0.0);
    for (int m = -ppc / 2; m < ppc / 2; ++m) {
        if (std::abs(m) > cutoff) continue;
        s += std::conj(coeffs[m + cutoff]) * f[m + ppc / 2];
    }
    return s;
}

double BlochCoefficients::population() const {
    return values.squaredNorm() / grid.n_cells;
}

BlochCoefficients project_band(const FiberedState& f, const BandStructure& bs, int band) {
    if (!f.grid.same_as(bs.grid)) {
        throw std::invalid_argument("project_band: grid mismatch");
    }
    if (band < 1 || band > bs.n_bands) {
        throw std::invalid_argument("project_band: band index out of range");
    }
    BlochCoefficients c;
    c.band = band;
    c.grid = f.grid;
    c.values.resize(f.grid.n_cells);
    for (int q = 0; q < f.grid.n_cells; ++q) {
        c.values[q] =
            fiber_inner(bs.bloch_vector(q, band), bs.cutoff, f.fibers.row(q), f.grid);
    }
    return c;
}

std::vector<double> grad_projection_norm(const BandStructure& bs, int band) {
    bs.require_isolated(band, "grad_projection_norm");
    const int nc = bs.n_cells();
    std::vector<double> out(nc);
    for (int q = 0; q < nc; ++q) {
        const auto& sys = bs.fibers[q];
        const int dim = sys.dim();
        // (D_x + k) applied to phi_band: diagonal in the plane-wave basis
        Eigen::VectorXcd dphi(dim);
        for (int r = 0; r < dim; ++r) {
            dphi[r] = (sys.k + sys.row_to_m(r) * bs.grid.lattice.gamma_star) *
                      sys.vectors(r, band - 1);
        }
        double s = 0.0;
        for (int m = 0; m < dim; ++m) {
            if (m == band - 1) continue;
            const double de = sys.energies[m] - sys.energies[band - 1];
            const complexd amp = sys.vectors.col(m).dot(dphi);
            s += std::norm(amp) / (de * de);
        }
        out[q] = std::sqrt(s);
    }
    return out;
}

}  // namespace semiclass
