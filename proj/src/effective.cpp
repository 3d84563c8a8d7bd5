#include "semiclass/effective.hpp"

#include <cmath>
#include <numbers>

#include "semiclass/fft.hpp"

namespace semiclass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Quadrature weights c_j = dk/sqrt(2 pi) * What_eps(j dk) for the convolution
// in k; the Gaussian tail is dropped once |What_eps| < 1e-14.
struct Quadrature {
    int jmax = 0;
    std::vector<complexd> c;  // index j + jmax, j in [-jmax, jmax]

    complexd at(int j) const { return c[j + jmax]; }
};

Quadrature build_quadrature(const ExternalPotential& W, double epsilon, double dk) {
    Quadrature quad;
    if (W.is_zero()) {
        quad.c.assign(1, complexd(0.0, 0.0));
        return quad;
    }
    double p_max = 0.0;
    for (const auto& t : W.terms) {
        const double peak = std::abs(t.w0) * t.sigma / epsilon;
        if (peak <= 1e-14) continue;
        p_max = std::max(p_max, (epsilon / t.sigma) * std::sqrt(2.0 * std::log(peak / 1e-14)));
    }
    quad.jmax = static_cast<int>(std::ceil(p_max / dk));
    quad.c.resize(2 * quad.jmax + 1);
    const double scale = dk / std::sqrt(kTwoPi);
    for (int j = -quad.jmax; j <= quad.jmax; ++j) {
        quad.c[j + quad.jmax] = scale * W.fourier(j * dk / epsilon) / epsilon;
    }
    return quad;
}

// translated Bloch vectors tau^w phi_band(k_qq) for every wrap count needed
struct TranslatedBank {
    int wmax = 0;
    std::vector<Eigen::MatrixXcd> banks;  // index w + wmax, each dim x n_cells

    const Eigen::MatrixXcd& at(int w) const { return banks[w + wmax]; }
};

TranslatedBank build_translated_bank(const BandStructure& bs, int band, int jmax) {
    const int nc = bs.n_cells();
    TranslatedBank tb;
    tb.wmax = (jmax + nc - 1) / nc;
    tb.banks.resize(2 * tb.wmax + 1);
    Eigen::MatrixXcd base(bs.fibers[0].dim(), nc);
    for (int q = 0; q < nc; ++q) base.col(q) = bs.bloch_vector(q, band);
    tb.banks[tb.wmax] = base;
    for (int w = 1; w <= tb.wmax; ++w) {
        Eigen::MatrixXcd up = tb.banks[tb.wmax + w - 1];
        Eigen::MatrixXcd down = tb.banks[tb.wmax - w + 1];
        for (int q = 0; q < nc; ++q) {
            up.col(q) = BandStructure::translate_down(up.col(q));
            down.col(q) = BandStructure::translate_up(down.col(q));
        }
        tb.banks[tb.wmax + w] = up;    // continued below M*
        tb.banks[tb.wmax - w] = down;  // continued above M*
    }
    return tb;
}

// column index and wrap count of the continued point k_q - j dk
void wrap_index(int q, int j, int nc, int& qq, int& w) {
    qq = q - j;
    w = 0;
    while (qq < 0) {
        qq += nc;
        ++w;
    }
    while (qq >= nc) {
        qq -= nc;
        --w;
    }
}

// eigenvalues of the semiclassical matrix on the lattice Fourier modes of g;
// mode m carries position theta/gamma_star - a m in the stored gauge
Eigen::VectorXd sc_mode_values(const Quadrature& quad, double theta, int nc) {
    Eigen::VectorXd vals(nc);
    Fft1d fft(nc);  // only for freq_index
    for (int idx = 0; idx < nc; ++idx) {
        const int m = fft.freq_index(idx);
        complexd s(0.0, 0.0);
        for (int j = -quad.jmax; j <= quad.jmax; ++j) {
            s += quad.at(j) * std::polar(1.0, -j * (kTwoPi * m - theta) / nc);
        }
        vals[idx] = s.real();
    }
    return vals;
}

double auto_dt(const BandStructure& bs, int band, const ExternalPotential& W) {
    const double e_max = bs.energies.col(band - 1).cwiseAbs().maxCoeff() + W.max_abs();
    return 0.1 / std::max(e_max, 1e-12);
}

long step_count(double t_micro, double& dt) {
    const double duration = std::abs(t_micro);
    if (duration == 0.0) return 0;
    const long steps = static_cast<long>(std::ceil(duration / std::abs(dt) - 1e-12));
    dt = t_micro / steps;  // signed effective step
    return steps;
}

}  // namespace

void EffectivePotentialOperator::decompose() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("EffectivePotentialOperator: eigendecomposition failed");
    }
    eigenvalues = es.eigenvalues();
    eigenvectors = es.eigenvectors();
}

EffectivePotentialOperator build_effective_potential(const BandStructure& bs, int band,
                                                     const ExternalPotential& W,
                                                     double epsilon) {
    bs.require_isolated(band, "build_effective_potential");
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("build_effective_potential: epsilon must be positive");
    }
    const int nc = bs.n_cells();
    EffectivePotentialOperator op;
    op.band = band;
    op.epsilon = epsilon;
    op.grid = bs.grid;
    op.matrix = Eigen::MatrixXcd::Zero(nc, nc);

    const Quadrature quad = build_quadrature(W, epsilon, bs.grid.dk());
    if (quad.jmax == 0 && std::abs(quad.at(0)) == 0.0) {
        op.decompose();
        return op;
    }
    const TranslatedBank tb = build_translated_bank(bs, band, quad.jmax);
    for (int q = 0; q < nc; ++q) {
        const Eigen::VectorXcd vq = bs.bloch_vector(q, band);
        for (int j = -quad.jmax; j <= quad.jmax; ++j) {
            int qq, w;
            wrap_index(q, j, nc, qq, w);
            op.matrix(q, qq) += quad.at(j) * vq.dot(tb.at(w).col(qq));
        }
    }
    op.matrix = 0.5 * (op.matrix + op.matrix.adjoint()).eval();  // symmetrize roundoff
    op.decompose();
    return op;
}

Eigen::MatrixXcd build_sc_potential_matrix(const BandStructure& bs, int band,
                                           const ExternalPotential& W, double epsilon) {
    bs.require_isolated(band, "build_sc_potential_matrix");
    const int nc = bs.n_cells();
    const double theta = bs.zak_phase[band - 1];
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nc, nc);
    const Quadrature quad = build_quadrature(W, epsilon, bs.grid.dk());
    for (int q = 0; q < nc; ++q) {
        for (int j = -quad.jmax; j <= quad.jmax; ++j) {
            int qq, w;
            wrap_index(q, j, nc, qq, w);
            // pure gauge phase: the stored-gauge link carries exp(-i theta / nc)
            m(q, qq) += quad.at(j) * std::polar(1.0, theta * j / nc);
        }
    }
    return 0.5 * (m + m.adjoint()).eval();
}

double effective_operator_distance(const BandStructure& bs, int band,
                                   const ExternalPotential& W, double epsilon) {
    const Eigen::MatrixXcd diff = build_effective_potential(bs, band, W, epsilon).matrix -
                                  build_sc_potential_matrix(bs, band, W, epsilon);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

EffectiveState propagate_effective_sc(const EffectiveState& g, const BandStructure& bs,
                                      const ExternalPotential& W, double epsilon,
                                      double t_macro, double dt) {
    bs.require_isolated(g.band, "propagate_effective_sc");
    if (!g.grid.same_as(bs.grid)) {
        throw std::invalid_argument("propagate_effective_sc: grid mismatch");
    }
    const int nc = bs.n_cells();
    if (dt <= 0.0) dt = auto_dt(bs, g.band, W);
    double dt_eff = dt;
    const long steps = step_count(t_macro / epsilon, dt_eff);

    const Quadrature quad = build_quadrature(W, epsilon, bs.grid.dk());
    const Eigen::VectorXd wvals = sc_mode_values(quad, bs.zak_phase[g.band - 1], nc);
    Eigen::VectorXcd half_e(nc), pot(nc);
    for (int q = 0; q < nc; ++q) {
        half_e[q] = std::polar(1.0, -0.5 * dt_eff * bs.energies(q, g.band - 1));
    }
    for (int idx = 0; idx < nc; ++idx) pot[idx] = std::polar(1.0, -dt_eff * wvals[idx]);

    EffectiveState out = g;
    Fft1d fft(nc);
    for (long s = 0; s < steps; ++s) {
        out.values.array() *= half_e.array();
        fft.load(out.values);
        fft.forward();
        for (int idx = 0; idx < nc; ++idx) fft.data()[idx] *= pot[idx];
        fft.backward();
        fft.store(out.values);
        out.values.array() *= half_e.array();
    }
    return out;
}

EffectiveState propagate_effective_full(const EffectiveState& g,
                                        const EffectivePotentialOperator& op,
                                        const BandStructure& bs, double t_macro, double dt) {
    bs.require_isolated(g.band, "propagate_effective_full");
    if (g.band != op.band || !g.grid.same_as(op.grid)) {
        throw std::invalid_argument("propagate_effective_full: state/operator mismatch");
    }
    if (op.eigenvectors.size() == 0) {
        throw std::invalid_argument("propagate_effective_full: operator not decomposed");
    }
    const int nc = bs.n_cells();
    if (dt <= 0.0) {
        const double e_max = bs.energies.col(g.band - 1).cwiseAbs().maxCoeff() +
                             op.eigenvalues.cwiseAbs().maxCoeff();
        dt = 0.1 / std::max(e_max, 1e-12);
    }
    double dt_eff = dt;
    const long steps = step_count(t_macro / op.epsilon, dt_eff);

    Eigen::VectorXcd half_e(nc), pot(nc);
    for (int q = 0; q < nc; ++q) {
        half_e[q] = std::polar(1.0, -0.5 * dt_eff * bs.energies(q, g.band - 1));
    }
    for (int q = 0; q < nc; ++q) pot[q] = std::polar(1.0, -dt_eff * op.eigenvalues[q]);

    EffectiveState out = g;
    for (long s = 0; s < steps; ++s) {
        out.values.array() *= half_e.array();
        Eigen::VectorXcd y = op.eigenvectors.adjoint() * out.values;
        y.array() *= pot.array();
        out.values = op.eigenvectors * y;
        out.values.array() *= half_e.array();
    }
    return out;
}

EffectiveState apply_effective_position(const EffectiveState& g, const BandStructure& bs,
                                        double epsilon) {
    bs.require_isolated(g.band, "apply_effective_position");
    const int nc = bs.n_cells();
    const double offset = bs.wannier_offset(g.band);
    const double a = bs.grid.lattice.a;
    EffectiveState out = g;
    Fft1d fft(nc);
    fft.load(out.values);
    fft.forward();
    for (int idx = 0; idx < nc; ++idx) {
        fft.data()[idx] *= epsilon * (offset - a * fft.freq_index(idx));
    }
    fft.backward();
    fft.store(out.values);
    return out;
}

double offdiagonal_coupling_norm(const BandStructure& bs, int band,
                                 const ExternalPotential& W, double epsilon) {
    bs.require_isolated(band, "offdiagonal_coupling_norm");
    if (W.is_zero()) return 0.0;
    const int nc = bs.n_cells();
    const int nb = bs.n_bands;
    if (nb < 2) {
        throw std::runtime_error(
            "offdiagonal_coupling_norm: need a band bank of at least two bands");
    }
    const Quadrature quad = build_quadrature(W, epsilon, bs.grid.dk());
    const TranslatedBank tb = build_translated_bank(bs, band, quad.jmax);

    // bank completeness probe: the continued Bloch vector at the largest
    // shift that still carries significant weight (the far tail is ~1e-14
    // and cannot move the estimate) must be captured by the bank
    double cmax = 0.0;
    for (const auto& cj : quad.c) cmax = std::max(cmax, std::abs(cj));
    int jsig = 0;
    for (int j = 0; j <= quad.jmax; ++j) {
        if (std::abs(quad.at(j)) >= 1e-6 * cmax) jsig = j;
    }
    for (int q = 0; q < nc; ++q) {
        for (int j : {jsig, -jsig}) {
            int qq, w;
            wrap_index(q, j, nc, qq, w);
            const Eigen::VectorXcd u = tb.at(w).col(qq);
            double captured = 0.0;
            for (int b = 0; b < nb; ++b) {
                captured += std::norm(bs.fibers[q].vectors.col(b).dot(u));
            }
            if (captured < 0.99 * u.squaredNorm()) {
                throw std::runtime_error(
                    "offdiagonal_coupling_norm: band bank too small (projector "
                    "completeness " +
                    std::to_string(captured) + " at k = " +
                    std::to_string(bs.grid.k_grid[q]) + ")");
            }
        }
    }

    // rows (q, b != band), columns q': the bank block of Q_n W P_n
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(nc * (nb - 1), nc);
    for (int q = 0; q < nc; ++q) {
        for (int j = -quad.jmax; j <= quad.jmax; ++j) {
            int qq, w;
            wrap_index(q, j, nc, qq, w);
            const Eigen::VectorXcd u = tb.at(w).col(qq);
            int row = q;
            for (int b = 0; b < nb; ++b) {
                if (b == band - 1) continue;
                A(row, qq) += quad.at(j) * bs.fibers[q].vectors.col(b).dot(u);
                row += nc;
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.adjoint() * A,
                                                       Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace semiclass
