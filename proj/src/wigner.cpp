#include "semiclass/wigner.hpp"

#include <cmath>

#include "semiclass/propagator.hpp"

namespace semiclass {

double WignerGrid::mass() const {
    return values.sum() * dx() / static_cast<double>(k.size());
}

std::vector<double> WignerGrid::k_marginal() const {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = values.row(i).sum() / static_cast<double>(k.size());
    }
    return out;
}

double Symbol::value(double x, double xi) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double v = t.coeff;
        if (t.f) v *= t.f(x);
        if (t.g) v *= t.g(xi);
        s += v;
    }
    return s;
}

WignerGrid wigner_band(const WaveFunction& psi, double epsilon,
                       const std::vector<double>& x_macro) {
    const auto& g = psi.grid;
    const int n = g.size();
    const int nc = g.n_cells;
    const int half = g.points_per_cell / 2;  // grid points in gamma/2 = a/2

    WignerGrid w;
    w.epsilon = epsilon;
    w.gamma_star = g.lattice.gamma_star;
    w.x = x_macro;
    w.k = g.k_grid;
    w.values.setZero(static_cast<int>(x_macro.size()), nc);

    // significant support of psi; the gamma sum is truncated outside it
    const double thresh = 1e-14 * psi.samples.cwiseAbs().maxCoeff();
    int jlo = n, jhi = -1;
    for (int j = 0; j < n; ++j) {
        if (std::abs(psi.samples[j]) >= thresh) {
            jlo = std::min(jlo, j);
            jhi = std::max(jhi, j);
        }
    }

    for (size_t row = 0; row < x_macro.size(); ++row) {
        const double xm = x_macro[row] / epsilon;
        const double pos = (xm + 0.5 * g.box_length) / g.dx;
        const int j = static_cast<int>(std::lround(pos));
        if (j < 0 || j >= n || std::abs(pos - j) > 1e-8) {
            throw std::invalid_argument(
                "wigner_band: x_macro/epsilon misses the micro grid");
        }
        if (jhi < jlo) continue;  // zero state
        // amplitudes A_m = psi(x - m a/2) conj(psi)(x + m a/2) / eps;
        // m and -m contribute conjugates, so only m >= 0 is accumulated
        const int mmax = std::min((j - jlo) / half, (jhi - j) / half);
        for (int m = 0; m <= mmax; ++m) {
            const complexd amp =
                psi.samples[j - m * half] * std::conj(psi.samples[j + m * half]) / epsilon;
            if (m == 0) {
                for (int q = 0; q < nc; ++q) w.values(row, q) += amp.real();
            } else {
                for (int q = 0; q < nc; ++q) {
                    const complexd ph = std::polar(1.0, g.k_grid[q] * m * g.lattice.a);
                    w.values(row, q) += 2.0 * (amp * ph).real();
                }
            }
        }
    }
    return w;
}

double pair_symbol(const WignerGrid& w, const Symbol& a) {
    for (const auto& t : a.terms) {
        if (!t.g) continue;
        if (t.g_period <= 0.0) {
            throw std::invalid_argument("pair_symbol: quasimomentum factor needs a period");
        }
        const double ratio = w.gamma_star / t.g_period;
        if (std::abs(ratio - std::lround(ratio)) > 1e-9) {
            throw std::invalid_argument(
                "pair_symbol: symbol period incommensurate with the reciprocal lattice");
        }
    }
    double s = 0.0;
    for (size_t i = 0; i < w.x.size(); ++i) {
        for (size_t q = 0; q < w.k.size(); ++q) {
            s += w.values(i, q) * a.value(w.x[i], w.k[q]);
        }
    }
    return s * w.dx() / static_cast<double>(w.k.size());
}

double classical_symbol_expectation(const TransportedMeasure& tm, const Symbol& a) {
    double s = 0.0;
    for (const auto& p : tm.points) s += p.weight * a.value(p.r, p.k);
    return s;
}

WaveFunction product_observable_apply(const WaveFunction& psi,
                                      const std::function<double(double)>& f,
                                      const std::function<double(double)>& g,
                                      double epsilon) {
    WaveFunction out = psi;
    if (g) {
        out = apply_momentum_function(out, [&](double p) { return complexd(g(p), 0.0); });
    }
    if (f) {
        for (int j = 0; j < out.grid.size(); ++j) {
            out.samples[j] *= f(epsilon * out.grid.x_grid[j]);
        }
    }
    return out;
}

}  // namespace semiclass
