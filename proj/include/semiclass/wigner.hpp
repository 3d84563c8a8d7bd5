#pragma once

#include <functional>

#include "semiclass/bloch.hpp"
#include "semiclass/flow.hpp"
#include "semiclass/lattice.hpp"

namespace semiclass {

/// Scaled phase-space density on a macroscopic x-grid times the k-grid,
/// W(x, k) = sum_gamma eps^{-1} psi(x/eps - gamma/2) conj(psi)(x/eps + gamma/2) e^{i k gamma}.
struct WignerGrid {
    double epsilon = 0.0;
    double time = 0.0;
    double gamma_star = 0.0;
    std::vector<double> x;  // macroscopic positions
    std::vector<double> k;  // the k-grid
    Eigen::MatrixXd values;  // x.size() rows, k.size() columns

    double dx() const { return x.size() > 1 ? x[1] - x[0] : 0.0; }
    // integral over x and k (normalized dk measure, total one on M*)
    double mass() const;
    // integral over k only: the scaled position density eps^{-1}|psi(x/eps)|^2
    std::vector<double> k_marginal() const;
};

/// Phase-space symbol in factored form a(x, xi) = sum_i c_i f_i(x) g_i(xi),
/// with each g_i periodic in xi.  A null factor means the constant 1.
struct SymbolTerm {
    double coeff = 1.0;
    std::function<double(double)> f;
    std::function<double(double)> g;
    double g_period = 0.0;  // 0 when g is absent
};

struct Symbol {
    std::vector<SymbolTerm> terms;

    double value(double x, double xi) const;
};

/// x_macro points must land on the micro grid after unscaling (x/eps).
WignerGrid wigner_band(const WaveFunction& psi, double epsilon,
                       const std::vector<double>& x_macro);

/// Quantum pairing <psi, a^W psi> = integral of W * a over phase space.
double pair_symbol(const WignerGrid& w, const Symbol& a);

/// Classical pairing against the transported measure.
double classical_symbol_expectation(const TransportedMeasure& tm, const Symbol& a);

/// g(p) as a Fourier multiplier, then multiplication by f(eps x), in that
/// fixed order; the commutator is O(eps).
WaveFunction product_observable_apply(const WaveFunction& psi,
                                      const std::function<double(double)>& f,
                                      const std::function<double(double)>& g,
                                      double epsilon);

}  // namespace semiclass
