#include "semiclass/flow.hpp"

#include <cmath>
#include <iostream>

namespace semiclass {

namespace {

struct PhasePoint {
    double r, k;
};

PhasePoint rhs(const PeriodicSpline& energy, const ExternalPotential& W, PhasePoint p) {
    return {energy.deriv(p.k), -W.grad(p.r)};
}

PhasePoint rk4_step(const PeriodicSpline& energy, const ExternalPotential& W, PhasePoint p,
                    double h) {
    const PhasePoint k1 = rhs(energy, W, p);
    const PhasePoint k2 = rhs(energy, W, {p.r + 0.5 * h * k1.r, p.k + 0.5 * h * k1.k});
    const PhasePoint k3 = rhs(energy, W, {p.r + 0.5 * h * k2.r, p.k + 0.5 * h * k2.k});
    const PhasePoint k4 = rhs(energy, W, {p.r + h * k3.r, p.k + h * k3.k});
    return {p.r + h / 6.0 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r),
            p.k + h / 6.0 * (k1.k + 2 * k2.k + 2 * k3.k + k4.k)};
}

double reduce_to_bz(double k, const Lattice& lat) {
    double u = std::fmod(k - lat.bz_min(), lat.gamma_star);
    if (u < 0) u += lat.gamma_star;
    return lat.bz_min() + u;
}

}  // namespace

Trajectory integrate_flow(const PeriodicSpline& energy, const ExternalPotential& W,
                          double k0, double t_macro, double dt_c, bool store_path,
                          double r0) {
    if (dt_c <= 0.0) throw std::invalid_argument("integrate_flow: dt_c must be positive");
    Trajectory traj;
    traj.k0 = k0;
    traj.t_final = t_macro;
    const double direction = t_macro >= 0.0 ? 1.0 : -1.0;
    const double duration = std::abs(t_macro);
    const long steps = duration > 0.0 ? static_cast<long>(std::ceil(duration / dt_c - 1e-12)) : 0;
    const double h = steps > 0 ? direction * duration / steps : 0.0;

    PhasePoint p{r0, k0};
    const double h0 = energy.value(k0) + W.value(r0);
    traj.t.push_back(0.0);
    traj.r.push_back(p.r);
    traj.k.push_back(p.k);
    for (long s = 0; s < steps; ++s) {
        p = rk4_step(energy, W, p, h);
        const double drift = std::abs(energy.value(p.k) + W.value(p.r) - h0);
        traj.energy_drift = std::max(traj.energy_drift, drift);
        if (store_path || s + 1 == steps) {
            traj.t.push_back((s + 1) * h);
            traj.r.push_back(p.r);
            traj.k.push_back(p.k);
        }
    }
    return traj;
}

std::unique_ptr<PeriodicSpline> band_energy_spline(const BandStructure& bs, int band) {
    bs.require_isolated(band, "band_energy_spline");
    std::vector<double> e(bs.n_cells());
    for (int q = 0; q < bs.n_cells(); ++q) e[q] = bs.energies(q, band - 1);
    return std::make_unique<PeriodicSpline>(bs.grid.k_grid, e, bs.grid.lattice.gamma_star);
}

double FlowField::k_reduced(int q) const {
    return reduce_to_bz(k[q], grid.lattice);
}

FlowField build_flow_field(const BandStructure& bs, int band, const ExternalPotential& W,
                           double t_macro, double dt_c) {
    bs.require_isolated(band, "build_flow_field");
    auto spline = band_energy_spline(bs, band);
    FlowField field;
    field.band = band;
    field.t = t_macro;
    field.grid = bs.grid;
    field.r.resize(bs.n_cells());
    field.k.resize(bs.n_cells());
    for (int q = 0; q < bs.n_cells(); ++q) {
        Trajectory traj = integrate_flow(*spline, W, bs.grid.k_grid[q], t_macro, dt_c);
        field.r[q] = traj.r_final();
        field.k[q] = traj.k_final();
        field.max_energy_drift = std::max(field.max_energy_drift, traj.energy_drift);
    }
    return field;
}

Eigen::VectorXcd bloch_cell_values(const BandStructure& bs, int q, int band) {
    const auto& g = bs.grid;
    const Eigen::VectorXcd c = bs.bloch_vector(q, band);
    const double sa = std::sqrt(g.lattice.a);
    Eigen::VectorXcd out(g.points_per_cell);
    for (int i = 0; i < g.points_per_cell; ++i) {
        complexd phi(0.0, 0.0);
        for (int r = 0; r < c.size(); ++r) {
            phi += c[r] * std::polar(1.0, (r - bs.cutoff) * g.lattice.gamma_star * (i * g.dx));
        }
        out[i] = phi / sa;
    }
    return out;
}

namespace {

FiberedState apply_multiplier(const std::vector<FlowField>& flows, const FiberedState& f,
                              const BandStructure& bs, bool use_k) {
    if (!f.grid.same_as(bs.grid)) throw std::invalid_argument("apply_R/K: grid mismatch");
    FiberedState out;
    out.grid = f.grid;
    out.fibers = Eigen::MatrixXcd::Zero(f.grid.n_cells, f.grid.points_per_cell);
    double covered = 0.0;
    for (const auto& flow : flows) {
        BlochCoefficients g = project_band(f, bs, flow.band);
        covered += g.population();
        for (int q = 0; q < f.grid.n_cells; ++q) {
            const double mult = use_k ? flow.k_reduced(q) : flow.r[q];
            out.fibers.row(q) +=
                mult * g.values[q] * bloch_cell_values(bs, q, flow.band).transpose();
        }
    }
    const double total = f.norm() * f.norm();
    if (total > 0.0 && covered < total * (1.0 - 1e-6)) {
        throw std::runtime_error(
            "apply_R/K: supplied bands cover only " + std::to_string(covered / total) +
            " of the state's population");
    }
    return out;
}

}  // namespace

FiberedState apply_R(const std::vector<FlowField>& flows, const FiberedState& f,
                     const BandStructure& bs) {
    return apply_multiplier(flows, f, bs, false);
}

FiberedState apply_K(const std::vector<FlowField>& flows, const FiberedState& f,
                     const BandStructure& bs) {
    return apply_multiplier(flows, f, bs, true);
}

double TransportedMeasure::total_mass() const {
    double m = 0.0;
    for (const auto& p : points) m += p.weight;
    return m;
}

TransportedMeasure build_transported_measure(const std::vector<FlowField>& flows,
                                             const std::vector<BlochCoefficients>& coeffs) {
    if (flows.size() != coeffs.size()) {
        throw std::invalid_argument("build_transported_measure: band count mismatch");
    }
    TransportedMeasure tm;
    for (size_t b = 0; b < flows.size(); ++b) {
        if (flows[b].band != coeffs[b].band) {
            throw std::invalid_argument("build_transported_measure: band order mismatch");
        }
        const int nc = flows[b].grid.n_cells;
        for (int q = 0; q < nc; ++q) {
            tm.points.push_back({flows[b].r[q], flows[b].k_reduced(q),
                                 std::norm(coeffs[b].values[q]) / nc});
        }
    }
    return tm;
}

double Histogram::mass() const {
    double m = 0.0;
    for (double v : masses) m += v;
    return m;
}

namespace {

Histogram make_hist(int bins, double lo, double hi) {
    Histogram h;
    h.edges.resize(bins + 1);
    h.masses.assign(bins, 0.0);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    return h;
}

void deposit(Histogram& h, double x, double w) {
    const int bins = static_cast<int>(h.masses.size());
    const double lo = h.edges.front(), hi = h.edges.back();
    int i = static_cast<int>((x - lo) / (hi - lo) * bins);
    i = std::clamp(i, 0, bins - 1);
    h.masses[i] += w;
}

}  // namespace

Marginals transported_marginals(const TransportedMeasure& tm, int r_bins, double r_lo,
                                double r_hi, int k_bins, double k_lo, double k_hi) {
    // extend ranges automatically if endpoints fall outside
    bool extended = false;
    for (const auto& p : tm.points) {
        if (p.r < r_lo || p.r > r_hi) {
            r_lo = std::min(r_lo, p.r - 1e-12);
            r_hi = std::max(r_hi, p.r + 1e-12);
            extended = true;
        }
        if (p.k < k_lo || p.k > k_hi) {
            k_lo = std::min(k_lo, p.k - 1e-12);
            k_hi = std::max(k_hi, p.k + 1e-12);
            extended = true;
        }
    }
    if (extended) {
        std::cerr << "transported_marginals: bin range extended to cover endpoints\n";
    }
    Marginals m;
    m.range_extended = extended;
    m.position = make_hist(r_bins, r_lo, r_hi);
    m.quasimomentum = make_hist(k_bins, k_lo, k_hi);
    for (const auto& p : tm.points) {
        deposit(m.position, p.r, p.weight);
        deposit(m.quasimomentum, p.k, p.weight);
    }
    return m;
}

}  // namespace semiclass
