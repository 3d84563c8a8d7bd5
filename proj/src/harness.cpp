#include "semiclass/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace semiclass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using nlohmann::json;

PeriodicPotential parse_cosine(const json& arr) {
    PeriodicPotential V;
    for (const auto& pair : arr) {
        V.cosine_coefficients.emplace_back(pair.at(0).get<int>(),
                                           pair.at(1).get<double>());
    }
    return V;
}

ExternalPotential parse_external(const json& block) {
    ExternalPotential W;
    const std::string kind = block.value("kind", "gaussian");
    if (kind == "none") return W;
    if (kind != "gaussian") {
        throw std::invalid_argument("config: unknown external.kind '" + kind + "'");
    }
    for (const auto& t : block.at("terms")) {
        W.terms.push_back({t.at(0).get<double>(), t.at(1).get<double>(),
                           t.at(2).get<double>()});
    }
    return W;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("config: lattice.a must be positive");
    if (band < 1) throw std::invalid_argument("config: band must be >= 1");
    double prev = 2.0;
    for (double e : epsilon_ladder) {
        if (!(e > 0.0) || e > 1.0) {
            throw std::invalid_argument("config: epsilon values must lie in (0, 1]");
        }
        if (e >= prev) {
            throw std::invalid_argument("config: epsilon ladder must be strictly decreasing");
        }
        prev = e;
    }
    for (double t : t_list) {
        if (t < 0.0) throw std::invalid_argument("config: times must be nonnegative");
    }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg = reference();
    cfg.metrics.clear();
    if (j.contains("lattice")) cfg.a = j["lattice"].value("a", cfg.a);
    if (j.contains("grid")) {
        cfg.n_cells = j["grid"].value("n_cells", cfg.n_cells);
        cfg.points_per_cell = j["grid"].value("points_per_cell", cfg.points_per_cell);
    }
    if (j.contains("potential")) cfg.V = parse_cosine(j["potential"].at("cosine"));
    if (j.contains("external")) cfg.W = parse_external(j["external"]);
    if (j.contains("band")) {
        const auto& b = j["band"];
        cfg.band = b.value("n", cfg.band);
        cfg.cutoff = b.value("cutoff", cfg.cutoff);
        cfg.n_bands = b.value("n_bands", cfg.n_bands);
        cfg.gap_floor = b.value("gap_floor", cfg.gap_floor);
    }
    if (j.contains("packet")) {
        cfg.k_center = j["packet"].value("k_center", cfg.k_center);
        cfg.sigma_k = j["packet"].value("sigma_k", cfg.sigma_k);
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (s.contains("epsilon_ladder")) {
            cfg.epsilon_ladder = s["epsilon_ladder"].get<std::vector<double>>();
        }
        if (s.contains("t_list")) cfg.t_list = s["t_list"].get<std::vector<double>>();
        if (s.contains("metrics")) cfg.metrics = s["metrics"].get<std::vector<std::string>>();
        cfg.dt_factor = s.value("dt_factor", cfg.dt_factor);
        cfg.dt_c = s.value("dt_c", cfg.dt_c);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::reference() {
    ExperimentConfig cfg;
    cfg.a = kTwoPi;
    cfg.n_cells = 512;
    cfg.points_per_cell = 16;
    cfg.V.cosine_coefficients = {{1, 0.15}};
    cfg.W.terms = {{0.1, 0.4, 0.5}};
    cfg.band = 1;
    cfg.cutoff = 16;
    cfg.n_bands = 8;
    cfg.gap_floor = 0.02;
    cfg.k_center = 0.2;
    cfg.sigma_k = 0.05;
    cfg.epsilon_ladder = {0.2, 0.1, 0.05, 0.025};
    cfg.t_list = {0.5, 1.0};
    cfg.metrics = {"position_strong", "quasimomentum_strong", "quasimomentum_weak",
                   "leakage",         "diag_position",        "wigner_weak",
                   "coeff_distance",  "od_norm",              "sc_vs_full_norm"};
    return cfg;
}

PropagatorConfig ExperimentSetup::prop(double epsilon, double t_macro) const {
    PropagatorConfig pc;
    pc.epsilon = epsilon;
    pc.t_macro = t_macro;
    pc.dt_factor = cfg.dt_factor;
    return pc;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentSetup s;
    s.cfg = cfg;
    s.grid = build_grid(build_lattice(cfg.a), cfg.n_cells, cfg.points_per_cell);
    s.bs = compute_band_structure(cfg.V, s.grid, cfg.cutoff, cfg.n_bands, cfg.gap_floor);
    s.psi0 = prepare_band_packet(s.bs, cfg.band, cfg.k_center, cfg.sigma_k);
    return s;
}

namespace {

double state_distance(const WaveFunction& a, const WaveFunction& b) {
    return std::sqrt((a.samples - b.samples).squaredNorm() * a.grid.dx);
}

// U^{-1} of g(k) phi_band(k, .) for coefficients g on the k-grid
WaveFunction assemble_band_state(const BandStructure& bs, int band,
                                 const Eigen::VectorXcd& g) {
    FiberedState f;
    f.grid = bs.grid;
    f.fibers.resize(bs.grid.n_cells, bs.grid.points_per_cell);
    for (int q = 0; q < bs.grid.n_cells; ++q) {
        f.fibers.row(q) = g[q] * bloch_cell_values(bs, q, band).transpose();
    }
    return inverse_bloch_transform(f);
}

complexd torus_character(double k, double gamma_star) {
    return std::polar(1.0, kTwoPi * k / gamma_star);
}

}  // namespace

double metric_position_strong(const ExperimentSetup& s, const WaveFunction& psi_t,
                              const FlowField& flow, double epsilon, double t) {
    const WaveFunction xpsi = position_apply(psi_t, epsilon);
    const WaveFunction heisenberg =
        propagate_backward(xpsi, s.cfg.V, s.cfg.W, s.prop(epsilon, t)).psi;
    const FiberedState f0 = bloch_transform(s.psi0);
    const WaveFunction classical = inverse_bloch_transform(apply_R({flow}, f0, s.bs));
    return state_distance(heisenberg, classical);
}

double metric_quasimomentum_strong(const ExperimentSetup& s, const WaveFunction& psi_t,
                                   const FlowField& flow, double epsilon, double t) {
    const double gs = s.grid.lattice.gamma_star;
    const WaveFunction gpsi = apply_momentum_function(
        psi_t, [gs](double p) { return torus_character(p, gs); });
    const WaveFunction heisenberg =
        propagate_backward(gpsi, s.cfg.V, s.cfg.W, s.prop(epsilon, t)).psi;

    const FiberedState f0 = bloch_transform(s.psi0);
    BlochCoefficients c = project_band(f0, s.bs, s.cfg.band);
    Eigen::VectorXcd g(s.grid.n_cells);
    for (int q = 0; q < s.grid.n_cells; ++q) {
        g[q] = torus_character(flow.k_reduced(q), gs) * c.values[q];
    }
    const WaveFunction classical = assemble_band_state(s.bs, s.cfg.band, g);
    return state_distance(heisenberg, classical);
}

double metric_quasimomentum_weak(const ExperimentSetup& s, const WaveFunction& psi_t,
                                 const FlowField& flow) {
    const double gs = s.grid.lattice.gamma_star;
    const complexd quantum = quasimomentum_expectation(
        psi_t, [gs](double k) { return torus_character(k, gs); });
    const BlochCoefficients c = project_band(bloch_transform(s.psi0), s.bs, s.cfg.band);
    complexd classical(0.0, 0.0);
    for (int q = 0; q < s.grid.n_cells; ++q) {
        classical += torus_character(flow.k_reduced(q), gs) * std::norm(c.values[q]);
    }
    classical /= static_cast<double>(s.grid.n_cells);
    return std::abs(quantum - classical);
}

double metric_leakage(const ExperimentSetup& s, const WaveFunction& psi_t) {
    const BlochCoefficients c = project_band(bloch_transform(psi_t), s.bs, s.cfg.band);
    const double total = psi_t.norm() * psi_t.norm();
    return std::sqrt(std::max(0.0, total - c.population()));
}

double metric_diag_position(const ExperimentSetup& s, const WaveFunction& psi_t,
                            const EffectivePotentialOperator& op, double epsilon, double t) {
    const WaveFunction full =
        propagate_backward(position_apply(psi_t, epsilon), s.cfg.V, s.cfg.W,
                           s.prop(epsilon, t)).psi;

    const BlochCoefficients c0 = project_band(bloch_transform(s.psi0), s.bs, s.cfg.band);
    EffectiveState g0{s.cfg.band, c0.values, s.grid};
    const EffectiveState g_t = propagate_effective_full(g0, op, s.bs, t, 0.0);
    const EffectiveState xg = apply_effective_position(g_t, s.bs, epsilon);
    const EffectiveState g_back = propagate_effective_full(xg, op, s.bs, -t, 0.0);
    const WaveFunction diag = assemble_band_state(s.bs, s.cfg.band, g_back.values);
    return state_distance(full, diag);
}

std::vector<Symbol> symbol_dictionary(double gamma_star) {
    auto gauss = [](double x) { return std::exp(-0.5 * x * x); };
    auto lorentz = [](double x) { return 1.0 / (1.0 + x * x); };
    auto cosk = [gamma_star](double k) { return std::cos(kTwoPi * k / gamma_star); };
    auto sink = [gamma_star](double k) { return std::sin(kTwoPi * k / gamma_star); };
    std::vector<Symbol> dict;
    dict.push_back({{{1.0, gauss, nullptr, 0.0}}});
    dict.push_back({{{1.0, lorentz, nullptr, 0.0}}});
    dict.push_back({{{1.0, nullptr, cosk, gamma_star}}});
    dict.push_back({{{1.0, nullptr, sink, gamma_star}}});
    dict.push_back({{{1.0, gauss, cosk, gamma_star}}});
    dict.push_back({{{1.0, lorentz, sink, gamma_star}}});
    return dict;
}

double metric_wigner_weak(const ExperimentSetup& s, const WaveFunction& psi_t,
                          const FlowField& flow, double epsilon) {
    std::vector<double> x_macro(s.grid.size());
    for (int j = 0; j < s.grid.size(); ++j) x_macro[j] = epsilon * s.grid.x_grid[j];
    const WignerGrid w = wigner_band(psi_t, epsilon, x_macro);

    const BlochCoefficients c0 = project_band(bloch_transform(s.psi0), s.bs, s.cfg.band);
    const TransportedMeasure tm = build_transported_measure({flow}, {c0});

    double worst = 0.0;
    for (const Symbol& a : symbol_dictionary(s.grid.lattice.gamma_star)) {
        const double quantum = pair_symbol(w, a);
        const double classical = classical_symbol_expectation(tm, a);
        worst = std::max(worst, std::abs(quantum - classical));
    }
    return worst;
}

double metric_coeff_distance(const ExperimentSetup& s, const EffectivePotentialOperator& op,
                             double epsilon, double t) {
    const BlochCoefficients c0 = project_band(bloch_transform(s.psi0), s.bs, s.cfg.band);
    EffectiveState g0{s.cfg.band, c0.values, s.grid};
    // identical step for both propagators so the splitting error cancels
    const double e_max = s.bs.energies.col(s.cfg.band - 1).cwiseAbs().maxCoeff() +
                         op.eigenvalues.cwiseAbs().maxCoeff();
    const double dt = 0.1 / std::max(e_max, 1e-12);
    const EffectiveState full = propagate_effective_full(g0, op, s.bs, t, dt);
    const EffectiveState sc =
        propagate_effective_sc(g0, s.bs, s.cfg.W, epsilon, t, dt);
    return std::sqrt((full.values - sc.values).squaredNorm() / s.grid.n_cells);
}

OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& values) {
    if (epsilons.size() != values.size()) {
        throw std::invalid_argument("fit_order: mismatched lengths");
    }
    std::vector<double> lx, ly;
    for (size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 1e-12)) {
            std::cerr << "fit_order: value " << values[i] << " at epsilon " << epsilons[i]
                      << " is at the numerical floor, excluded from the fit\n";
            continue;
        }
        lx.push_back(std::log(epsilons[i]));
        ly.push_back(std::log(values[i]));
    }
    OrderFit fit;
    fit.points_used = static_cast<int>(lx.size());
    if (fit.points_used < 3) return fit;
    const double n = fit.points_used;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < fit.points_used; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
        syy += ly[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (int i = 0; i < fit.points_used; ++i) {
        const double pred = fit.slope * lx[i] + fit.intercept;
        ss_res += (ly[i] - pred) * (ly[i] - pred);
        ss_tot += (ly[i] - sy / n) * (ly[i] - sy / n);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.valid = true;
    return fit;
}

void ConvergenceReport::write_csv(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream rep(fs::path(out_dir) / "report.csv");
    rep.precision(15);
    rep << "metric,epsilon,t,value\n";
    for (const auto& r : rows) {
        rep << r.metric << "," << r.epsilon << "," << r.t << "," << r.value << "\n";
    }
    std::ofstream slp(fs::path(out_dir) / "slopes.csv");
    slp.precision(15);
    slp << "metric,t,slope,r2\n";
    for (const auto& s : slopes) {
        if (!s.fit.valid) continue;
        slp << s.metric << "," << s.t << "," << s.fit.slope << "," << s.fit.r2 << "\n";
    }
}

ConvergenceReport run_sweep(const ExperimentConfig& cfg) {
    ConvergenceReport report;
    if (cfg.metrics.empty()) {
        if (!cfg.out_dir.empty()) report.write_csv(cfg.out_dir);
        return report;
    }
    const std::set<std::string> want(cfg.metrics.begin(), cfg.metrics.end());
    for (const std::string& m : want) {
        static const std::set<std::string> known = {
            "position_strong", "quasimomentum_strong", "quasimomentum_weak",
            "leakage",         "diag_position",        "wigner_weak",
            "coeff_distance",  "od_norm",              "sc_vs_full_norm"};
        if (!known.count(m)) throw std::invalid_argument("run_sweep: unknown metric " + m);
    }
    const bool needs_psi =
        want.count("position_strong") || want.count("quasimomentum_strong") ||
        want.count("quasimomentum_weak") || want.count("leakage") ||
        want.count("diag_position") || want.count("wigner_weak");
    const bool needs_flow =
        want.count("position_strong") || want.count("quasimomentum_strong") ||
        want.count("quasimomentum_weak") || want.count("wigner_weak");
    const bool needs_op = want.count("diag_position") || want.count("coeff_distance");

    const ExperimentSetup setup = build_setup(cfg);

    std::vector<FlowField> flows;
    if (needs_flow) {
        for (double t : cfg.t_list) {
            flows.push_back(build_flow_field(setup.bs, cfg.band, cfg.W, t, cfg.dt_c));
        }
    }

    for (double eps : cfg.epsilon_ladder) {
        try {
            EffectivePotentialOperator op;
            if (needs_op) op = build_effective_potential(setup.bs, cfg.band, cfg.W, eps);
            if (want.count("od_norm")) {
                report.rows.push_back(
                    {"od_norm", eps, 0.0,
                     offdiagonal_coupling_norm(setup.bs, cfg.band, cfg.W, eps)});
            }
            if (want.count("sc_vs_full_norm")) {
                report.rows.push_back(
                    {"sc_vs_full_norm", eps, 0.0,
                     effective_operator_distance(setup.bs, cfg.band, cfg.W, eps)});
            }
            for (size_t it = 0; it < cfg.t_list.size(); ++it) {
                const double t = cfg.t_list[it];
                if (want.count("coeff_distance")) {
                    report.rows.push_back(
                        {"coeff_distance", eps, t, metric_coeff_distance(setup, op, eps, t)});
                }
                if (!needs_psi) continue;
                const WaveFunction psi_t =
                    propagate(setup.psi0, cfg.V, cfg.W, setup.prop(eps, t)).psi;
                if (want.count("leakage")) {
                    report.rows.push_back({"leakage", eps, t, metric_leakage(setup, psi_t)});
                }
                if (want.count("position_strong")) {
                    report.rows.push_back(
                        {"position_strong", eps, t,
                         metric_position_strong(setup, psi_t, flows[it], eps, t)});
                }
                if (want.count("quasimomentum_strong")) {
                    report.rows.push_back(
                        {"quasimomentum_strong", eps, t,
                         metric_quasimomentum_strong(setup, psi_t, flows[it], eps, t)});
                }
                if (want.count("quasimomentum_weak")) {
                    report.rows.push_back(
                        {"quasimomentum_weak", eps, t,
                         metric_quasimomentum_weak(setup, psi_t, flows[it])});
                }
                if (want.count("wigner_weak")) {
                    report.rows.push_back(
                        {"wigner_weak", eps, t,
                         metric_wigner_weak(setup, psi_t, flows[it], eps)});
                }
                if (want.count("diag_position")) {
                    report.rows.push_back(
                        {"diag_position", eps, t,
                         metric_diag_position(setup, psi_t, op, eps, t)});
                }
            }
        } catch (const std::exception& e) {
            report.failures.push_back("epsilon=" + std::to_string(eps) + ": " + e.what());
        }
    }

    // slope per (metric, t) over the surviving ladder points
    for (const std::string& m : want) {
        std::set<double> ts;
        for (const auto& r : report.rows) {
            if (r.metric == m) ts.insert(r.t);
        }
        for (double t : ts) {
            std::vector<double> es, vs;
            for (const auto& r : report.rows) {
                if (r.metric == m && r.t == t) {
                    es.push_back(r.epsilon);
                    vs.push_back(r.value);
                }
            }
            if (es.size() < 3) continue;
            report.slopes.push_back({m, t, fit_order(es, vs)});
        }
    }

    if (!cfg.out_dir.empty()) report.write_csv(cfg.out_dir);
    return report;
}

}  // namespace semiclass
