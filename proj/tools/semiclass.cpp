// Command-line front end: band structure tables, packet evolution, classical
// flow, effective-model comparisons, Wigner pairings and convergence sweeps.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "semiclass/harness.hpp"

namespace fs = std::filesystem;
using namespace semiclass;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig::reference();
    return ExperimentConfig::from_json_file(path);
}

std::ofstream open_csv(const std::string& out_dir, const std::string& name) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / name);
    if (!f) throw std::runtime_error("cannot write " + name + " in " + out_dir);
    f.precision(15);
    return f;
}

int cmd_bands(const ExperimentConfig& cfg, const std::string& out_dir) {
    const SimulationGrid grid =
        build_grid(build_lattice(cfg.a), cfg.n_cells, cfg.points_per_cell);
    const BandStructure bs =
        compute_band_structure(cfg.V, grid, cfg.cutoff, cfg.n_bands, cfg.gap_floor);
    auto f = open_csv(out_dir, "bands.csv");
    f << "k,n,E,v,gap_margin\n";
    for (int q = 0; q < bs.n_cells(); ++q) {
        for (int b = 0; b < bs.n_bands; ++b) {
            f << grid.k_grid[q] << "," << b + 1 << "," << bs.energies(q, b) << ","
              << bs.velocities(q, b) << "," << bs.gap_margins(q, b) << "\n";
        }
    }
    std::cout << "bands.csv written; isolated flags:";
    for (int b = 0; b < bs.n_bands; ++b) {
        std::cout << " band" << b + 1 << "=" << (bs.isolated[b] ? "yes" : "no");
    }
    std::cout << "\n";
    return 0;
}

int cmd_evolve(const ExperimentConfig& cfg, double epsilon, double t_macro, double dt,
               int record_every, const std::string& out_dir) {
    const ExperimentSetup s = build_setup(cfg);
    PropagatorConfig pc = s.prop(epsilon, t_macro);
    pc.dt = dt;
    pc.record_every = record_every;
    const EvolvedState ev = propagate(s.psi0, cfg.V, cfg.W, pc);

    auto st = open_csv(out_dir, "state.csv");
    st << "x,re_psi,im_psi\n";
    for (int j = 0; j < s.grid.size(); ++j) {
        st << s.grid.x_grid[j] << "," << ev.psi.samples[j].real() << ","
           << ev.psi.samples[j].imag() << "\n";
    }
    auto dg = open_csv(out_dir, "diagnostics.csv");
    dg << "step,norm,energy,boundary_mass\n";
    for (const auto& row : ev.diagnostics) {
        dg << row.step << "," << row.norm << "," << row.energy << ","
           << row.boundary_mass << "\n";
    }
    std::cout << "evolved " << ev.steps << " steps, dt = " << ev.dt
              << ", norm drift = " << ev.norm_drift << "\n";
    return 0;
}

int cmd_flow(const ExperimentConfig& cfg, double t_macro, double dt_c, bool store_path,
             const std::string& out_dir) {
    const SimulationGrid grid =
        build_grid(build_lattice(cfg.a), cfg.n_cells, cfg.points_per_cell);
    const BandStructure bs =
        compute_band_structure(cfg.V, grid, cfg.cutoff, cfg.n_bands, cfg.gap_floor);
    const auto spline = band_energy_spline(bs, cfg.band);
    auto f = open_csv(out_dir, "flow.csv");
    f << "k0,t,r,k,energy_drift\n";
    for (double k0 : grid.k_grid) {
        const Trajectory traj = integrate_flow(*spline, cfg.W, k0, t_macro, dt_c, store_path);
        for (size_t i = store_path ? 0 : traj.t.size() - 1; i < traj.t.size(); ++i) {
            f << k0 << "," << traj.t[i] << "," << traj.r[i] << "," << traj.k[i] << ","
              << traj.energy_drift << "\n";
        }
    }
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ExperimentSetup s = build_setup(cfg);
    auto f = open_csv(out_dir, "effective_vs_full.csv");
    f << "epsilon,t,metric,value\n";
    for (double eps : cfg.epsilon_ladder) {
        const EffectivePotentialOperator op =
            build_effective_potential(s.bs, cfg.band, cfg.W, eps);
        f << eps << ",0," << "od_norm" << ","
          << offdiagonal_coupling_norm(s.bs, cfg.band, cfg.W, eps) << "\n";
        f << eps << ",0," << "sc_vs_full_norm" << ","
          << effective_operator_distance(s.bs, cfg.band, cfg.W, eps) << "\n";
        for (double t : cfg.t_list) {
            f << eps << "," << t << ",coeff_distance,"
              << metric_coeff_distance(s, op, eps, t) << "\n";
        }
    }
    return 0;
}

int cmd_wigner(const ExperimentConfig& cfg, double epsilon, double t_macro,
               const std::string& out_dir) {
    const ExperimentSetup s = build_setup(cfg);
    const WaveFunction psi_t =
        t_macro > 0.0 ? propagate(s.psi0, cfg.V, cfg.W, s.prop(epsilon, t_macro)).psi
                      : s.psi0;

    // full-resolution grid for the pairings, one point per cell for the table
    std::vector<double> x_full(s.grid.size());
    for (int j = 0; j < s.grid.size(); ++j) x_full[j] = epsilon * s.grid.x_grid[j];
    const WignerGrid w = wigner_band(psi_t, epsilon, x_full);

    auto wf = open_csv(out_dir, "wigner.csv");
    wf << "x,k,value\n";
    for (size_t i = 0; i < w.x.size(); i += cfg.points_per_cell) {
        for (size_t q = 0; q < w.k.size(); ++q) {
            wf << w.x[i] << "," << w.k[q] << "," << w.values(i, q) << "\n";
        }
    }

    const FlowField flow = build_flow_field(s.bs, cfg.band, cfg.W, t_macro, cfg.dt_c);
    const BlochCoefficients c0 = project_band(bloch_transform(s.psi0), s.bs, cfg.band);
    const TransportedMeasure tm = build_transported_measure({flow}, {c0});
    auto pf = open_csv(out_dir, "pairings.csv");
    pf << "symbol_id,quantum,classical,abs_diff\n";
    int id = 0;
    for (const Symbol& a : symbol_dictionary(s.grid.lattice.gamma_star)) {
        const double quantum = pair_symbol(w, a);
        const double classical = classical_symbol_expectation(tm, a);
        pf << id++ << "," << quantum << "," << classical << ","
           << std::abs(quantum - classical) << "\n";
    }
    return 0;
}

int cmd_sweep(ExperimentConfig cfg, const std::string& out_dir) {
    cfg.out_dir = out_dir;
    const ConvergenceReport report = run_sweep(cfg);
    for (const auto& fail : report.failures) std::cerr << "failed: " << fail << "\n";
    std::cout << "report.csv and slopes.csv written to " << out_dir << " ("
              << report.rows.size() << " rows)\n";
    return report.complete() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-scale periodic Schrodinger dynamics laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    app.add_option("--config", config_path, "JSON experiment configuration")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");

    auto* bands = app.add_subcommand("bands", "band energies, velocities and gap margins");
    bands->fallthrough();
    int cutoff = 0, n_bands = 0;
    double gap_floor = -1.0;
    bands->add_option("--cutoff", cutoff, "plane-wave cutoff");
    bands->add_option("--n-bands", n_bands, "number of bands");
    bands->add_option("--gap-floor", gap_floor, "isolation threshold");

    auto* evolve = app.add_subcommand("evolve", "propagate a band packet");
    evolve->fallthrough();
    double epsilon = 0.1, t_macro = 1.0, dt = 0.0;
    int band = 0, record_every = 0;
    double k_center = std::nan(""), sigma_k = std::nan("");
    evolve->add_option("--epsilon", epsilon, "scale parameter");
    evolve->add_option("--t-macro", t_macro, "macroscopic time");
    evolve->add_option("--dt", dt, "micro time step (0 = auto)");
    evolve->add_option("--band", band, "band index");
    evolve->add_option("--k-center", k_center, "packet center in M*");
    evolve->add_option("--sigma-k", sigma_k, "packet width in k");
    evolve->add_option("--record-every", record_every, "diagnostics cadence in steps");

    auto* flow = app.add_subcommand("flow", "classical per-band flow over the k-grid");
    flow->fallthrough();
    double flow_t = 1.0, dt_c = 0.0;
    bool store_path = false;
    flow->add_option("--t-macro", flow_t, "macroscopic time");
    flow->add_option("--dt-c", dt_c, "RK4 step");
    flow->add_flag("--store-path", store_path, "emit full trajectories");
    flow->add_option("--band", band, "band index");

    auto* compare = app.add_subcommand("compare", "effective model vs semiclassical model");
    compare->fallthrough();

    auto* wigner = app.add_subcommand("wigner", "Wigner table and symbol pairings");
    wigner->fallthrough();
    wigner->add_option("--epsilon", epsilon, "scale parameter");
    wigner->add_option("--t-macro", t_macro, "macroscopic time");

    auto* sweep = app.add_subcommand("sweep", "run the configured epsilon ladder");
    sweep->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path);
        if (cutoff > 0) cfg.cutoff = cutoff;
        if (n_bands > 0) cfg.n_bands = n_bands;
        if (gap_floor >= 0.0) cfg.gap_floor = gap_floor;
        if (band > 0) cfg.band = band;
        if (!std::isnan(k_center)) cfg.k_center = k_center;
        if (!std::isnan(sigma_k)) cfg.sigma_k = sigma_k;
        if (dt_c > 0.0) cfg.dt_c = dt_c;

        if (bands->parsed()) return cmd_bands(cfg, out_dir);
        if (evolve->parsed()) {
            return cmd_evolve(cfg, epsilon, t_macro, dt, record_every, out_dir);
        }
        if (flow->parsed()) return cmd_flow(cfg, flow_t, cfg.dt_c, store_path, out_dir);
        if (compare->parsed()) return cmd_compare(cfg, out_dir);
        if (wigner->parsed()) return cmd_wigner(cfg, epsilon, t_macro, out_dir);
        if (sweep->parsed()) return cmd_sweep(cfg, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
