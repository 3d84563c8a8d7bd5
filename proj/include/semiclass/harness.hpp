#pragma once

#include <string>

#include "semiclass/bloch.hpp"
#include "semiclass/effective.hpp"
#include "semiclass/flow.hpp"
#include "semiclass/lattice.hpp"
#include "semiclass/propagator.hpp"
#include "semiclass/wigner.hpp"

namespace semiclass {

/// Everything a sweep needs: model, discretization, packet, ladder.
struct ExperimentConfig {
    double a = 0.0;
    int n_cells = 0;
    int points_per_cell = 0;
    PeriodicPotential V;
    ExternalPotential W;
    int band = 1;
    int cutoff = 16;
    int n_bands = 8;
    double gap_floor = 0.02;
    double k_center = 0.0;
    double sigma_k = 0.05;
    std::vector<double> epsilon_ladder;  // strictly decreasing, in (0, 1]
    std::vector<double> t_list;          // macroscopic times
    std::vector<std::string> metrics;
    double dt_factor = 0.1;   // quantum step = dt_factor / E_max
    double dt_c = 1e-3;       // classical RK4 step
    std::string out_dir = ".";

    void validate() const;
    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    // the standard Mathieu-type configuration used throughout the tests
    static ExperimentConfig reference();
};

/// Immutable per-config state shared by all metrics and ladder points.
struct ExperimentSetup {
    ExperimentConfig cfg;
    SimulationGrid grid;
    BandStructure bs;
    WaveFunction psi0;

    PropagatorConfig prop(double epsilon, double t_macro) const;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// || U(-t/eps) eps*x U(t/eps) psi0  -  U_Bloch^{-1} R(t) U_Bloch psi0 ||.
double metric_position_strong(const ExperimentSetup& s, const WaveFunction& psi_t,
                              const FlowField& flow, double epsilon, double t);

/// Same with g(k) = exp(i 2 pi k / gamma_star) in place of the position,
/// compared against multiplication by g(k_n(t; k)).
double metric_quasimomentum_strong(const ExperimentSetup& s, const WaveFunction& psi_t,
                                   const FlowField& flow, double epsilon, double t);

/// |<g(k)>_{psi_t} - sum g(k_n(t;k)) |psi_n(k)|^2 dk|.
double metric_quasimomentum_weak(const ExperimentSetup& s, const WaveFunction& psi_t,
                                 const FlowField& flow);

/// ||(1 - P_n) psi_t||: population that left the prepared band.
double metric_leakage(const ExperimentSetup& s, const WaveFunction& psi_t);

/// Distance between the full-evolution macroscopic position vector and the
/// one reconstructed from the band-diagonal effective evolution.
double metric_diag_position(const ExperimentSetup& s, const WaveFunction& psi_t,
                            const EffectivePotentialOperator& op, double epsilon, double t);

/// max over a fixed symbol dictionary of |Wigner pairing - classical value|.
double metric_wigner_weak(const ExperimentSetup& s, const WaveFunction& psi_t,
                          const FlowField& flow, double epsilon);

/// Coefficient distance between the full and semiclassical effective
/// propagations of the same initial band coefficients.
double metric_coeff_distance(const ExperimentSetup& s, const EffectivePotentialOperator& op,
                             double epsilon, double t);

/// Factored test symbols covering position, quasimomentum and mixed factors.
std::vector<Symbol> symbol_dictionary(double gamma_star);

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points_used = 0;
    bool valid = false;
};

/// Least squares on (log eps, log value); values below 1e-12 are clamped out
/// with a warning, and fewer than 3 surviving points invalidate the fit.
OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& values);

struct ConvergenceReport {
    struct Row {
        std::string metric;
        double epsilon;
        double t;
        double value;
    };
    struct Slope {
        std::string metric;
        double t;
        OrderFit fit;
    };
    std::vector<Row> rows;
    std::vector<Slope> slopes;
    std::vector<std::string> failures;  // per-ladder-point error messages

    bool complete() const { return failures.empty(); }
    void write_csv(const std::string& out_dir) const;  // report.csv, slopes.csv
};

ConvergenceReport run_sweep(const ExperimentConfig& cfg);

}  // namespace semiclass
