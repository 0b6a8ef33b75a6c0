#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "borisfb/integrators.hpp"
#include "borisfb/reference.hpp"

namespace borisfb {

/// Deterministic experiment description; no random state anywhere.
struct ExperimentSpec {
    std::string preset = "paper-sec8";
    Vec3 x0{1.0 / 3.0, 1.0 / 4.0, 1.0 / 2.0};
    Vec3 v0{2.0 / 5.0, 2.0 / 3.0, 1.0};
    double t_end = 1.0;
    std::vector<double> epsilons;   // strictly decreasing
    std::vector<double> h_ratios;   // convergence sweeps: h = ratio * epsilon
    std::vector<long> k_values;     // resonance scans: h = 1/k, single epsilon
    std::vector<MethodConfig> methods;
    ErrMode err_mode = ErrMode::sup_over_grid;
    double ref_tol = 1e-10;
};

/// The experiment of the convergence study at full scale: epsilon = 2^-4
/// .. 2^-13, h = eps, 4 eps, 16 eps, all four methods, global (sup) error.
ExperimentSpec paper_converge_spec();

/// The stepsize-resonance scan: epsilon = 2^-10, h = 1/k for k = 60..600,
/// all four methods, error at t = 1.
ExperimentSpec paper_scan_spec();

struct Cell {
    std::string method;
    double epsilon = 0.0;
    double h = 0.0;
    double h_ratio = 0.0;  // h/epsilon for convergence rows
    long k = 0;            // 1/h for scan rows
    long n_steps = 0;
    ErrorMetrics err{};
    bool flagged = false;
    double min_sinc = 1.0;
    int fp_iters = 0;        // max over steps
    double fp_residual = 0.0;  // max over steps
    double oracle_substep = 0.0;
    double oracle_residual = 0.0;
    bool failed = false;
    std::string error;
};

struct SlopeFit {
    std::string method;
    double h_ratio = 0.0;
    std::string metric;  // err_x / err_vpar / err_vperp
    double slope = 0.0;
    int n_points = 0;
};

enum class ReportKind { converge, scan };

struct ConvergenceReport {
    ReportKind kind = ReportKind::converge;
    ExperimentSpec spec;
    std::vector<Cell> cells;   // sorted by (method, epsilon desc, h desc / k asc)
    std::vector<SlopeFit> slopes;
    const Cell* find(const std::string& method, double epsilon, double h) const;
    const SlopeFit* find_slope(const std::string& method, double h_ratio,
                               const std::string& metric) const;
};

/// Runs every (method, epsilon, h) cell against a cached reference and fits
/// log-log slopes over the unflagged cells. Failed cells are recorded, not
/// fatal. Cells run concurrently; output order and content are independent
/// of scheduling.
ConvergenceReport run_convergence(const ExperimentSpec&);

/// One cell per k at fixed epsilon; resonance flags populated, no slope fits.
ConvergenceReport run_resonance_scan(const ExperimentSpec&);

/// Ordinary least-squares slope of log(err) against log(eps).
/// Throws InsufficientData for fewer than 4 points or nonpositive errors.
double fit_slope(const std::vector<std::pair<double, double>>& points);

/// Shared, thread-safe reference-solution store; consults the on-disk cache
/// under BORIS_CACHE_DIR when that variable is set.
class ReferenceCache {
public:
    ReferenceCache(std::string preset, const Vec3& x0, const Vec3& v0, double ref_tol);
    ~ReferenceCache();
    std::shared_ptr<const ReferenceSolution> get(const FieldModel&, double h, long n_steps);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Report and trajectory serialization (io.cpp).
void write_report_csv(const ConvergenceReport&, std::ostream&);
void write_report_json(const ConvergenceReport&, std::ostream&);
void write_report_gnuplot(const ConvergenceReport&, const std::string& csv_path, std::ostream&);
void write_trajectory_csv(const Trajectory&, std::ostream&);
void write_trajectory_json(const Trajectory&, std::ostream&);

}  // namespace borisfb
