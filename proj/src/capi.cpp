#include "borisfb.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "borisfb/error.hpp"
#include "borisfb/harness.hpp"
#include "borisfb/validate.hpp"

namespace {

thread_local std::string g_last_error;

bfb_status to_status(borisfb::errc code) {
    using borisfb::errc;
    switch (code) {
        case errc::invalid_argument:     return BFB_ERR_INVALID_ARGUMENT;
        case errc::zero_field:           return BFB_ERR_ZERO_FIELD;
        case errc::filter_pole:          return BFB_ERR_FILTER_POLE;
        case errc::singular_matrix:      return BFB_ERR_SINGULAR_MATRIX;
        case errc::no_convergence:       return BFB_ERR_NO_CONVERGENCE;
        case errc::degenerate_field:     return BFB_ERR_DEGENERATE_FIELD;
        case errc::resonance_rejected:   return BFB_ERR_RESONANCE_REJECTED;
        case errc::oracle_not_converged: return BFB_ERR_ORACLE_NOT_CONVERGED;
        case errc::grid_mismatch:        return BFB_ERR_GRID_MISMATCH;
        case errc::insufficient_data:    return BFB_ERR_INSUFFICIENT_DATA;
        case errc::io_error:             return BFB_ERR_IO;
    }
    return BFB_ERR_UNKNOWN;
}

template <typename Fn>
bfb_status guarded(Fn&& fn) {
    try {
        fn();
        return BFB_OK;
    } catch (const borisfb::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BFB_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return BFB_ERR_UNKNOWN;
    }
}

bfb_status invalid(const char* what) {
    g_last_error = what;
    return BFB_ERR_INVALID_ARGUMENT;
}

borisfb::Vec3 to_vec(const double p[3]) { return {p[0], p[1], p[2]}; }

void from_vec(const borisfb::Vec3& v, double out[3]) {
    out[0] = v.x;
    out[1] = v.y;
    out[2] = v.z;
}

std::vector<borisfb::MethodConfig> parse_methods(const char* csv,
                                                 const borisfb::MethodConfig* base) {
    std::vector<borisfb::MethodConfig> out;
    std::stringstream ss(csv ? csv : "");
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        borisfb::MethodConfig cfg = base ? *base : borisfb::MethodConfig{};
        cfg.variant = borisfb::parse_variant(token);
        out.push_back(cfg);
    }
    if (out.empty()) borisfb::raise(borisfb::errc::invalid_argument, "empty method list");
    return out;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) borisfb::raise(borisfb::errc::io_error, "cannot open '" + path + "' for writing");
    out << body;
    if (!out) borisfb::raise(borisfb::errc::io_error, "short write to '" + path + "'");
}

}  // namespace

struct bfb_model {
    borisfb::FieldModel model;
};

struct bfb_config {
    borisfb::MethodConfig config;
};

struct bfb_trajectory {
    borisfb::Trajectory traj;
};

struct bfb_report {
    borisfb::ConvergenceReport report;
};

extern "C" {

const char* bfb_status_name(bfb_status status) {
    switch (status) {
        case BFB_OK:                       return "ok";
        case BFB_ERR_INVALID_ARGUMENT:     return "invalid-argument";
        case BFB_ERR_ZERO_FIELD:           return "zero-field";
        case BFB_ERR_FILTER_POLE:          return "filter-pole";
        case BFB_ERR_SINGULAR_MATRIX:      return "singular-matrix";
        case BFB_ERR_NO_CONVERGENCE:       return "no-convergence";
        case BFB_ERR_DEGENERATE_FIELD:     return "degenerate-field";
        case BFB_ERR_RESONANCE_REJECTED:   return "resonance-rejected";
        case BFB_ERR_ORACLE_NOT_CONVERGED: return "oracle-not-converged";
        case BFB_ERR_GRID_MISMATCH:        return "grid-mismatch";
        case BFB_ERR_INSUFFICIENT_DATA:    return "insufficient-data";
        case BFB_ERR_IO:                   return "io-error";
        case BFB_ERR_CHECK_FAILED:         return "check-failed";
        case BFB_ERR_UNKNOWN:              return "unknown";
    }
    return "unknown";
}

const char* bfb_version(void) { return borisfb::kVersion; }

const char* bfb_last_error(void) { return g_last_error.c_str(); }

bfb_status bfb_model_create(const char* preset, double epsilon, bfb_model** out) {
    if (!preset || !out) return invalid("null preset or output pointer");
    *out = nullptr;
    return guarded([&] { *out = new bfb_model{borisfb::make_preset(preset, epsilon)}; });
}

void bfb_model_destroy(bfb_model* model) { delete model; }

bfb_status bfb_model_eval_B(const bfb_model* model, const double x[3], double t, double out[3]) {
    if (!model || !x || !out) return invalid("null argument");
    return guarded([&] { from_vec(borisfb::eval_B(model->model, to_vec(x), t), out); });
}

bfb_status bfb_model_eval_E(const bfb_model* model, const double x[3], double t, double out[3]) {
    if (!model || !x || !out) return invalid("null argument");
    return guarded([&] { from_vec(borisfb::eval_E(model->model, to_vec(x), t), out); });
}

bfb_status bfb_config_create(const char* method, bfb_config** out) {
    if (!method || !out) return invalid("null method or output pointer");
    *out = nullptr;
    return guarded([&] {
        borisfb::MethodConfig cfg;
        cfg.variant = borisfb::parse_variant(method);
        *out = new bfb_config{cfg};
    });
}

void bfb_config_destroy(bfb_config* config) { delete config; }

bfb_status bfb_config_set_fixed_point(bfb_config* config, int max_iters, double tol) {
    if (!config) return invalid("null config");
    if (max_iters < 0 || !(tol >= 0.0)) return invalid("fixed-point settings out of range");
    config->config.fp_max_iters = max_iters;
    config->config.fp_tol = tol;
    return BFB_OK;
}

bfb_status bfb_config_set_guard(bfb_config* config, double c_min, int k_max, const char* policy) {
    if (!config || !policy) return invalid("null config or policy");
    if (!(c_min >= 0.0) || c_min >= 1.0 || k_max < 1) return invalid("guard settings out of range");
    if (std::strcmp(policy, "flag") == 0) config->config.guard_policy = borisfb::GuardPolicy::Flag;
    else if (std::strcmp(policy, "reject") == 0)
        config->config.guard_policy = borisfb::GuardPolicy::Reject;
    else return invalid("guard policy must be 'flag' or 'reject'");
    config->config.guard.c_min = c_min;
    config->config.guard.k_max = k_max;
    return BFB_OK;
}

bfb_status bfb_simulate(const bfb_model* model, const bfb_config* config, const double x0[3],
                        const double v0[3], double h, double t_end, bfb_trajectory** out) {
    if (!model || !config || !x0 || !v0 || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new bfb_trajectory{borisfb::run_trajectory(to_vec(x0), to_vec(v0), model->model,
                                                          config->config, h, t_end)};
    });
}

void bfb_trajectory_destroy(bfb_trajectory* traj) { delete traj; }

long bfb_trajectory_length(const bfb_trajectory* traj) {
    return traj ? static_cast<long>(traj->traj.states.size()) : 0;
}

bfb_status bfb_trajectory_state(const bfb_trajectory* traj, long i, double* t, double x[3],
                                double v_half[3], double v_node[3]) {
    if (!traj) return invalid("null trajectory");
    if (i < 0 || i >= bfb_trajectory_length(traj)) return invalid("state index out of range");
    const borisfb::ParticleState& s = traj->traj.states[static_cast<std::size_t>(i)];
    if (t) *t = s.t;
    if (x) from_vec(s.x, x);
    if (v_half) from_vec(s.v_half, v_half);
    if (v_node) from_vec(s.v_node, v_node);
    return BFB_OK;
}

bfb_status bfb_trajectory_write(const bfb_trajectory* traj, const char* path, const char* format) {
    if (!traj || !path || !format) return invalid("null argument");
    return guarded([&] {
        std::ostringstream body;
        if (std::strcmp(format, "csv") == 0) borisfb::write_trajectory_csv(traj->traj, body);
        else if (std::strcmp(format, "json") == 0) borisfb::write_trajectory_json(traj->traj, body);
        else borisfb::raise(borisfb::errc::invalid_argument, "format must be 'csv' or 'json'");
        write_text_file(path, body.str());
    });
}

bfb_status bfb_run_convergence(const char* preset, const double x0[3], const double v0[3],
                               double t_end, const double* epsilons, int n_epsilons,
                               const double* h_ratios, int n_ratios, const char* methods,
                               const char* err_mode, const bfb_config* base_config,
                               bfb_report** out) {
    if (!preset || !x0 || !v0 || !epsilons || !h_ratios || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        borisfb::ExperimentSpec spec;
        spec.preset = preset;
        spec.x0 = to_vec(x0);
        spec.v0 = to_vec(v0);
        spec.t_end = t_end;
        spec.epsilons.assign(epsilons, epsilons + n_epsilons);
        spec.h_ratios.assign(h_ratios, h_ratios + n_ratios);
        spec.methods = parse_methods(methods, base_config ? &base_config->config : nullptr);
        if (err_mode && std::strcmp(err_mode, "endpoint") == 0)
            spec.err_mode = borisfb::ErrMode::endpoint;
        else if (!err_mode || std::strcmp(err_mode, "sup-over-grid") == 0)
            spec.err_mode = borisfb::ErrMode::sup_over_grid;
        else
            borisfb::raise(borisfb::errc::invalid_argument,
                           "err_mode must be 'endpoint' or 'sup-over-grid'");
        *out = new bfb_report{borisfb::run_convergence(spec)};
    });
}

bfb_status bfb_run_scan(const char* preset, const double x0[3], const double v0[3], double t_end,
                        double epsilon, long k_from, long k_to, const char* methods,
                        const bfb_config* base_config, bfb_report** out) {
    if (!preset || !x0 || !v0 || !out) return invalid("null argument");
    if (k_from < 1 || k_to < k_from) return invalid("bad k range");
    *out = nullptr;
    return guarded([&] {
        borisfb::ExperimentSpec spec;
        spec.preset = preset;
        spec.x0 = to_vec(x0);
        spec.v0 = to_vec(v0);
        spec.t_end = t_end;
        spec.epsilons = {epsilon};
        for (long k = k_from; k <= k_to; ++k) spec.k_values.push_back(k);
        spec.methods = parse_methods(methods, base_config ? &base_config->config : nullptr);
        spec.err_mode = borisfb::ErrMode::endpoint;
        *out = new bfb_report{borisfb::run_resonance_scan(spec)};
    });
}

bfb_status bfb_run_convergence_paper(bfb_report** out) {
    if (!out) return invalid("null output pointer");
    *out = nullptr;
    return guarded(
        [&] { *out = new bfb_report{borisfb::run_convergence(borisfb::paper_converge_spec())}; });
}

bfb_status bfb_run_scan_paper(bfb_report** out) {
    if (!out) return invalid("null output pointer");
    *out = nullptr;
    return guarded(
        [&] { *out = new bfb_report{borisfb::run_resonance_scan(borisfb::paper_scan_spec())}; });
}

void bfb_report_destroy(bfb_report* report) { delete report; }

long bfb_report_num_cells(const bfb_report* report) {
    return report ? static_cast<long>(report->report.cells.size()) : 0;
}

bfb_status bfb_report_cell(const bfb_report* report, long i, char method[16], double* epsilon,
                           double* h, long* n_steps, double* err_x, double* err_vpar,
                           double* err_vperp, int* resonance_flag, int* failed) {
    if (!report) return invalid("null report");
    if (i < 0 || i >= bfb_report_num_cells(report)) return invalid("cell index out of range");
    const borisfb::Cell& c = report->report.cells[static_cast<std::size_t>(i)];
    if (method) std::snprintf(method, 16, "%s", c.method.c_str());
    if (epsilon) *epsilon = c.epsilon;
    if (h) *h = c.h;
    if (n_steps) *n_steps = c.n_steps;
    if (err_x) *err_x = c.err.err_x;
    if (err_vpar) *err_vpar = c.err.err_vpar;
    if (err_vperp) *err_vperp = c.err.err_vperp;
    if (resonance_flag) *resonance_flag = c.flagged ? 1 : 0;
    if (failed) *failed = c.failed ? 1 : 0;
    return BFB_OK;
}

bfb_status bfb_report_slope(const bfb_report* report, const char* method, double h_ratio,
                            const char* metric, double* out_slope) {
    if (!report || !method || !metric || !out_slope) return invalid("null argument");
    const borisfb::SlopeFit* fit = report->report.find_slope(method, h_ratio, metric);
    if (!fit) {
        g_last_error = "no slope fit for the requested method/ratio/metric";
        return BFB_ERR_INSUFFICIENT_DATA;
    }
    *out_slope = fit->slope;
    return BFB_OK;
}

bfb_status bfb_report_write(const bfb_report* report, const char* path, const char* format,
                            const char* csv_ref) {
    if (!report || !path || !format) return invalid("null argument");
    return guarded([&] {
        std::ostringstream body;
        if (std::strcmp(format, "csv") == 0) borisfb::write_report_csv(report->report, body);
        else if (std::strcmp(format, "json") == 0) borisfb::write_report_json(report->report, body);
        else if (std::strcmp(format, "gnuplot") == 0)
            borisfb::write_report_gnuplot(report->report, csv_ref ? csv_ref : "report.csv", body);
        else
            borisfb::raise(borisfb::errc::invalid_argument,
                           "format must be 'csv', 'json' or 'gnuplot'");
        write_text_file(path, body.str());
    });
}

bfb_status bfb_validate(int include_slow, int* failures) {
    if (failures) *failures = 0;
    return guarded([&] {
        const borisfb::ValidationReport report = borisfb::run_validation(include_slow != 0);
        for (const auto& c : report.checks)
            std::printf("%s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                        c.detail.c_str());
        std::fflush(stdout);
        if (failures) *failures = report.failures();
    });
}

}  // extern "C"
