// Command-line driver for the filtered-Boris library. Talks to the shared
// library exclusively through its C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "borisfb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;

int exit_code(bfb_status status) {
    if (status == BFB_OK) return kExitOk;
    std::fprintf(stderr, "error (%s): %s\n", bfb_status_name(status), bfb_last_error());
    return status == BFB_ERR_INVALID_ARGUMENT ? kExitBadInput : kExitFailure;
}

struct ConfigHandle {
    bfb_config* ptr = nullptr;
    ~ConfigHandle() { bfb_config_destroy(ptr); }
};

struct CommonOptions {
    int fp_iters = 2;
    double fp_tol = 1e-13;
    double c_min = 0.01;
    int k_max = 3;
    std::string guard_policy = "flag";

    void attach(CLI::App* cmd) {
        cmd->add_option("--fp-iters", fp_iters, "fixed-point iterations for implicit methods");
        cmd->add_option("--fp-tol", fp_tol, "fixed-point displacement tolerance");
        cmd->add_option("--c-min", c_min, "resonance guard lower bound on |sinc|");
        cmd->add_option("--k-max", k_max, "harmonics checked by the resonance guard");
        cmd->add_option("--guard-policy", guard_policy, "near-resonant steps: flag or reject")
            ->check(CLI::IsMember({"flag", "reject"}));
    }

    bfb_status build(const std::string& method, ConfigHandle& out) const {
        bfb_status st = bfb_config_create(method.c_str(), &out.ptr);
        if (st != BFB_OK) return st;
        st = bfb_config_set_fixed_point(out.ptr, fp_iters, fp_tol);
        if (st != BFB_OK) return st;
        return bfb_config_set_guard(out.ptr, c_min, k_max, guard_policy.c_str());
    }
};

int write_report(bfb_report* report, const std::string& out_path, const std::string& format,
                 bool gnuplot) {
    bfb_status st = bfb_report_write(report, out_path.c_str(), format.c_str(), nullptr);
    if (st != BFB_OK) return exit_code(st);
    std::printf("wrote %s\n", out_path.c_str());
    if (gnuplot) {
        std::string csv = out_path;
        if (format != "csv") {
            csv = out_path + ".csv";
            st = bfb_report_write(report, csv.c_str(), "csv", nullptr);
            if (st != BFB_OK) return exit_code(st);
            std::printf("wrote %s\n", csv.c_str());
        }
        const std::string gp = out_path + ".gp";
        st = bfb_report_write(report, gp.c_str(), "gnuplot", csv.c_str());
        if (st != BFB_OK) return exit_code(st);
        std::printf("wrote %s\n", gp.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boris / filtered Boris charged-particle integrators"};
    app.set_help_flag("--help", "print help");  // keep -h free for --h
    app.require_subcommand(1);

    // defaults shared by the experiment commands (the published test problem)
    std::vector<double> x0 = {1.0 / 3.0, 1.0 / 4.0, 1.0 / 2.0};
    std::vector<double> v0 = {2.0 / 5.0, 2.0 / 3.0, 1.0};

    // ---- simulate
    auto* sim = app.add_subcommand("simulate", "run one trajectory and write it out");
    sim->set_help_flag("--help", "print help");
    std::string sim_method = "imp-a", sim_preset = "paper-sec8";
    double sim_eps = 1.0 / 1024.0, sim_h = 0.0, sim_tend = 1.0;
    std::string sim_out, sim_format = "csv";
    CommonOptions sim_common;
    sim->add_option("--method", sim_method, "boris, exp-a, imp-a or twop-a");
    sim->add_option("--preset", sim_preset, "field preset name");
    sim->add_option("--epsilon", sim_eps, "scale parameter");
    sim->add_option("--h", sim_h, "step size")->required();
    sim->add_option("--t-end", sim_tend, "final time");
    sim->add_option("--out", sim_out, "output path (default trajectory.<format>)");
    sim->add_option("--format", sim_format)->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--x0", x0, "initial position")->expected(3);
    sim->add_option("--v0", v0, "initial velocity")->expected(3);
    sim_common.attach(sim);

    // ---- converge
    auto* conv = app.add_subcommand("converge", "epsilon sweep with log-log slope fits");
    bool conv_paper = false, conv_gnuplot = false;
    std::vector<double> conv_eps, conv_ratios;
    std::string conv_methods = "boris,exp-a,imp-a,twop-a";
    std::string conv_preset = "paper-sec8", conv_errmode = "sup-over-grid";
    std::string conv_out = "converge.csv", conv_format = "csv";
    double conv_tend = 1.0;
    CommonOptions conv_common;
    conv->add_flag("--paper", conv_paper, "the published sweep: eps = 2^-4..2^-13, h = eps,4eps,16eps");
    conv->add_option("--epsilons", conv_eps, "epsilon list, decreasing")->delimiter(',');
    conv->add_option("--h-ratios", conv_ratios, "h = ratio * epsilon list")->delimiter(',');
    conv->add_option("--methods", conv_methods, "comma-separated method list");
    conv->add_option("--err-mode", conv_errmode)->check(CLI::IsMember({"sup-over-grid", "endpoint"}));
    conv->add_option("--preset", conv_preset);
    conv->add_option("--t-end", conv_tend);
    conv->add_option("--out", conv_out);
    conv->add_option("--format", conv_format)->check(CLI::IsMember({"csv", "json"}));
    conv->add_flag("--gnuplot", conv_gnuplot, "also emit a gnuplot script");
    conv->add_option("--x0", x0)->expected(3);
    conv->add_option("--v0", v0)->expected(3);
    conv_common.attach(conv);

    // ---- scan
    auto* scan = app.add_subcommand("scan", "stepsize-resonance scan at fixed epsilon");
    bool scan_paper = false, scan_gnuplot = false;
    double scan_eps = 1.0 / 1024.0, scan_tend = 1.0;
    long scan_from = 60, scan_to = 600;
    std::string scan_methods = "boris,exp-a,imp-a,twop-a", scan_preset = "paper-sec8";
    std::string scan_out = "scan.csv", scan_format = "csv";
    CommonOptions scan_common;
    scan->add_flag("--paper", scan_paper, "the published scan: eps = 2^-10, h = 1/k, k = 60..600");
    scan->add_option("--epsilon", scan_eps);
    scan->add_option("--k-from", scan_from);
    scan->add_option("--k-to", scan_to);
    scan->add_option("--methods", scan_methods);
    scan->add_option("--preset", scan_preset);
    scan->add_option("--t-end", scan_tend);
    scan->add_option("--out", scan_out);
    scan->add_option("--format", scan_format)->check(CLI::IsMember({"csv", "json"}));
    scan->add_flag("--gnuplot", scan_gnuplot);
    scan->add_option("--x0", x0)->expected(3);
    scan->add_option("--v0", v0)->expected(3);
    scan_common.attach(scan);

    // ---- validate
    auto* val = app.add_subcommand("validate", "run the correctness suite, print pass/fail lines");
    bool val_quick = false;
    val->add_flag("--quick", val_quick, "skip the slow convergence/scan studies");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitBadInput;
    }

    if (sim->parsed()) {
        bfb_model* model = nullptr;
        bfb_status st = bfb_model_create(sim_preset.c_str(), sim_eps, &model);
        if (st != BFB_OK) return exit_code(st);
        ConfigHandle cfg;
        st = sim_common.build(sim_method, cfg);
        if (st != BFB_OK) {
            bfb_model_destroy(model);
            return exit_code(st);
        }
        bfb_trajectory* traj = nullptr;
        st = bfb_simulate(model, cfg.ptr, x0.data(), v0.data(), sim_h, sim_tend, &traj);
        bfb_model_destroy(model);
        if (st != BFB_OK) return exit_code(st);
        const std::string out_path = sim_out.empty() ? "trajectory." + sim_format : sim_out;
        st = bfb_trajectory_write(traj, out_path.c_str(), sim_format.c_str());
        const long states = bfb_trajectory_length(traj);
        bfb_trajectory_destroy(traj);
        if (st != BFB_OK) return exit_code(st);
        std::printf("wrote %s (%ld states)\n", out_path.c_str(), states);
        return kExitOk;
    }

    if (conv->parsed()) {
        bfb_report* report = nullptr;
        bfb_status st;
        if (conv_paper) {
            st = bfb_run_convergence_paper(&report);
        } else {
            if (conv_eps.empty() || conv_ratios.empty()) {
                std::fprintf(stderr, "converge needs --paper or both --epsilons and --h-ratios\n");
                return kExitBadInput;
            }
            ConfigHandle base;
            st = conv_common.build("imp-a", base);
            if (st != BFB_OK) return exit_code(st);
            st = bfb_run_convergence(conv_preset.c_str(), x0.data(), v0.data(), conv_tend,
                                     conv_eps.data(), static_cast<int>(conv_eps.size()),
                                     conv_ratios.data(), static_cast<int>(conv_ratios.size()),
                                     conv_methods.c_str(), conv_errmode.c_str(), base.ptr,
                                     &report);
        }
        if (st != BFB_OK) return exit_code(st);
        const int rc = write_report(report, conv_out, conv_format, conv_gnuplot);
        bfb_report_destroy(report);
        return rc;
    }

    if (scan->parsed()) {
        bfb_report* report = nullptr;
        bfb_status st;
        if (scan_paper) {
            st = bfb_run_scan_paper(&report);
        } else {
            ConfigHandle base;
            st = scan_common.build("imp-a", base);
            if (st != BFB_OK) return exit_code(st);
            st = bfb_run_scan(scan_preset.c_str(), x0.data(), v0.data(), scan_tend, scan_eps,
                              scan_from, scan_to, scan_methods.c_str(), base.ptr, &report);
        }
        if (st != BFB_OK) return exit_code(st);
        const int rc = write_report(report, scan_out, scan_format, scan_gnuplot);
        bfb_report_destroy(report);
        return rc;
    }

    if (val->parsed()) {
        int failures = 0;
        const bfb_status st = bfb_validate(val_quick ? 0 : 1, &failures);
        if (st != BFB_OK) return exit_code(st);
        std::printf("%d check(s) failed\n", failures);
        return failures == 0 ? kExitOk : kExitFailure;
    }

    return kExitBadInput;
}
